#pragma once

// Least-squares regression on a monomial basis of the standardized
// features, solved by complete orthogonal decomposition (minimum-norm when
// the design is rank deficient).

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "amerlsm/error.hpp"
#include "amerlsm/regressors/standardizer.hpp"

namespace amerlsm {

struct PolynomialSpec {
    int degree = 5;
    /// Keep only the first `terms` monomials in graded order.
    std::optional<int> terms;

    void validate() const {
        require(degree >= 0, "PolynomialSpec: degree must be >= 0");
        require(!terms || *terms >= 1, "PolynomialSpec: terms must be >= 1");
    }
};

/// Exponent vectors of all monomials in `features` variables with total
/// degree <= `degree`, ordered by total degree then lexicographically
/// (first feature's power descending).
inline std::vector<std::vector<int>> monomial_exponents(int features, int degree) {
    std::vector<std::vector<int>> out;
    std::vector<int> current(static_cast<std::size_t>(features), 0);
    for (int total = 0; total <= degree; ++total) {
        auto recurse = [&](auto&& self, int position, int remaining) -> void {
            if (position == features - 1) {
                current[static_cast<std::size_t>(position)] = remaining;
                out.push_back(current);
                return;
            }
            for (int power = remaining; power >= 0; --power) {
                current[static_cast<std::size_t>(position)] = power;
                self(self, position + 1, remaining - power);
            }
        };
        recurse(recurse, 0, total);
    }
    return out;
}

struct PolynomialModel {
    PolynomialSpec spec;
    Standardizer standardizer;
    std::vector<std::vector<int>> exponents;
    Eigen::VectorXd coefficients;

    Eigen::MatrixXd design(const Eigen::MatrixXd& x) const {
        const Eigen::MatrixXd z = standardizer.apply(x);
        const int max_power = spec.degree;
        Eigen::MatrixXd basis(z.rows(), static_cast<Eigen::Index>(exponents.size()));
        // powers[f][k] is column f of z raised to k
        std::vector<std::vector<Eigen::ArrayXd>> powers(static_cast<std::size_t>(z.cols()));
        for (Eigen::Index f = 0; f < z.cols(); ++f) {
            auto& p = powers[static_cast<std::size_t>(f)];
            p.emplace_back(Eigen::ArrayXd::Ones(z.rows()));
            for (int k = 1; k <= max_power; ++k) {
                p.emplace_back(p.back() * z.col(f).array());
            }
        }
        for (std::size_t j = 0; j < exponents.size(); ++j) {
            Eigen::ArrayXd column = Eigen::ArrayXd::Ones(z.rows());
            for (std::size_t f = 0; f < exponents[j].size(); ++f) {
                if (exponents[j][f] > 0) {
                    column *= powers[f][static_cast<std::size_t>(exponents[j][f])];
                }
            }
            basis.col(static_cast<Eigen::Index>(j)) = column.matrix();
        }
        return basis;
    }

    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const { return design(x) * coefficients; }

    /// Coefficients of 1, x, x^2, ... in the raw (unstandardized) feature.
    /// Univariate models only.
    Eigen::VectorXd raw_coefficients() const {
        require(standardizer.features() == 1, "raw_coefficients: univariate models only");
        const double mu = standardizer.mean(0);
        const double sd = standardizer.scale(0);
        Eigen::VectorXd raw = Eigen::VectorXd::Zero(coefficients.size());
        // ((x - mu)/sd)^k = sd^-k * sum_j C(k,j) x^j (-mu)^(k-j)
        for (Eigen::Index k = 0; k < coefficients.size(); ++k) {
            double binom = 1.0;
            for (Eigen::Index j = 0; j <= k; ++j) {
                if (j > 0) {
                    binom = binom * static_cast<double>(k - j + 1) / static_cast<double>(j);
                }
                raw(j) += coefficients(k) * binom * std::pow(-mu, static_cast<double>(k - j)) /
                          std::pow(sd, static_cast<double>(k));
            }
        }
        return raw;
    }
};

inline PolynomialModel fit_polynomial(const PolynomialSpec& spec, const Eigen::MatrixXd& x,
                                      const Eigen::VectorXd& y) {
    spec.validate();
    PolynomialModel model;
    model.spec = spec;
    model.standardizer = Standardizer::fit(x);
    model.exponents = monomial_exponents(static_cast<int>(x.cols()), spec.degree);
    if (spec.terms && static_cast<std::size_t>(*spec.terms) < model.exponents.size()) {
        model.exponents.resize(static_cast<std::size_t>(*spec.terms));
    }
    const Eigen::MatrixXd basis = model.design(x);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(basis);
    model.coefficients = cod.solve(y);
    require(model.coefficients.allFinite(), "polynomial fit: non-finite coefficients");
    return model;
}

}  // namespace amerlsm
