#pragma once

// Uniform fit/predict over the three continuation-value regressors.

#include <string>
#include <type_traits>
#include <variant>

#include <Eigen/Dense>

#include "amerlsm/error.hpp"
#include "amerlsm/regressors/boosted_trees.hpp"
#include "amerlsm/regressors/mlp.hpp"
#include "amerlsm/regressors/polynomial.hpp"
#include "amerlsm/regressors/standardizer.hpp"

namespace amerlsm {

using RegressorSpec = std::variant<PolynomialSpec, BoostedTreesSpec, MlpSpec>;
using FittedRegressor = std::variant<PolynomialModel, BoostedTreesModel, MlpModel>;

inline std::string regressor_name(const RegressorSpec& spec) {
    return std::visit(
        [](const auto& s) -> std::string {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, PolynomialSpec>) {
                return "polynomial";
            } else if constexpr (std::is_same_v<T, BoostedTreesSpec>) {
                return "trees";
            } else {
                return "mlp";
            }
        },
        spec);
}

inline void validate(const RegressorSpec& spec) {
    std::visit([](const auto& s) { s.validate(); }, spec);
}

inline FittedRegressor fit(const RegressorSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    require(x.rows() >= 1, "fit: need at least one sample");
    require(x.cols() >= 1, "fit: need at least one feature");
    require(x.rows() == y.size(), "fit: x and y row counts differ");
    require_finite(x, "fit: x");
    require_finite(y, "fit: y");
    return std::visit(
        [&](const auto& s) -> FittedRegressor {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, PolynomialSpec>) {
                return fit_polynomial(s, x, y);
            } else if constexpr (std::is_same_v<T, BoostedTreesSpec>) {
                return fit_boosted_trees(s, x, y);
            } else {
                return fit_mlp(s, x, y);
            }
        },
        spec);
}

inline Eigen::VectorXd predict(const FittedRegressor& model, const Eigen::MatrixXd& x) {
    require_finite(x, "predict: x");
    Eigen::VectorXd out = std::visit([&](const auto& m) { return m.predict(x); }, model);
    require_finite(out, "predict: output");
    return out;
}

}  // namespace amerlsm
