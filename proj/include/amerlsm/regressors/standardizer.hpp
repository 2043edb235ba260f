#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "amerlsm/error.hpp"

namespace amerlsm {

/// Per-column affine map to zero mean and unit variance, fitted on the
/// training rows. Constant columns keep scale 1.
struct Standardizer {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd scale;

    static Standardizer fit(const Eigen::MatrixXd& x) {
        Standardizer s;
        const double n = static_cast<double>(x.rows());
        s.mean = x.colwise().mean();
        s.scale.resize(x.cols());
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            const double var = (x.col(c).array() - s.mean(c)).square().sum() / n;
            const double sd = std::sqrt(var);
            s.scale(c) = (sd > 1e-12 * std::max(1.0, std::abs(s.mean(c)))) ? sd : 1.0;
        }
        return s;
    }

    static Standardizer identity(Eigen::Index features) {
        return {Eigen::RowVectorXd::Zero(features), Eigen::RowVectorXd::Ones(features)};
    }

    Eigen::Index features() const { return mean.size(); }

    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
        require(x.cols() == features(), "predict: feature count does not match the trained model");
        return (x.rowwise() - mean).array().rowwise() / scale.array();
    }
};

inline void require_finite(const Eigen::MatrixXd& x, const char* what) {
    if (!x.allFinite()) {
        throw validation_error(std::string(what) + ": non-finite entries");
    }
}

}  // namespace amerlsm
