#pragma once

// CIR zero-coupon bond prices and their least-squares calibration.

#include <chrono>
#include <cmath>
#include <vector>

#include "amerlsm/calibration/nelder_mead.hpp"
#include "amerlsm/error.hpp"
#include "amerlsm/market_data.hpp"

namespace amerlsm {

struct CirParams {
    double kappa_r = 0.0;
    double theta_r = 0.0;
    double sigma_r = 0.0;
    double r0 = 0.0;

    void validate() const {
        require(std::isfinite(kappa_r) && std::isfinite(theta_r) && std::isfinite(sigma_r) && std::isfinite(r0),
                "CirParams: non-finite parameter");
        require(kappa_r >= 0.0 && theta_r >= 0.0 && sigma_r >= 0.0, "CirParams: kappa_r, theta_r, sigma_r must be >= 0");
    }
};

/// P(0, T) = A(T) exp(-B(T) r0). Evaluated in a cancellation-free form:
/// with gamma = sqrt(kappa^2 + 2 sigma^2) and eps = gamma - kappa
/// = 2 sigma^2 / (gamma + kappa),
///   B = -2 expm1(-gamma T) / (gamma + kappa + eps e^{-gamma T})
///   ln A = (2 kappa theta / sigma^2)
///          * (-eps T / 2 - log1p(eps expm1(-gamma T) / (2 gamma)))
/// which stays accurate as sigma -> 0. At sigma = 0 the deterministic
/// mean-reverting rate is integrated exactly.
inline double cir_bond_price(const CirParams& p, double maturity) {
    p.validate();
    require(maturity > 0.0, "cir_bond_price: maturity must be > 0");
    const double t = maturity;
    const double kappa = p.kappa_r;
    const double s2 = p.sigma_r * p.sigma_r;
    if (s2 == 0.0 || kappa + std::sqrt(kappa * kappa + 2.0 * s2) == 0.0) {
        const double b = kappa > 0.0 ? -std::expm1(-kappa * t) / kappa : t;
        const double integral = p.theta_r * (t - b) + p.r0 * b;
        return std::exp(-integral);
    }
    const double gamma = std::sqrt(kappa * kappa + 2.0 * s2);
    const double eps = 2.0 * s2 / (gamma + kappa);
    const double decay = std::exp(-gamma * t);
    const double one_minus_decay = -std::expm1(-gamma * t);
    const double b = 2.0 * one_minus_decay / (gamma + kappa + eps * decay);
    const double log_a =
        (2.0 * kappa * p.theta_r / s2) * (-0.5 * eps * t - std::log1p(-eps * one_minus_decay / (2.0 * gamma)));
    return std::exp(log_a - b * p.r0);
}

/// Continuously-compounded short rate implied by the shortest bond.
inline double implied_short_rate(const std::vector<ZeroBondQuote>& bonds) {
    require(!bonds.empty(), "implied_short_rate: no bonds");
    const auto shortest = std::min_element(bonds.begin(), bonds.end(), [](const auto& a, const auto& b) {
        return a.maturity_years < b.maturity_years;
    });
    return -std::log(shortest->price) / shortest->maturity_years;
}

inline double cir_objective(const CirParams& p, const std::vector<ZeroBondQuote>& bonds) {
    double sum = 0.0;
    for (const auto& bond : bonds) {
        const double diff = cir_bond_price(p, bond.maturity_years) - bond.price;
        sum += diff * diff;
    }
    return sum;
}

struct CirSettings {
    SimplexConfig simplex{1.0, 2.0, 0.5, 0.5, 4000, 1e-20};
    Box bounds{{1e-4, 0.0, 0.0}, {10.0, 1.0, 1.0}};
    /// Nelder-Mead is restarted from its own result while that keeps
    /// improving the objective, at most this many times.
    int restarts = 8;
};

struct CirFit {
    CirParams params_in;
    CirParams params;
    double objective_in = 0.0;
    double objective_out = 0.0;
    int evaluations = 0;
    double wall_time = 0.0;
};

/// Minimises the sum of squared bond price errors over (kappa_r, theta_r,
/// sigma_r) with r0 held fixed. The start is kappa_r = 0.5, theta_r = the
/// longest bond's yield (at least 1e-4) and sigma_r = 0.05.
inline CirFit calibrate_cir(const std::vector<ZeroBondQuote>& bonds, double r0, const CirSettings& settings = {}) {
    const auto started = std::chrono::steady_clock::now();
    require(bonds.size() >= 3, "calibrate_cir: need at least 3 bond quotes");
    require(std::isfinite(r0), "calibrate_cir: r0 must be finite");
    const auto longest = std::max_element(bonds.begin(), bonds.end(), [](const auto& a, const auto& b) {
        return a.maturity_years < b.maturity_years;
    });
    const double long_yield = -std::log(longest->price) / longest->maturity_years;

    CirFit fit;
    fit.params_in = {0.5, std::max(long_yield, 1e-4), 0.05, r0};
    auto objective = [&](const std::vector<double>& x) {
        return cir_objective({x[0], x[1], x[2], r0}, bonds);
    };
    std::vector<double> point{fit.params_in.kappa_r, fit.params_in.theta_r, fit.params_in.sigma_r};
    settings.bounds.clamp(point);
    fit.objective_in = objective(point);
    double best = fit.objective_in;
    for (int round = 0; round <= settings.restarts; ++round) {
        const NelderMeadResult result = nelder_mead(objective, point, settings.simplex, settings.bounds);
        fit.evaluations += result.evaluations;
        const bool improved = result.min_value < best;
        if (result.min_value <= best) {
            point = result.argmin;
            best = result.min_value;
        }
        if (!improved || settings.simplex.max_evaluations <= 1) {
            break;
        }
    }
    fit.params = {point[0], point[1], point[2], r0};
    fit.objective_out = best;
    fit.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return fit;
}

}  // namespace amerlsm
