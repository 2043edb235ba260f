#pragma once

// Least-squares Monte Carlo for American puts on a simulated PathGrid.
//
// Backward induction keeps, per path, the pending cashflow and the step it
// is paid at. At each decision step the regression target is that cashflow
// discounted pathwise back to the current step; the fitted continuation
// value is compared with immediate exercise. Step 0 is handled by flooring
// the estimate at intrinsic value.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "amerlsm/error.hpp"
#include "amerlsm/regressors/regressor.hpp"
#include "amerlsm/stochastic_engine.hpp"

namespace amerlsm {

struct PutContract {
    double strike = 40.0;
    double maturity = 1.0;

    void validate() const {
        require(std::isfinite(strike) && strike > 0.0, "PutContract: strike must be > 0");
        require(std::isfinite(maturity) && maturity > 0.0, "PutContract: maturity must be > 0");
    }

    double payoff(double spot) const { return std::max(strike - spot, 0.0); }
};

enum class FeatureSet {
    price_only,  // S/K
    full_state,  // S/K, v, r
};

struct PricingOptions {
    bool itm_only = true;
    FeatureSet features = FeatureSet::price_only;
    bool control_variate = false;
};

/// Test hooks. `perfect_foresight` replaces the fitted continuation value
/// with the realised discounted cashflow of the same path.
struct LsmHooks {
    bool perfect_foresight = false;
};

struct PricingResult {
    double price = 0.0;
    double std_error = 0.0;
    /// Fraction of paths whose optimal exercise happens at each step 0..M.
    std::vector<double> exercise_fraction;
    double wall_time = 0.0;
    RegressorSpec regressor;
    /// Mean discounted cashflow before the intrinsic-value floor.
    double unfloored_mean = 0.0;
    /// Control-variate coefficient (0 when the control variate is off).
    double beta = 0.0;
};

/// One regression sample at a diagnostic step.
struct SurfaceRow {
    Eigen::Index path = 0;
    Eigen::VectorXd features;
    double target = 0.0;
    double fitted = 0.0;
};

inline Eigen::MatrixXd state_features(const PathGrid& grid, Eigen::Index step, double strike,
                                      const std::vector<Eigen::Index>& rows, FeatureSet set) {
    const Eigen::Index cols = set == FeatureSet::price_only ? 1 : 3;
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto r = static_cast<Eigen::Index>(k);
        const Eigen::Index path = rows[k];
        x(r, 0) = grid.index(path, step) / strike;
        if (set == FeatureSet::full_state) {
            x(r, 1) = grid.variance(path, step);
            x(r, 2) = grid.rate(path, step);
        }
    }
    return x;
}

namespace detail {

inline void check_pricing_inputs(const PathGrid& grid, const PutContract& contract, const RegressorSpec& spec) {
    contract.validate();
    validate(spec);
    require(grid.paths() >= 100, "price_american_put: need at least 100 paths");
    require(grid.steps() >= 1, "price_american_put: grid has no steps");
    const double horizon = grid.dt * static_cast<double>(grid.steps());
    require(std::abs(horizon - contract.maturity) <= 1e-9 * std::max(1.0, contract.maturity),
            "price_american_put: contract maturity does not match grid horizon");
}

struct Induction {
    std::vector<double> cashflow;
    std::vector<Eigen::Index> paid_at;
    std::vector<SurfaceRow> surface;
};

inline Induction backward_induction(const PathGrid& grid, const PutContract& contract, const RegressorSpec& spec,
                                    const PricingOptions& options, const LsmHooks& hooks,
                                    std::optional<Eigen::Index> capture_step) {
    const Eigen::Index n = grid.paths();
    const Eigen::Index m = grid.steps();
    Induction state;
    state.cashflow.resize(static_cast<std::size_t>(n));
    state.paid_at.assign(static_cast<std::size_t>(n), m);
    for (Eigen::Index i = 0; i < n; ++i) {
        state.cashflow[static_cast<std::size_t>(i)] = contract.payoff(grid.index(i, m));
    }

    std::vector<Eigen::Index> training;
    std::vector<Eigen::Index> candidates;
    training.reserve(static_cast<std::size_t>(n));
    candidates.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index t = m - 1; t >= 1; --t) {
        training.clear();
        candidates.clear();
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool itm = contract.payoff(grid.index(i, t)) > 0.0;
            if (itm) {
                candidates.push_back(i);
            }
            if (itm || !options.itm_only) {
                training.push_back(i);
            }
        }
        if (candidates.empty()) {
            continue;
        }

        Eigen::VectorXd targets(static_cast<Eigen::Index>(training.size()));
        for (std::size_t k = 0; k < training.size(); ++k) {
            const Eigen::Index i = training[k];
            const auto ui = static_cast<std::size_t>(i);
            targets(static_cast<Eigen::Index>(k)) =
                grid.discount(i, state.paid_at[ui]) / grid.discount(i, t) * state.cashflow[ui];
        }

        // continuation[k] belongs to candidates[k]
        Eigen::VectorXd continuation(static_cast<Eigen::Index>(candidates.size()));
        if (hooks.perfect_foresight) {
            for (std::size_t k = 0; k < candidates.size(); ++k) {
                const Eigen::Index i = candidates[k];
                const auto ui = static_cast<std::size_t>(i);
                continuation(static_cast<Eigen::Index>(k)) =
                    grid.discount(i, state.paid_at[ui]) / grid.discount(i, t) * state.cashflow[ui];
            }
        } else {
            const Eigen::MatrixXd x = state_features(grid, t, contract.strike, training, options.features);
            const FittedRegressor model = fit(spec, x, targets);
            if (capture_step && *capture_step == t) {
                const Eigen::VectorXd fitted = predict(model, x);
                for (std::size_t k = 0; k < training.size(); ++k) {
                    const auto r = static_cast<Eigen::Index>(k);
                    state.surface.push_back({training[k], x.row(r).transpose(), targets(r), fitted(r)});
                }
            }
            const Eigen::MatrixXd xc =
                options.itm_only ? x : state_features(grid, t, contract.strike, candidates, options.features);
            continuation = predict(model, xc);
        }

        for (std::size_t k = 0; k < candidates.size(); ++k) {
            const Eigen::Index i = candidates[k];
            const double exercise = contract.payoff(grid.index(i, t));
            if (exercise >= continuation(static_cast<Eigen::Index>(k))) {
                state.cashflow[static_cast<std::size_t>(i)] = exercise;
                state.paid_at[static_cast<std::size_t>(i)] = t;
            }
        }
    }
    return state;
}

}  // namespace detail

inline PricingResult price_american_put(const PathGrid& grid, const PutContract& contract, const RegressorSpec& spec,
                                        const PricingOptions& options = {}, const LsmHooks& hooks = {}) {
    const auto started = std::chrono::steady_clock::now();
    detail::check_pricing_inputs(grid, contract, spec);
    const Eigen::Index n = grid.paths();
    const Eigen::Index m = grid.steps();

    const detail::Induction state = detail::backward_induction(grid, contract, spec, options, hooks, std::nullopt);

    Eigen::VectorXd values(n);
    PricingResult result;
    result.exercise_fraction.assign(static_cast<std::size_t>(m) + 1, 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        values(i) = grid.discount(i, state.paid_at[ui]) * state.cashflow[ui];
        if (state.cashflow[ui] > 0.0) {
            result.exercise_fraction[static_cast<std::size_t>(state.paid_at[ui])] += 1.0;
        }
    }
    for (double& f : result.exercise_fraction) {
        f /= static_cast<double>(n);
    }

    const double s0 = grid.index(0, 0);
    if (options.control_variate) {
        const Eigen::VectorXd control =
            (grid.discount.col(m).cwiseProduct(grid.index.col(m)).array() - s0).matrix();
        const double control_mean = control.mean();
        const double value_mean = values.mean();
        const double cov = ((control.array() - control_mean) * (values.array() - value_mean)).sum();
        const double var = (control.array() - control_mean).square().sum();
        result.beta = var > 0.0 ? cov / var : 0.0;
        values -= result.beta * control;
    }

    const double mean = values.mean();
    const double var = (values.array() - mean).square().sum() / static_cast<double>(n - 1);
    result.unfloored_mean = mean;
    result.std_error = std::sqrt(var / static_cast<double>(n));
    result.price = std::max(mean, contract.payoff(s0));
    result.regressor = spec;
    result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

struct EuropeanEstimate {
    double price = 0.0;
    double std_error = 0.0;
};

/// Mean pathwise-discounted terminal payoff on the same grid.
inline EuropeanEstimate european_put_value(const PathGrid& grid, const PutContract& contract) {
    const Eigen::Index n = grid.paths();
    const Eigen::Index m = grid.steps();
    Eigen::VectorXd values(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        values(i) = grid.discount(i, m) * contract.payoff(grid.index(i, m));
    }
    const double mean = values.mean();
    const double var = (values.array() - mean).square().sum() / static_cast<double>(n - 1);
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

/// Regression samples and fitted continuation values at one decision step.
inline std::vector<SurfaceRow> continuation_surface(const PathGrid& grid, const PutContract& contract,
                                                    const RegressorSpec& spec, Eigen::Index step,
                                                    const PricingOptions& options = {}) {
    detail::check_pricing_inputs(grid, contract, spec);
    require(step >= 1 && step <= grid.steps() - 1, "continuation_surface: step must be in [1, steps-1]");
    return detail::backward_induction(grid, contract, spec, options, {}, step).surface;
}

inline void write_surface_csv(const std::vector<SurfaceRow>& rows, FeatureSet set, std::ostream& out) {
    out << (set == FeatureSet::price_only ? "path,moneyness,target,fitted\n"
                                          : "path,moneyness,variance,rate,target,fitted\n");
    out.precision(17);
    for (const auto& row : rows) {
        out << row.path;
        for (Eigen::Index f = 0; f < row.features.size(); ++f) {
            out << ',' << row.features(f);
        }
        out << ',' << row.target << ',' << row.fitted << '\n';
    }
}

}  // namespace amerlsm
