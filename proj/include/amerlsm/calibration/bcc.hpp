#pragma once

// Four-stage BCC97 calibration to American put quotes:
//   1. CIR short-rate parameters from zero-coupon bonds (see cir.hpp),
//   2. stochastic-volatility parameters with jumps switched off,
//   3. jump parameters on the short-maturity quotes,
//   4. joint refinement of all eight option parameters.
// Stages 2 and 3 grid-search before Nelder-Mead. Every objective evaluation
// reuses the same random draws, so the objective is a deterministic function
// of the parameters.

#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "amerlsm/calibration/cir.hpp"
#include "amerlsm/calibration/nelder_mead.hpp"
#include "amerlsm/error.hpp"
#include "amerlsm/lsm_pricer.hpp"
#include "amerlsm/market_data.hpp"
#include "amerlsm/stochastic_engine.hpp"

namespace amerlsm {

/// Indices into BccParams::to_array() of the eight option-model parameters.
enum ParamIndex : std::size_t {
    kKappaV = 0, kThetaV, kSigmaV, kRho, kV0, kLambda, kMuJ, kDelta,
    kKappaR, kThetaR, kSigmaR, kR0,
};

inline std::size_t param_index(std::string_view name) {
    for (std::size_t k = 0; k < BccParams::size; ++k) {
        if (BccParams::names[k] == name) {
            return k;
        }
    }
    throw validation_error("unknown parameter name '" + std::string(name) + "'");
}

struct OptimizerConfig {
    SimplexConfig simplex;
    /// Grid-search values per parameter name (stages 2 and 3).
    std::map<std::string, std::vector<double>> grid;
    /// Box per parameter name.
    std::map<std::string, std::pair<double, double>> bounds{
        {"kappa_v", {0.5, 50.0}}, {"theta_v", {1e-4, 0.25}}, {"sigma_v", {0.01, 2.0}},
        {"rho", {-0.999, 0.0}},   {"v0", {1e-5, 0.25}},      {"lambda", {0.0, 1.0}},
        {"mu_j", {-0.9, 0.5}},    {"delta", {1e-4, 0.5}},
    };
    /// Starting point for the option-model parameters (CIR part ignored).
    BccParams start{2.0, 0.04, 0.5, -0.7, 0.04, 0.1, -0.1, 0.1, 0.0, 0.0, 0.0, 0.0};

    void validate() const {
        simplex.validate();
        for (const auto& [name, range] : bounds) {
            param_index(name);
            require(std::isfinite(range.first) && std::isfinite(range.second) && range.first < range.second,
                    "OptimizerConfig: bounds for " + name + " must be finite with lo < hi");
        }
        for (const auto& [name, values] : grid) {
            param_index(name);
            for (double v : values) {
                require(std::isfinite(v), "OptimizerConfig: non-finite grid value for " + name);
            }
        }
        start.validate();
    }
};

struct StageRecord {
    int stage = 0;
    BccParams params_in;
    BccParams params_out;
    double objective_in = std::numeric_limits<double>::quiet_NaN();
    double objective_out = std::numeric_limits<double>::quiet_NaN();
    int evaluations = 0;
    double wall_time = 0.0;
};

struct CalibrationReport {
    std::vector<StageRecord> stages;
    BccParams final;
    /// Full-chain objective at `final`.
    double final_objective = 0.0;
    /// Set when a stage was skipped.
    std::vector<std::string> notes;
    /// Every parameter vector handed to the objective, in order.
    std::vector<BccParams> evaluated;
};

/// Mean squared difference between LSM model prices and mid prices, with
/// draws fixed per maturity group.
class ChainObjective {
public:
    ChainObjective(std::vector<OptionQuote> quotes, RegressorSpec regressor, GridSpec mc, PricingOptions options = {})
        : quotes_(std::move(quotes)), regressor_(std::move(regressor)), mc_(mc), options_(options) {
        require(!quotes_.empty(), "ChainObjective: no quotes");
        validate(regressor_);
        for (std::size_t q = 0; q < quotes_.size(); ++q) {
            const OptionQuote& quote = quotes_[q];
            auto it = std::find_if(groups_.begin(), groups_.end(), [&](const Group& g) {
                return g.spec.s0 == quote.spot && g.spec.horizon == quote.maturity_years;
            });
            if (it == groups_.end()) {
                GridSpec spec = mc_;
                spec.s0 = quote.spot;
                spec.horizon = quote.maturity_years;
                spec.validate();
                groups_.push_back({spec, generate_raw_draws(spec), {}});
                it = std::prev(groups_.end());
            }
            it->members.push_back(q);
        }
    }

    const std::vector<OptionQuote>& quotes() const { return quotes_; }

    /// Model price of every quote, in input order.
    std::vector<double> model_prices(const BccParams& params) const {
        std::vector<double> prices(quotes_.size());
        for (const Group& group : groups_) {
            const PathGrid grid = simulate(params, group.spec, group.raw);
            for (std::size_t q : group.members) {
                const PutContract contract{quotes_[q].strike, quotes_[q].maturity_years};
                prices[q] = price_american_put(grid, contract, regressor_, options_).price;
            }
        }
        return prices;
    }

    double operator()(const BccParams& params) const {
        const std::vector<double> prices = model_prices(params);
        double sum = 0.0;
        for (std::size_t q = 0; q < quotes_.size(); ++q) {
            const double diff = prices[q] - quotes_[q].mid_price;
            sum += diff * diff;
        }
        return sum / static_cast<double>(quotes_.size());
    }

private:
    struct Group {
        GridSpec spec;
        RawDraws raw;
        std::vector<std::size_t> members;
    };

    std::vector<OptionQuote> quotes_;
    RegressorSpec regressor_;
    GridSpec mc_;
    PricingOptions options_;
    std::vector<Group> groups_;
};

namespace detail {

struct StageOutcome {
    BccParams params;
    double objective = 0.0;
    int evaluations = 0;
};

/// Grid search over `free` (Cartesian product of the configured values,
/// coordinates without a grid stay at the start), then Nelder-Mead from
/// the best point seen. `f_start` is the objective at `start`.
template <typename Evaluate>
StageOutcome run_stage(const Evaluate& evaluate, const BccParams& start, double f_start,
                       const std::vector<std::size_t>& free, bool grid_search, const OptimizerConfig& config) {
    Box box;
    for (std::size_t k : free) {
        const auto it = config.bounds.find(std::string(BccParams::names[k]));
        require(it != config.bounds.end(), "OptimizerConfig: missing bounds for " + std::string(BccParams::names[k]));
        box.lower.push_back(it->second.first);
        box.upper.push_back(it->second.second);
    }
    auto embed = [&](const std::vector<double>& x) {
        auto a = start.to_array();
        for (std::size_t j = 0; j < free.size(); ++j) {
            a[free[j]] = x[j];
        }
        return BccParams::from_array(a);
    };

    StageOutcome out{start, f_start, 0};
    if (grid_search) {
        std::vector<std::vector<double>> axes;
        bool any = false;
        for (std::size_t j = 0; j < free.size(); ++j) {
            const auto it = config.grid.find(std::string(BccParams::names[free[j]]));
            if (it != config.grid.end() && !it->second.empty()) {
                axes.push_back(it->second);
                any = true;
            } else {
                axes.push_back({start.to_array()[free[j]]});
            }
        }
        if (any) {
            std::vector<std::size_t> counter(axes.size(), 0);
            while (true) {
                std::vector<double> x(axes.size());
                for (std::size_t j = 0; j < axes.size(); ++j) {
                    x[j] = axes[j][counter[j]];
                }
                box.clamp(x);
                const BccParams candidate = embed(x);
                const double f = evaluate(candidate);
                ++out.evaluations;
                if (f < out.objective) {
                    out = {candidate, f, out.evaluations};
                }
                std::size_t j = 0;
                while (j < axes.size() && ++counter[j] == axes[j].size()) {
                    counter[j] = 0;
                    ++j;
                }
                if (j == axes.size()) {
                    break;
                }
            }
        }
    }

    if (config.simplex.max_evaluations > 0) {
        std::vector<double> x0;
        const auto a = out.params.to_array();
        for (std::size_t k : free) {
            x0.push_back(a[k]);
        }
        const BccParams base = out.params;
        auto objective = [&](const std::vector<double>& x) {
            auto b = base.to_array();
            for (std::size_t j = 0; j < free.size(); ++j) {
                b[free[j]] = x[j];
            }
            return evaluate(BccParams::from_array(b));
        };
        const NelderMeadResult result = nelder_mead(objective, x0, config.simplex, box);
        out.evaluations += result.evaluations;
        if (result.min_value < out.objective) {
            auto b = base.to_array();
            for (std::size_t j = 0; j < free.size(); ++j) {
                b[free[j]] = result.argmin[j];
            }
            out.params = BccParams::from_array(b);
            out.objective = result.min_value;
        }
    }
    return out;
}

inline double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace detail

/// Runs stages 2-4 on top of an already calibrated short-rate model.
/// `stage1` becomes the first record; when absent, a record echoing `cir`
/// with undefined objectives is inserted.
inline CalibrationReport calibrate_bcc(const std::vector<OptionQuote>& quotes, const CirParams& cir,
                                       const RegressorSpec& regressor, const GridSpec& mc,
                                       const OptimizerConfig& config, std::optional<CirFit> stage1 = std::nullopt,
                                       const PricingOptions& options = {}) {
    cir.validate();
    config.validate();
    require(!quotes.empty(), "calibrate_bcc: no quotes");
    CalibrationReport report;

    BccParams start = config.start;
    start.kappa_r = cir.kappa_r;
    start.theta_r = cir.theta_r;
    start.sigma_r = cir.sigma_r;
    start.r0 = cir.r0;

    {
        StageRecord record;
        record.stage = 1;
        BccParams before = start;
        if (stage1) {
            before.kappa_r = stage1->params_in.kappa_r;
            before.theta_r = stage1->params_in.theta_r;
            before.sigma_r = stage1->params_in.sigma_r;
            before.r0 = stage1->params_in.r0;
            record.objective_in = stage1->objective_in;
            record.objective_out = stage1->objective_out;
            record.evaluations = stage1->evaluations;
            record.wall_time = stage1->wall_time;
        }
        record.params_in = before;
        record.params_out = start;
        report.stages.push_back(record);
    }

    const ChainObjective full(quotes, regressor, mc, options);
    auto full_eval = [&](const BccParams& p) {
        report.evaluated.push_back(p);
        return full(p);
    };

    // Stage 2: stochastic volatility, jumps off.
    BccParams stage2_in = start;
    stage2_in.lambda = 0.0;
    stage2_in.mu_j = 0.0;
    stage2_in.delta = 0.0;
    auto t0 = std::chrono::steady_clock::now();
    const double f2_in = full_eval(stage2_in);
    const detail::StageOutcome s2 =
        detail::run_stage(full_eval, stage2_in, f2_in, {kKappaV, kThetaV, kSigmaV, kRho, kV0}, true, config);
    report.stages.push_back({2, stage2_in, s2.params, f2_in, s2.objective, s2.evaluations + 1, detail::seconds_since(t0)});

    // Stage 3: jumps on short maturities, stochastic volatility frozen.
    std::vector<OptionQuote> short_quotes;
    for (const auto& q : quotes) {
        if (classify_maturity(q.maturity_years) == MaturityBucket::Short) {
            short_quotes.push_back(q);
        }
    }
    BccParams stage3_in = s2.params;
    stage3_in.lambda = config.start.lambda;
    stage3_in.mu_j = config.start.mu_j;
    stage3_in.delta = config.start.delta;
    BccParams stage4_in = stage3_in;
    if (short_quotes.empty()) {
        report.notes.push_back("stage 3 skipped: no short-maturity quotes");
    } else {
        t0 = std::chrono::steady_clock::now();
        const ChainObjective short_chain(short_quotes, regressor, mc, options);
        auto short_eval = [&](const BccParams& p) {
            report.evaluated.push_back(p);
            return short_chain(p);
        };
        const double f3_in = short_eval(stage3_in);
        const detail::StageOutcome s3 =
            detail::run_stage(short_eval, stage3_in, f3_in, {kLambda, kMuJ, kDelta}, true, config);
        report.stages.push_back(
            {3, stage3_in, s3.params, f3_in, s3.objective, s3.evaluations + 1, detail::seconds_since(t0)});
        stage4_in = s3.params;
    }

    // Stage 4: joint refinement from whichever of the stage 2 and stage 3
    // outputs fits the full chain better.
    t0 = std::chrono::steady_clock::now();
    double f4_in = full_eval(stage4_in);
    int stage4_evals = 1;
    if (s2.objective < f4_in) {
        stage4_in = s2.params;
        f4_in = s2.objective;
    }
    const detail::StageOutcome s4 = detail::run_stage(
        full_eval, stage4_in, f4_in, {kKappaV, kThetaV, kSigmaV, kRho, kV0, kLambda, kMuJ, kDelta}, false, config);
    stage4_evals += s4.evaluations;
    report.stages.push_back({4, stage4_in, s4.params, f4_in, s4.objective, stage4_evals, detail::seconds_since(t0)});

    report.final = s4.params;
    report.final_objective = s4.objective;
    return report;
}

}  // namespace amerlsm
