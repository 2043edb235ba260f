#pragma once

// BCC97 path simulation: Heston-type variance, CIR short rate and
// log-normal compound-Poisson jumps, discretised with full truncation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string_view>

#include <Eigen/Dense>

#include "amerlsm/error.hpp"
#include "amerlsm/random.hpp"

namespace amerlsm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct BccParams {
    double kappa_v = 0.0;
    double theta_v = 0.0;
    double sigma_v = 0.0;
    double rho = 0.0;
    double v0 = 0.0;
    double lambda = 0.0;
    double mu_j = 0.0;
    double delta = 0.0;
    double kappa_r = 0.0;
    double theta_r = 0.0;
    double sigma_r = 0.0;
    double r0 = 0.0;

    static constexpr std::size_t size = 12;
    static constexpr std::array<std::string_view, size> names = {
        "kappa_v", "theta_v", "sigma_v", "rho", "v0", "lambda",
        "mu_j", "delta", "kappa_r", "theta_r", "sigma_r", "r0"};

    std::array<double, size> to_array() const {
        return {kappa_v, theta_v, sigma_v, rho, v0, lambda,
                mu_j, delta, kappa_r, theta_r, sigma_r, r0};
    }

    static BccParams from_array(const std::array<double, size>& a) {
        return {a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7], a[8], a[9], a[10], a[11]};
    }

    void validate() const {
        for (double value : to_array()) {
            require(std::isfinite(value), "BccParams: non-finite parameter");
        }
        require(kappa_v >= 0.0 && kappa_r >= 0.0, "BccParams: mean-reversion speeds must be >= 0");
        require(sigma_v >= 0.0 && sigma_r >= 0.0, "BccParams: volatilities must be >= 0");
        require(std::abs(rho) <= 1.0, "BccParams: |rho| must be <= 1");
        require(v0 >= 0.0, "BccParams: v0 must be >= 0");
        require(lambda >= 0.0, "BccParams: lambda must be >= 0");
        require(delta >= 0.0, "BccParams: delta must be >= 0");
        require(mu_j > -1.0, "BccParams: mu_j must be > -1");
    }

    /// Drift correction making the discounted index a martingale.
    double jump_compensator() const {
        return lambda * (std::exp(mu_j + 0.5 * delta * delta) - 1.0);
    }

    friend bool operator==(const BccParams&, const BccParams&) = default;
};

/// Constant-coefficient Black-Scholes dynamics expressed as BCC97 parameters.
inline BccParams black_scholes_params(double rate, double sigma) {
    BccParams p;
    p.kappa_v = 1.0;
    p.theta_v = sigma * sigma;
    p.v0 = sigma * sigma;
    p.kappa_r = 1.0;
    p.theta_r = rate;
    p.r0 = rate;
    return p;
}

struct GridSpec {
    double s0 = 100.0;
    double horizon = 1.0;
    int steps = 1;
    int paths = 2;
    std::uint64_t seed = 0;
    bool antithetic = true;
    bool moment_match = true;

    double dt() const { return horizon / steps; }

    void validate() const {
        require(std::isfinite(s0) && s0 > 0.0, "GridSpec: s0 must be > 0");
        require(std::isfinite(horizon) && horizon > 0.0, "GridSpec: horizon must be > 0");
        require(steps >= 1, "GridSpec: steps must be >= 1");
        require(paths >= 2, "GridSpec: paths must be >= 2");
        require(!antithetic || paths % 2 == 0, "GridSpec: paths must be even when antithetic is on");
    }
};

/// Parameter-free draws: independent normals w1..w4 and the uniforms that
/// drive the Poisson counts. All matrices are [paths x steps].
struct RawDraws {
    Matrix w1, w2, w3, w4;
    Matrix jump_uniform;
};

/// Draws consumed by the simulator. corr(z1, z2) = rho; z3, z4 independent.
struct DrawBlock {
    Matrix z1, z2, z3, z4;
    Matrix y;
};

struct PathGrid {
    Matrix index;
    Matrix variance;
    Matrix rate;
    Matrix discount;
    double dt = 0.0;

    Eigen::Index paths() const { return index.rows(); }
    Eigen::Index steps() const { return index.cols() - 1; }
};

/// Test hooks that switch off parts of the scheme to demonstrate what they
/// are for. Production code leaves them at their defaults.
struct SimulationHooks {
    bool disable_jump_compensator = false;
    /// Use the end-of-step variance v_t in the index step instead of v_s.
    /// v_t is correlated with z1 through z2, which biases the drift.
    bool end_of_step_variance = false;
};

/// Draw order: path p reads stream p (or p/2 under antithetic sampling, the
/// odd member negating the normals). Within a stream, step t uses counters
/// 5t..5t+4: two Box-Muller pairs giving (w1, w2) and (w3, w4), then the
/// Poisson uniform.
inline RawDraws generate_raw_draws(const GridSpec& spec) {
    spec.validate();
    const Eigen::Index n = spec.paths;
    const Eigen::Index m = spec.steps;
    RawDraws raw{Matrix(n, m), Matrix(n, m), Matrix(n, m), Matrix(n, m), Matrix(n, m)};
    for (Eigen::Index p = 0; p < n; ++p) {
        const bool mirrored = spec.antithetic && (p % 2 == 1);
        const std::uint64_t stream = spec.antithetic ? static_cast<std::uint64_t>(p / 2)
                                                     : static_cast<std::uint64_t>(p);
        const rng::CounterStream gen(spec.seed, stream);
        const double sign = mirrored ? -1.0 : 1.0;
        for (Eigen::Index t = 0; t < m; ++t) {
            const auto base = static_cast<std::uint64_t>(5 * t);
            double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
            rng::box_muller(gen.uniform(base), gen.uniform(base + 1), a, b);
            rng::box_muller(gen.uniform(base + 2), gen.uniform(base + 3), c, d);
            raw.w1(p, t) = sign * a;
            raw.w2(p, t) = sign * b;
            raw.w3(p, t) = sign * c;
            raw.w4(p, t) = sign * d;
            raw.jump_uniform(p, t) = gen.uniform(base + 4);
        }
    }
    return raw;
}

/// Shift and rescale every column to sample mean 0 and sample (n-1)
/// standard deviation 1. Columns with zero spread are only centred.
inline void moment_match_columns(Matrix& z) {
    const double n = static_cast<double>(z.rows());
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
        auto col = z.col(c);
        const double mean = col.mean();
        col.array() -= mean;
        const double sd = std::sqrt(col.squaredNorm() / (n - 1.0));
        if (sd > 0.0) {
            col /= sd;
        }
    }
}

inline DrawBlock correlate_draws(const RawDraws& raw, const GridSpec& spec, double rho, double lambda) {
    require(std::abs(rho) <= 1.0, "generate_draws: |rho| must be <= 1");
    require(lambda >= 0.0, "generate_draws: lambda must be >= 0");
    DrawBlock block;
    block.z1 = raw.w1;
    block.z2 = rho * raw.w1 + std::sqrt(1.0 - rho * rho) * raw.w2;
    block.z3 = raw.w3;
    block.z4 = raw.w4;
    if (spec.moment_match) {
        moment_match_columns(block.z1);
        moment_match_columns(block.z2);
        moment_match_columns(block.z3);
        moment_match_columns(block.z4);
    }
    const double mean = lambda * spec.dt();
    block.y = raw.jump_uniform.unaryExpr(
        [mean](double u) { return static_cast<double>(rng::poisson_inverse(u, mean)); });
    return block;
}

inline DrawBlock generate_draws(const GridSpec& spec, double rho, double lambda) {
    return correlate_draws(generate_raw_draws(spec), spec, rho, lambda);
}

inline PathGrid simulate(const BccParams& params, const GridSpec& spec, const DrawBlock& draws,
                         const SimulationHooks& hooks = {}) {
    params.validate();
    spec.validate();
    const Eigen::Index n = spec.paths;
    const Eigen::Index m = spec.steps;
    require(draws.z1.rows() == n && draws.z1.cols() == m, "simulate: draw block does not match grid");

    const double dt = spec.dt();
    const double sqrt_dt = std::sqrt(dt);
    const double compensator = hooks.disable_jump_compensator ? 0.0 : params.jump_compensator();

    PathGrid grid{Matrix(n, m + 1), Matrix(n, m + 1), Matrix(n, m + 1), Matrix(n, m + 1), dt};
    for (Eigen::Index i = 0; i < n; ++i) {
        double v_aux = params.v0;
        double r_aux = params.r0;
        double s = spec.s0;
        double discount = 1.0;
        grid.index(i, 0) = s;
        grid.variance(i, 0) = std::max(v_aux, 0.0);
        grid.rate(i, 0) = std::max(r_aux, 0.0);
        grid.discount(i, 0) = discount;
        for (Eigen::Index t = 0; t < m; ++t) {
            const double v_prev = std::max(v_aux, 0.0);
            const double r_prev = std::max(r_aux, 0.0);
            v_aux += params.kappa_v * (params.theta_v - v_prev) * dt +
                     params.sigma_v * std::sqrt(v_prev) * sqrt_dt * draws.z2(i, t);
            r_aux += params.kappa_r * (params.theta_r - r_prev) * dt +
                     params.sigma_r * std::sqrt(r_prev) * sqrt_dt * draws.z3(i, t);
            const double v_next = std::max(v_aux, 0.0);
            const double r_next = std::max(r_aux, 0.0);
            const double r_bar = 0.5 * (r_next + r_prev);
            const double v_step = hooks.end_of_step_variance ? v_next : v_prev;

            double multiplier = std::exp((r_bar - compensator - 0.5 * v_step) * dt +
                                         std::sqrt(v_step) * sqrt_dt * draws.z1(i, t));
            const double jumps = draws.y(i, t);
            if (jumps != 0.0) {
                multiplier += (std::exp(params.mu_j + params.delta * draws.z4(i, t)) - 1.0) * jumps;
            }
            s *= std::max(multiplier, 0.0);
            discount *= std::exp(-r_bar * dt);

            grid.index(i, t + 1) = s;
            grid.variance(i, t + 1) = v_next;
            grid.rate(i, t + 1) = r_next;
            grid.discount(i, t + 1) = discount;
        }
    }
    return grid;
}

inline PathGrid simulate(const BccParams& params, const GridSpec& spec, const RawDraws& raw,
                         const SimulationHooks& hooks = {}) {
    return simulate(params, spec, correlate_draws(raw, spec, params.rho, params.lambda), hooks);
}

inline PathGrid simulate(const BccParams& params, const GridSpec& spec, const SimulationHooks& hooks = {}) {
    return simulate(params, spec, generate_draws(spec, params.rho, params.lambda), hooks);
}

struct MartingaleEstimate {
    double estimate = 0.0;
    double std_error = 0.0;

    /// Distance from the target in standard errors (0 when both coincide).
    double z_score(double target) const {
        const double gap = estimate - target;
        if (std_error == 0.0) {
            return gap == 0.0 ? 0.0 : std::copysign(INFINITY, gap);
        }
        return gap / std_error;
    }
};

/// Sample mean and standard error of the discounted terminal index.
inline MartingaleEstimate martingale_diagnostic(const PathGrid& grid) {
    const Eigen::Index n = grid.paths();
    const Eigen::Index m = grid.steps();
    const Vector values = grid.discount.col(m).cwiseProduct(grid.index.col(m));
    const double mean = values.mean();
    double std_error = 0.0;
    if (n > 1) {
        const double var = (values.array() - mean).square().sum() / static_cast<double>(n - 1);
        std_error = std::sqrt(var / static_cast<double>(n));
    }
    return {mean, std_error};
}

/// Debug dump with header path,step,index,variance,rate,discount.
inline void write_paths_csv(const PathGrid& grid, std::ostream& out) {
    out << "path,step,index,variance,rate,discount\n";
    out.precision(17);
    for (Eigen::Index i = 0; i < grid.paths(); ++i) {
        for (Eigen::Index t = 0; t <= grid.steps(); ++t) {
            out << i << ',' << t << ',' << grid.index(i, t) << ',' << grid.variance(i, t) << ','
                << grid.rate(i, t) << ',' << grid.discount(i, t) << '\n';
        }
    }
}

}  // namespace amerlsm
