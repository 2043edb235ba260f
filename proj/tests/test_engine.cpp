#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "amerlsm/stochastic_engine.hpp"

using namespace amerlsm;

namespace {

BccParams table_params() {
    return BccParams{20.850, 0.012, 0.712, -0.984, 0.002, 0.0001, -0.378, 0.0005, 0.123, 0.066, 0.001, 0.01};
}

// Straight transcription of the Euler full-truncation step, used as an
// oracle for a handful of paths.
struct OraclePath {
    std::vector<double> s, v, r, b;
};

OraclePath oracle_path(const BccParams& p, double s0, double dt, const DrawBlock& d, Eigen::Index i) {
    OraclePath out;
    double vt = p.v0, rt = p.r0, s = s0, b = 1.0;
    out.s.push_back(s);
    out.v.push_back(std::max(vt, 0.0));
    out.r.push_back(std::max(rt, 0.0));
    out.b.push_back(b);
    const double rf = p.lambda * (std::exp(p.mu_j + 0.5 * p.delta * p.delta) - 1.0);
    for (Eigen::Index t = 0; t < d.z1.cols(); ++t) {
        const double vs = std::max(vt, 0.0);
        const double rs = std::max(rt, 0.0);
        vt = vt + p.kappa_v * (p.theta_v - vs) * dt + p.sigma_v * std::sqrt(vs * dt) * d.z2(i, t);
        rt = rt + p.kappa_r * (p.theta_r - rs) * dt + p.sigma_r * std::sqrt(rs * dt) * d.z3(i, t);
        const double rbar = 0.5 * (rs + std::max(rt, 0.0));
        const double m = std::exp((rbar - rf - vs / 2.0) * dt + std::sqrt(vs * dt) * d.z1(i, t)) +
                         (std::exp(p.mu_j + p.delta * d.z4(i, t)) - 1.0) * d.y(i, t);
        s = s * (m > 0.0 ? m : 0.0);
        b = b * std::exp(-rbar * dt);
        out.s.push_back(s);
        out.v.push_back(std::max(vt, 0.0));
        out.r.push_back(std::max(rt, 0.0));
        out.b.push_back(b);
    }
    return out;
}

}  // namespace

TEST(BccParams, ValidationRejectsOutOfDomainValues) {
    EXPECT_NO_THROW(table_params().validate());
    auto bad = table_params();
    bad.rho = -1.01;
    EXPECT_THROW(bad.validate(), validation_error);
    bad = table_params();
    bad.mu_j = -1.0;
    EXPECT_THROW(bad.validate(), validation_error);
    bad = table_params();
    bad.delta = -0.1;
    EXPECT_THROW(bad.validate(), validation_error);
    bad = table_params();
    bad.v0 = -1e-9;
    EXPECT_THROW(bad.validate(), validation_error);
    bad = table_params();
    bad.lambda = NAN;
    EXPECT_THROW(bad.validate(), validation_error);
}

TEST(BccParams, ArrayRoundTrip) {
    const auto p = table_params();
    EXPECT_EQ(BccParams::from_array(p.to_array()), p);
    EXPECT_EQ(BccParams::names[0], "kappa_v");
    EXPECT_EQ(BccParams::names[11], "r0");
}

TEST(GridSpec, RejectsOddPathsWithAntithetic) {
    GridSpec spec{100.0, 1.0, 4, 11, 1, true, false};
    EXPECT_THROW(spec.validate(), validation_error);
    spec.antithetic = false;
    EXPECT_NO_THROW(spec.validate());
    EXPECT_THROW((GridSpec{100.0, 0.0, 4, 10}.validate()), validation_error);
    EXPECT_THROW((GridSpec{100.0, 1.0, 0, 10}.validate()), validation_error);
}

TEST(Draws, AntitheticPairsNegateAndColumnsSumToZero) {
    const GridSpec spec{100.0, 1.0, 6, 400, 3, true, false};
    const RawDraws raw = generate_raw_draws(spec);
    for (Eigen::Index p = 0; p < spec.paths; p += 2) {
        for (Eigen::Index t = 0; t < spec.steps; ++t) {
            EXPECT_EQ(raw.w1(p + 1, t), -raw.w1(p, t));
            EXPECT_EQ(raw.w4(p + 1, t), -raw.w4(p, t));
            EXPECT_EQ(raw.jump_uniform(p + 1, t), raw.jump_uniform(p, t));
        }
    }
    const DrawBlock d = correlate_draws(raw, spec, -0.5, 0.0);
    for (Eigen::Index t = 0; t < spec.steps; ++t) {
        EXPECT_NEAR(d.z1.col(t).sum(), 0.0, 1e-10);
        EXPECT_NEAR(d.z2.col(t).sum(), 0.0, 1e-10);
    }
}

TEST(Draws, MomentMatchingIsExact) {
    const GridSpec spec{100.0, 1.0, 5, 1000, 11, false, true};
    const DrawBlock d = generate_draws(spec, -0.7, 0.3);
    for (const Matrix* z : {&d.z1, &d.z2, &d.z3, &d.z4}) {
        for (Eigen::Index c = 0; c < z->cols(); ++c) {
            const double mean = z->col(c).mean();
            const double sd = std::sqrt((z->col(c).array() - mean).square().sum() / (z->rows() - 1));
            EXPECT_NEAR(mean, 0.0, 1e-12);
            EXPECT_NEAR(sd, 1.0, 1e-12);
        }
    }
}

TEST(Draws, ZeroIntensityGivesNoJumps) {
    const GridSpec spec{100.0, 1.0, 5, 200, 1};
    const DrawBlock d = generate_draws(spec, 0.0, 0.0);
    EXPECT_EQ(d.y.maxCoeff(), 0.0);
    EXPECT_EQ(d.y.minCoeff(), 0.0);
}

TEST(Draws, JumpCountMeanMatchesIntensity) {
    const GridSpec spec{100.0, 1.0, 10, 20000, 4, false, false};
    const double lambda = 2.0;
    const DrawBlock d = generate_draws(spec, 0.0, lambda);
    const double mean = lambda * spec.dt();
    const double n = static_cast<double>(d.y.size());
    EXPECT_NEAR(d.y.mean(), mean, 4.0 * std::sqrt(mean / n));
}

TEST(Draws, CorrelationOfFirstTwoNormalsTargetsRho) {
    const GridSpec spec{100.0, 1.0, 1, 40000, 8, false, false};
    for (double rho : {-0.9, 0.0, 0.6}) {
        const DrawBlock d = generate_draws(spec, rho, 0.0);
        const double corr = d.z1.col(0).dot(d.z2.col(0)) / spec.paths;
        EXPECT_NEAR(corr, rho, 0.02) << rho;
        EXPECT_NEAR(d.z1.col(0).dot(d.z3.col(0)) / spec.paths, 0.0, 0.02);
    }
}

TEST(Draws, Deterministic) {
    const GridSpec spec{100.0, 1.0, 4, 100, 99};
    const DrawBlock a = generate_draws(spec, 0.2, 1.0);
    const DrawBlock b = generate_draws(spec, 0.2, 1.0);
    EXPECT_EQ(a.z1, b.z1);
    EXPECT_EQ(a.z4, b.z4);
    EXPECT_EQ(a.y, b.y);
    const DrawBlock c = generate_draws(GridSpec{100.0, 1.0, 4, 100, 100}, 0.2, 1.0);
    EXPECT_NE(a.z1, c.z1);
}

TEST(Simulate, MatchesStepOracle) {
    BccParams p = table_params();
    p.lambda = 3.0;  // make jumps frequent enough to matter
    p.delta = 0.2;
    const GridSpec spec{50.0, 0.5, 12, 64, 5, true, true};
    const DrawBlock d = generate_draws(spec, p.rho, p.lambda);
    const PathGrid g = simulate(p, spec, d);
    ASSERT_GT(d.y.sum(), 0.0);
    for (Eigen::Index i = 0; i < spec.paths; ++i) {
        const OraclePath o = oracle_path(p, spec.s0, spec.dt(), d, i);
        for (Eigen::Index t = 0; t <= spec.steps; ++t) {
            EXPECT_NEAR(g.index(i, t), o.s[t], 1e-12 * o.s[t] + 1e-14);
            EXPECT_NEAR(g.variance(i, t), o.v[t], 1e-14);
            EXPECT_NEAR(g.rate(i, t), o.r[t], 1e-14);
            EXPECT_NEAR(g.discount(i, t), o.b[t], 1e-14);
        }
    }
}

TEST(Simulate, InitialColumnAndInvariants) {
    const BccParams p = table_params();
    const GridSpec spec{246.0, 6.0 / 52.0, 20, 2000, 1};
    const PathGrid g = simulate(p, spec);
    EXPECT_TRUE((g.index.col(0).array() == spec.s0).all());
    EXPECT_TRUE((g.variance.col(0).array() == p.v0).all());
    EXPECT_TRUE((g.rate.col(0).array() == p.r0).all());
    EXPECT_TRUE((g.discount.col(0).array() == 1.0).all());
    EXPECT_GE(g.variance.minCoeff(), 0.0);
    EXPECT_GE(g.rate.minCoeff(), 0.0);
    EXPECT_GE(g.index.minCoeff(), 0.0);
    EXPECT_GT(g.discount.minCoeff(), 0.0);
    for (Eigen::Index t = 1; t <= spec.steps; ++t) {
        EXPECT_TRUE((g.discount.col(t).array() <= g.discount.col(t - 1).array()).all());
    }
}

TEST(Simulate, ZeroNoiseFixedPoint) {
    const BccParams p{3.0, 0.05, 0.0, -0.5, 0.05, 0.0, 0.0, 0.0, 0.5, 0.03, 0.0, 0.03};
    const PathGrid g = simulate(p, GridSpec{100.0, 2.0, 16, 50, 7});
    EXPECT_NEAR((g.variance.array() - 0.05).abs().maxCoeff(), 0.0, 1e-15);
    EXPECT_NEAR((g.rate.array() - 0.03).abs().maxCoeff(), 0.0, 1e-15);
    EXPECT_NEAR(g.discount(0, 16), std::exp(-0.06), 1e-14);
}

TEST(Simulate, FullTruncationKeepsStatesNonNegative) {
    // Strongly violates Feller so the auxiliary variance goes negative.
    const BccParams p{1.0, 0.01, 2.0, -0.9, 0.01, 0.0, 0.0, 0.0, 0.2, 0.01, 0.5, 0.01};
    const PathGrid g = simulate(p, GridSpec{100.0, 1.0, 50, 2000, 2});
    EXPECT_GE(g.variance.minCoeff(), 0.0);
    EXPECT_GE(g.rate.minCoeff(), 0.0);
    EXPECT_EQ(g.variance.minCoeff(), 0.0);  // truncation was actually exercised
}

TEST(Simulate, Deterministic) {
    const BccParams p = table_params();
    const GridSpec spec{100.0, 0.25, 10, 500, 17};
    const PathGrid a = simulate(p, spec);
    const PathGrid b = simulate(p, spec);
    EXPECT_EQ(a.index, b.index);
    EXPECT_EQ(a.discount, b.discount);
}

TEST(Simulate, AntitheticPathsShareDegenerateDeterministicPath) {
    // With no diffusion at all, every path (and each antithetic partner)
    // coincides.
    const BccParams p{1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.02, 0.0, 0.02};
    const PathGrid g = simulate(p, GridSpec{100.0, 1.0, 4, 10, 3, true, false});
    for (Eigen::Index i = 1; i < g.paths(); ++i) {
        EXPECT_EQ(g.index.row(i), g.index.row(0));
    }
    EXPECT_NEAR(g.index(0, 4), 100.0 * std::exp(0.02), 1e-12);
}

TEST(Martingale, BlackScholesDegenerateCase) {
    const PathGrid g = simulate(black_scholes_params(0.06, 0.2), GridSpec{36.0, 1.0, 20, 25000, 42});
    const MartingaleEstimate m = martingale_diagnostic(g);
    EXPECT_LE(std::abs(m.z_score(36.0)), 3.0) << m.estimate << " +- " << m.std_error;
}

TEST(Martingale, FittedSpyParameters) {
    const PathGrid g = simulate(table_params(), GridSpec{246.0, 1.0, 50, 20000, 42});
    const MartingaleEstimate m = martingale_diagnostic(g);
    EXPECT_LE(std::abs(m.z_score(246.0)), 3.0) << m.estimate << " +- " << m.std_error;
}

TEST(Martingale, SingleDeterministicPathWithZeroRate) {
    const BccParams p{1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    const PathGrid g = simulate(p, GridSpec{36.0, 1.0, 5, 2, 1, false, false});
    const MartingaleEstimate m = martingale_diagnostic(g);
    EXPECT_EQ(m.estimate, 36.0);
    EXPECT_EQ(m.std_error, 0.0);
    EXPECT_EQ(m.z_score(36.0), 0.0);
}

TEST(Martingale, VarianceReductionShrinksStandardError) {
    const BccParams p{2.0, 0.04, 0.3, -0.7, 0.04, 0.5, -0.1, 0.1, 0.3, 0.04, 0.05, 0.04};
    const GridSpec plain{100.0, 1.0, 20, 10000, 21, false, false};
    GridSpec reduced = plain;
    reduced.antithetic = true;
    reduced.moment_match = true;
    const double se_plain = martingale_diagnostic(simulate(p, plain)).std_error;
    const double se_reduced = martingale_diagnostic(simulate(p, reduced)).std_error;
    EXPECT_LT(se_reduced, se_plain);
}

TEST(Martingale, MissingJumpCompensatorIsDetected) {
    const BccParams p{2.0, 0.04, 0.3, -0.7, 0.04, 1.0, -0.2, 0.1, 0.3, 0.04, 0.05, 0.04};
    const GridSpec spec{100.0, 1.0, 20, 20000, 5};
    SimulationHooks hooks;
    hooks.disable_jump_compensator = true;
    const MartingaleEstimate bad = martingale_diagnostic(simulate(p, spec, hooks));
    const MartingaleEstimate good = martingale_diagnostic(simulate(p, spec));
    EXPECT_GT(std::abs(bad.z_score(100.0)), 3.0);
    EXPECT_LE(std::abs(good.z_score(100.0)), 3.0);
}

TEST(Martingale, RandomParameterSweep) {
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int passed = 0;
    const int runs = 8;
    for (int k = 0; k < runs; ++k) {
        const BccParams p{0.5 + 10.0 * u(gen), 0.01 + 0.1 * u(gen), 0.05 + 0.6 * u(gen), -0.95 * u(gen),
                          0.01 + 0.1 * u(gen), 0.5 * u(gen), -0.3 + 0.4 * u(gen), 0.01 + 0.2 * u(gen),
                          0.1 + u(gen), 0.01 + 0.05 * u(gen), 0.1 * u(gen), 0.01 + 0.05 * u(gen)};
        const MartingaleEstimate m = martingale_diagnostic(simulate(p, GridSpec{100.0, 1.0, 25, 10000, 100u + k}));
        passed += std::abs(m.z_score(100.0)) <= 3.0;
    }
    EXPECT_GE(passed, runs - 1);
}

TEST(Simulate, GridRefinementLeavesEuropeanPutStable) {
    const BccParams p = black_scholes_params(0.06, 0.2);
    auto european = [&](int steps) {
        const PathGrid g = simulate(p, GridSpec{36.0, 1.0, steps, 25000, 42});
        const Eigen::ArrayXd v =
            g.discount.col(steps).array() * (40.0 - g.index.col(steps).array()).max(0.0);
        const double mean = v.mean();
        const double se = std::sqrt((v - mean).square().sum() / (v.size() - 1) / v.size());
        return std::pair{mean, se};
    };
    const auto [a, sa] = european(20);
    const auto [b, sb] = european(40);
    EXPECT_LE(std::abs(a - b), 3.0 * std::sqrt(sa * sa + sb * sb));
}

TEST(Simulate, PathCsvHeaderAndRowCount) {
    const PathGrid g = simulate(black_scholes_params(0.05, 0.2), GridSpec{100.0, 1.0, 3, 4, 1});
    std::ostringstream out;
    write_paths_csv(g, out);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "path,step,index,variance,rate,discount");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 4 * 4);
}
