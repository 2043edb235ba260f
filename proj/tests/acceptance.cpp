// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "amerlsm/binomial.hpp"
#include "amerlsm/calibration/bcc.hpp"
#include "amerlsm/calibration/cir.hpp"
#include "amerlsm/cli.hpp"
#include "amerlsm/config.hpp"
#include "amerlsm/lsm_pricer.hpp"
#include "amerlsm/regressors/regressor.hpp"
#include "amerlsm/stochastic_engine.hpp"
#include "amerlsm/synthetic.hpp"

using namespace amerlsm;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kBinomialTarget = 4.486;
constexpr double kBinomialTol = 0.005;
constexpr double kBinomialMaxSeconds = 1.0;
constexpr double kLsmLow = 4.42;
constexpr double kLsmHigh = 4.52;
constexpr double kLsmSigmas = 3.0;
constexpr double kLsmMaxSeconds = 30.0;
constexpr double kParityTol = 0.1;
constexpr int kMartingaleRuns = 20;
constexpr int kMartingaleRequired = 19;
constexpr double kMartingaleSigmas = 3.0;
constexpr double kMartingaleMaxSeconds = 300.0;
constexpr double kPolyResidualTol = 1e-8;
constexpr double kGradientTol = 1e-4;
constexpr double kForesightSigmas = 3.0;
constexpr double kCirObjectiveTol = 1e-10;
constexpr double kCirSigmas = 3.0;
constexpr int kRoundTripMinQuotes = 30;
constexpr int kRoundTripPaths = 5000;
constexpr double kRoundTripSlack = 1e-8;
constexpr double kRoundTripMaxSeconds = 1800.0;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

int failures = 0;

void report(const char* id, bool pass, const std::string& detail) {
    std::printf("%s %s: %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    failures += pass ? 0 : 1;
}

std::string fmt(const char* format, auto... args) {
    char buffer[512];
    std::snprintf(buffer, sizeof buffer, format, args...);
    return buffer;
}

struct BenchmarkPrices {
    double poly = 0.0;
    double poly_se = 0.0;
    double poly_seconds = 0.0;
    double trees = 0.0;
    double mlp = 0.0;
};

BenchmarkPrices benchmark_prices() {
    const RunConfig c = cli::benchmark_config(42);
    BenchmarkPrices out;
    Timer t;
    const PathGrid grid = simulate(c.model, c.grid);
    const PricingResult poly = price_american_put(grid, c.contract, PolynomialSpec{});
    out.poly_seconds = t.seconds();
    out.poly = poly.price;
    out.poly_se = poly.std_error;
    out.trees = price_american_put(grid, c.contract, BoostedTreesSpec{}).price;
    out.mlp = price_american_put(grid, c.contract, MlpSpec{}).price;
    return out;
}

void ac1(double& binomial) {
    Timer t;
    binomial = binomial_put(BsSetup{36.0, 40.0, 1.0, 0.06, 0.2, 500});
    const double seconds = t.seconds();
    report("AC1", std::abs(binomial - kBinomialTarget) <= kBinomialTol && seconds < kBinomialMaxSeconds,
           fmt("binomial 500 steps = %.5f (target %.3f +- %.3f), %.4f s", binomial, kBinomialTarget, kBinomialTol,
               seconds));
}

void ac2_ac3(double binomial, BenchmarkPrices& prices) {
    prices = benchmark_prices();
    const bool in_band = prices.poly >= kLsmLow && prices.poly <= kLsmHigh;
    const bool near = std::abs(prices.poly - kBinomialTarget) <= kLsmSigmas * prices.poly_se;
    report("AC2", in_band && near && prices.poly_seconds < kLsmMaxSeconds,
           fmt("polynomial LSM = %.5f (se %.5f) in [%.2f, %.2f], |diff from %.3f| = %.2f se, %.2f s", prices.poly,
               prices.poly_se, kLsmLow, kLsmHigh, kBinomialTarget,
               std::abs(prices.poly - kBinomialTarget) / prices.poly_se, prices.poly_seconds));
    const bool trees_ok = std::abs(prices.trees - binomial) <= kParityTol;
    const bool mlp_ok = std::abs(prices.mlp - binomial) <= kParityTol;
    report("AC3", trees_ok && mlp_ok,
           fmt("trees = %.5f, mlp = %.5f, binomial = %.5f, tolerance %.2f", prices.trees, prices.mlp, binomial,
               kParityTol));
}

void ac4() {
    Timer t;
    const OptimizerConfig bounds;
    const CirSettings cir;
    std::mt19937_64 gen(20171005);
    auto draw = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); };
    int passed = 0;
    std::string worst;
    double worst_z = 0.0;
    for (int run = 0; run < kMartingaleRuns; ++run) {
        std::array<double, BccParams::size> a{};
        for (std::size_t k = 0; k < 8; ++k) {
            const auto& [lo, hi] = bounds.bounds.at(std::string(BccParams::names[k]));
            a[k] = draw(lo, hi);
        }
        a[kKappaR] = draw(cir.bounds.lower[0], cir.bounds.upper[0]);
        a[kThetaR] = draw(cir.bounds.lower[1], 0.1);
        a[kSigmaR] = draw(cir.bounds.lower[2], 0.2);
        a[kR0] = draw(0.0, 0.1);
        const BccParams p = BccParams::from_array(a);
        const GridSpec spec{100.0, 1.0, 20, 25000, 1000u + static_cast<std::uint64_t>(run)};
        const MartingaleEstimate m = martingale_diagnostic(simulate(p, spec));
        const double z = std::abs(m.z_score(spec.s0));
        passed += z <= kMartingaleSigmas;
        if (z > worst_z) {
            worst_z = z;
            worst = fmt("run %d", run);
        }
    }
    const double seconds = t.seconds();
    report("AC4", passed >= kMartingaleRequired && seconds < kMartingaleMaxSeconds,
           fmt("%d/%d random parameter sets within %.0f se (need %d), worst |z| = %.2f (%s), %.1f s", passed,
               kMartingaleRuns, kMartingaleSigmas, kMartingaleRequired, worst_z, worst.c_str(), seconds));
}

void ac5() {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    const Eigen::Index n = 200;
    Eigen::MatrixXd x(n, 1);
    for (Eigen::Index r = 0; r < n; ++r) x(r, 0) = u(gen);
    const Eigen::ArrayXd s = x.col(0).array();
    const Eigen::VectorXd y = (1.0 - 2.0 * s + 0.5 * s.square() + 0.3 * s.cube() - 0.1 * s.pow(4) + 0.05 * s.pow(5))
                                  .matrix();
    const double residual = (predict(fit(PolynomialSpec{5, std::nullopt}, x, y), x) - y).cwiseAbs().maxCoeff();

    Eigen::MatrixXd xt(1000, 2);
    Eigen::VectorXd yt(1000);
    std::normal_distribution<double> noise(0.0, 0.2);
    for (Eigen::Index r = 0; r < 1000; ++r) {
        xt(r, 0) = u(gen);
        xt(r, 1) = u(gen);
        yt(r) = std::sin(xt(r, 0)) * xt(r, 1) + noise(gen);
    }
    const BoostedTreesModel trees = fit_boosted_trees(BoostedTreesSpec{}, xt, yt);
    bool monotone = true;
    for (std::size_t k = 1; k < trees.training_mse.size(); ++k) {
        monotone = monotone && trees.training_mse[k] <= trees.training_mse[k - 1];
    }

    Eigen::MatrixXd xg(16, 1);
    for (Eigen::Index r = 0; r < 16; ++r) xg(r, 0) = u(gen);
    const Eigen::VectorXd yg = xg.col(0).array().square().matrix();
    const double grad = gradient_check(MlpSpec{}, xg, yg, 1e-6);

    report("AC5", residual < kPolyResidualTol && monotone && grad < kGradientTol,
           fmt("polynomial max residual %.2e (< %.0e); trees MSE monotone over %zu rounds: %s (%.4f -> %.4f); MLP "
               "gradient check max rel err %.2e (< %.0e)",
               residual, kPolyResidualTol, trees.training_mse.size() - 1, monotone ? "yes" : "no",
               trees.training_mse.front(), trees.training_mse.back(), grad, kGradientTol));
}

void ac6(double binomial) {
    const RunConfig c = cli::benchmark_config(42);
    const PathGrid grid = simulate(c.model, c.grid);
    LsmHooks foresight;
    foresight.perfect_foresight = true;
    const PricingResult cheat = price_american_put(grid, c.contract, PolynomialSpec{}, {}, foresight);
    const PricingResult honest = price_american_put(grid, c.contract, PolynomialSpec{});
    const bool pass = cheat.price > binomial + kForesightSigmas * cheat.std_error &&
                      !(honest.price > binomial + kForesightSigmas * honest.std_error);
    report("AC6", pass,
           fmt("foresight = %.4f (%.1f se above %.4f); regression = %.4f (%.1f se from binomial)", cheat.price,
               (cheat.price - binomial) / cheat.std_error, binomial, honest.price,
               (honest.price - binomial) / honest.std_error));
}

// Mean of exp(-integral r dt) over truncated CIR paths.
std::pair<double, double> cir_mc(const CirParams& p, double maturity, int paths, int steps, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    const double dt = maturity / steps;
    // Mean reversion is stepped exactly; only the diffusion is Euler.
    const double decay = std::exp(-p.kappa_r * dt);
    const double spread = p.kappa_r > 0.0 ? std::sqrt((1.0 - decay * decay) / (2.0 * p.kappa_r)) : std::sqrt(dt);
    double sum = 0.0;
    double sq = 0.0;
    for (int i = 0; i < paths; ++i) {
        double r = p.r0;
        double integral = 0.0;
        for (int s = 0; s < steps; ++s) {
            const double rp = std::max(r, 0.0);
            r = p.theta_r + (r - p.theta_r) * decay + p.sigma_r * std::sqrt(rp) * spread * z(gen);
            integral += 0.5 * (rp + std::max(r, 0.0)) * dt;
        }
        const double d = std::exp(-integral);
        sum += d;
        sq += d * d;
    }
    const double mean = sum / paths;
    return {mean, std::sqrt((sq / paths - mean * mean) / (paths - 1))};
}

void ac7() {
    const CirParams truth{0.123, 0.066, 0.001, 0.01};
    std::vector<ZeroBondQuote> bonds;
    for (double t : {0.25, 0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0}) {
        bonds.push_back({t, cir_bond_price(truth, t)});
    }
    const CirFit fit = calibrate_cir(bonds, truth.r0);
    bool mc_ok = true;
    std::string detail;
    for (double t : {0.5, 1.0, 2.0}) {
        const auto [mean, se] = cir_mc(truth, t, 20000, 500, 11);
        const double z = std::abs(cir_bond_price(truth, t) - mean) / se;
        mc_ok = mc_ok && z <= kCirSigmas;
        detail += fmt(" T=%.1f: %.2f se;", t, z);
    }
    report("AC7", fit.objective_out < kCirObjectiveTol && mc_ok,
           fmt("CIR round-trip objective %.2e (< %.0e); MC discount oracle:%s", fit.objective_out, kCirObjectiveTol,
               detail.c_str()));
}

void ac8() {
    Timer t;
    const BccParams truth = synthetic::reference_params();
    const CirParams cir{truth.kappa_r, truth.theta_r, truth.sigma_r, truth.r0};
    const GridSpec generator{1.0, 1.0, 10, kRoundTripPaths, 2017, true, true};
    const std::vector<OptionQuote> quotes =
        apply_filters(synthetic::price_chain(truth, synthetic::ChainSpec{}, PolynomialSpec{}, generator));

    const GridSpec mc{1.0, 1.0, 10, kRoundTripPaths, 42, true, true};
    OptimizerConfig config;
    config.simplex.max_evaluations = 400;
    config.grid = {{"kappa_v", {2.0, 10.0, 30.0}}, {"theta_v", {0.01, 0.04}}, {"sigma_v", {0.3, 1.0}},
                   {"rho", {-0.9, -0.5}},          {"v0", {0.005, 0.04}},     {"lambda", {0.01, 0.3}},
                   {"mu_j", {-0.5, 0.0}},          {"delta", {0.01, 0.2}}};
    const CalibrationReport r = calibrate_bcc(quotes, cir, PolynomialSpec{}, mc, config);
    const double at_truth = ChainObjective(quotes, PolynomialSpec{}, mc)(truth);

    bool stages_ok = true;
    double previous_full = INFINITY;
    for (const auto& s : r.stages) {
        if (s.stage == 1) continue;
        stages_ok = stages_ok && s.objective_out <= s.objective_in;
        if (s.stage != 3) {
            stages_ok = stages_ok && s.objective_out <= previous_full;
            previous_full = s.objective_out;
        }
    }
    const double seconds = t.seconds();
    const bool enough = static_cast<int>(quotes.size()) >= kRoundTripMinQuotes;
    report("AC8", enough && stages_ok && r.final_objective <= at_truth + kRoundTripSlack &&
                      seconds < kRoundTripMaxSeconds,
           fmt("%zu quotes; final objective %.6e vs %.6e at generating parameters; stage objectives non-increasing: "
               "%s; %.1f s",
               quotes.size(), r.final_objective, at_truth, stages_ok ? "yes" : "no", seconds));
}

void ac9() {
    const std::string data = AMERLSM_DATA_DIR;
    const fs::path out = fs::temp_directory_path() / "amerlsm_acceptance_ac9";
    fs::remove_all(out);
    const std::vector<std::string> args{"amerlsm",  "calibrate", "--config", data + "/config.json",
                                        "--chain",  data + "/chain.csv",   "--chain2", data + "/chain2.csv",
                                        "--bonds",  data + "/bonds.csv",   "--out",    out.string()};
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream sink_out, sink_err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), sink_out, sink_err);

    std::string problems;
    try {
        std::ifstream in(out / "calibration.json");
        const json j = json::parse(in);
        const std::vector<std::string> stage_keys{"stage",        "params_in",     "params_out", "objective_in",
                                                  "objective_out", "evaluations", "wall_time"};
        if (!j.contains("stages") || !j["stages"].is_array() || j["stages"].size() < 3) problems += " stages;";
        for (const auto& s : j["stages"]) {
            std::vector<std::string> keys;
            for (const auto& item : s.items()) keys.push_back(item.key());
            if (keys != stage_keys) problems += " stage keys;";
        }
        std::vector<std::string> names;
        for (const auto& item : j["final"].items()) names.push_back(item.key());
        if (names != std::vector<std::string>(BccParams::names.begin(), BccParams::names.end())) {
            problems += " final names;";
        }
    } catch (const std::exception& e) {
        problems += std::string(" json: ") + e.what() + ";";
    }
    for (const char* file : {"report_in_sample.csv", "report_out_of_sample.csv"}) {
        std::ifstream in(out / file);
        std::vector<std::string> lines;
        for (std::string line; std::getline(in, line);) lines.push_back(line);
        const std::vector<std::string> labels{"Short,ITM,", "Short,NTM,", "Short,OTM,", "Mid,ITM,",
                                              "Mid,NTM,",   "Mid,OTM,",   "OVERALL,ALL,"};
        bool ok = lines.size() == 8 && lines[0] == "maturity_bucket,moneyness_bucket,count,mse";
        for (std::size_t k = 0; ok && k < labels.size(); ++k) {
            ok = lines[k + 1].rfind(labels[k], 0) == 0;
        }
        if (!ok) problems += std::string(" ") + file + ";";
    }
    report("AC9", code == 0 && problems.empty(),
           fmt("calibrate exit %d; schema problems:%s", code, problems.empty() ? " none" : problems.c_str()));
}

void ac10(const BenchmarkPrices& first) {
    const BenchmarkPrices second = benchmark_prices();
    const bool same = first.poly == second.poly && first.trees == second.trees && first.mlp == second.mlp;
    report("AC10", same,
           fmt("rerun with seed 42: polynomial %.17g/%.17g, trees %.17g/%.17g, mlp %.17g/%.17g", first.poly,
               second.poly, first.trees, second.trees, first.mlp, second.mlp));
}

}  // namespace

int main() {
    double binomial = 0.0;
    BenchmarkPrices prices;
    auto guarded = [](const char* id, const std::function<void()>& body) {
        try {
            body();
        } catch (const std::exception& e) {
            report(id, false, std::string("exception: ") + e.what());
        }
    };
    guarded("AC1", [&] { ac1(binomial); });
    guarded("AC2", [&] { ac2_ac3(binomial, prices); });
    guarded("AC4", ac4);
    guarded("AC5", ac5);
    guarded("AC6", [&] { ac6(binomial); });
    guarded("AC7", ac7);
    guarded("AC8", ac8);
    guarded("AC9", ac9);
    guarded("AC10", [&] { ac10(prices); });
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
