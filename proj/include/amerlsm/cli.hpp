#pragma once

// Command-line workflows. Exit codes: 0 success, 1 validation failure,
// 2 I/O failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "amerlsm/binomial.hpp"
#include "amerlsm/calibration/bcc.hpp"
#include "amerlsm/calibration/cir.hpp"
#include "amerlsm/config.hpp"
#include "amerlsm/error.hpp"
#include "amerlsm/lsm_pricer.hpp"
#include "amerlsm/market_data.hpp"
#include "amerlsm/regressors/regressor.hpp"
#include "amerlsm/stochastic_engine.hpp"

namespace amerlsm::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kIo = 2 };

inline std::string fixed(double value, int digits = 6) {
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.*f", digits, value);
    return buffer;
}

inline std::ofstream open_output(const std::string& dir, const std::string& name) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const std::string path = (std::filesystem::path(dir) / name).string();
    std::ofstream out(path);
    if (!out) {
        throw io_error("cannot write '" + path + "'");
    }
    return out;
}

/// The benchmark put: S0 = 36, K = 40, T = 1, r = 0.06, sigma = 0.2,
/// simulated on 20 steps and 25000 paths with antithetic draws and moment
/// matching.
inline RunConfig benchmark_config(std::uint64_t seed = 42) {
    RunConfig c;
    c.model = black_scholes_params(0.06, 0.2);
    c.grid = GridSpec{36.0, 1.0, 20, 25000, seed, true, true};
    c.contract = PutContract{40.0, 1.0};
    c.regressor = PolynomialSpec{};
    return c;
}

struct BenchmarkRow {
    std::string method;
    double price = 0.0;
    std::optional<double> std_error;
    double seconds = 0.0;
};

inline std::vector<BenchmarkRow> run_benchmark(std::uint64_t seed = 42) {
    std::vector<BenchmarkRow> rows;
    const auto started = std::chrono::steady_clock::now();
    const double tree = binomial_put(BsSetup{36.0, 40.0, 1.0, 0.06, 0.2, 500});
    rows.push_back({"binomial", tree, std::nullopt,
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count()});

    const RunConfig config = benchmark_config(seed);
    const PathGrid grid = simulate(config.model, config.grid);
    const std::vector<std::pair<std::string, RegressorSpec>> methods{
        {"lsm", PolynomialSpec{}}, {"trees", BoostedTreesSpec{}}, {"mlp", MlpSpec{}}};
    for (const auto& [name, spec] : methods) {
        const PricingResult r = price_american_put(grid, config.contract, spec, config.pricing);
        rows.push_back({name, r.price, r.std_error, r.wall_time});
    }
    return rows;
}

inline std::vector<std::pair<OptionQuote, double>> price_quotes(const std::vector<OptionQuote>& quotes,
                                                                 const BccParams& params, const RunConfig& config) {
    const ChainObjective pricer(quotes, config.regressor, config.grid, config.pricing);
    const std::vector<double> prices = pricer.model_prices(params);
    std::vector<std::pair<OptionQuote, double>> pairs;
    for (std::size_t q = 0; q < quotes.size(); ++q) {
        pairs.emplace_back(quotes[q], prices[q]);
    }
    return pairs;
}

inline std::vector<OptionQuote> load_filtered_chain(const std::string& path, const MarketSnapshot& snapshot,
                                                    const std::string& section, std::ostream& err) {
    require(snapshot.spot > 0.0, "calibration." + section + ".spot must be set and > 0");
    require(snapshot.quote_date.has_value(), "calibration." + section + ".quote_date must be set");
    const ChainLoad load = load_chain(path, snapshot.spot, *snapshot.quote_date);
    for (const auto& d : load.rejected) {
        err << path << ": row " << d.row << " rejected: " << d.message << '\n';
    }
    std::vector<OptionQuote> quotes = apply_filters(load.quotes);
    require(!quotes.empty(), path + ": no quotes survive the filters");
    return quotes;
}

/// Two-column CSV with header x,y.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> load_xy(const std::string& path) {
    std::ifstream in = csv::open(path);
    std::string line;
    if (!std::getline(in, line)) {
        throw validation_error(path + ": missing header");
    }
    static constexpr std::array<std::string_view, 2> columns{"x", "y"};
    const auto pos = csv::header_columns(line, columns, path);
    std::vector<double> xs;
    std::vector<double> ys;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (csv::trim(line).empty()) {
            continue;
        }
        const auto fields = csv::split(line);
        const auto x = fields.size() == 2 ? csv::parse_number<double>(fields[pos[0]]) : std::nullopt;
        const auto y = fields.size() == 2 ? csv::parse_number<double>(fields[pos[1]]) : std::nullopt;
        if (!x || !y) {
            throw validation_error(path + ": row " + std::to_string(row) + ": unparseable");
        }
        xs.push_back(*x);
        ys.push_back(*y);
    }
    require(!xs.empty(), path + ": no data rows");
    Eigen::MatrixXd x(static_cast<Eigen::Index>(xs.size()), 1);
    Eigen::VectorXd y(static_cast<Eigen::Index>(ys.size()));
    for (std::size_t k = 0; k < xs.size(); ++k) {
        x(static_cast<Eigen::Index>(k), 0) = xs[k];
        y(static_cast<Eigen::Index>(k)) = ys[k];
    }
    return {x, y};
}

struct Options {
    std::string config;
    std::string chain;
    std::string chain2;
    std::string bonds;
    std::string data;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    bool dump_paths = false;
};

inline RunConfig load_run_config(const Options& o) {
    RunConfig config = o.config.empty() ? RunConfig{} : load_config(o.config);
    if (o.seed) {
        config.grid.seed = *o.seed;
    }
    return config;
}

inline int cmd_price(const Options& o, std::ostream& out) {
    const RunConfig config = load_run_config(o);
    const PathGrid grid = simulate(config.model, config.grid);
    if (o.dump_paths) {
        std::ofstream file = open_output(o.out, "paths.csv");
        write_paths_csv(grid, file);
    }
    const PricingResult r = price_american_put(grid, config.contract, config.regressor, config.pricing);
    out << "regressor: " << regressor_name(config.regressor) << '\n'
        << "price: " << fixed(r.price) << '\n'
        << "std_error: " << fixed(r.std_error) << '\n'
        << "wall_time: " << fixed(r.wall_time, 3) << '\n';
    return kOk;
}

inline int cmd_benchmark(const Options& o, std::ostream& out) {
    const auto rows = run_benchmark(o.seed.value_or(42));
    char line[128];
    std::snprintf(line, sizeof line, "%-10s %10s %10s %10s\n", "method", "price", "std_error", "time_sec");
    out << line;
    for (const auto& row : rows) {
        std::snprintf(line, sizeof line, "%-10s %10.4f %10s %10.3f\n", row.method.c_str(), row.price,
                      row.std_error ? fixed(*row.std_error, 4).c_str() : "-", row.seconds);
        out << line;
    }
    return kOk;
}

inline int cmd_simulate(const Options& o, std::ostream& out) {
    const RunConfig config = load_run_config(o);
    const PathGrid grid = simulate(config.model, config.grid);
    std::ofstream file = open_output(o.out, "paths.csv");
    write_paths_csv(grid, file);
    const MartingaleEstimate m = martingale_diagnostic(grid);
    out << "paths: " << grid.paths() << '\n'
        << "steps: " << grid.steps() << '\n'
        << "discounted_terminal_mean: " << fixed(m.estimate) << '\n'
        << "std_error: " << fixed(m.std_error) << '\n'
        << "s0: " << fixed(config.grid.s0) << '\n';
    return kOk;
}

/// Fits all three regressors to one (x, y) sample and writes
/// x,y,yhat_poly,yhat_trees,yhat_mlp. Without --data the sample is the
/// regression set at the middle decision step of the configured run.
inline int cmd_fitdemo(const Options& o, std::ostream& out) {
    const RunConfig config = load_run_config(o);
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    if (!o.data.empty()) {
        std::tie(x, y) = load_xy(o.data);
    } else {
        const PathGrid grid = simulate(config.model, config.grid);
        const Eigen::Index step = std::max<Eigen::Index>(1, grid.steps() / 2);
        const auto rows = continuation_surface(grid, config.contract, PolynomialSpec{}, step, config.pricing);
        require(!rows.empty(), "fitdemo: no regression samples at the chosen step");
        x.resize(static_cast<Eigen::Index>(rows.size()), 1);
        y.resize(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t k = 0; k < rows.size(); ++k) {
            x(static_cast<Eigen::Index>(k), 0) = grid.index(rows[k].path, step);
            y(static_cast<Eigen::Index>(k)) = rows[k].target;
        }
    }
    const Eigen::VectorXd poly = predict(fit(PolynomialSpec{}, x, y), x);
    const Eigen::VectorXd trees = predict(fit(BoostedTreesSpec{}, x, y), x);
    const Eigen::VectorXd mlp = predict(fit(MlpSpec{}, x, y), x);

    std::ofstream file = open_output(o.out, "fitdemo.csv");
    file << "x,y,yhat_poly,yhat_trees,yhat_mlp\n";
    file.precision(12);
    double mse[3] = {0.0, 0.0, 0.0};
    for (Eigen::Index k = 0; k < x.rows(); ++k) {
        file << x(k, 0) << ',' << y(k) << ',' << poly(k) << ',' << trees(k) << ',' << mlp(k) << '\n';
        mse[0] += (poly(k) - y(k)) * (poly(k) - y(k));
        mse[1] += (trees(k) - y(k)) * (trees(k) - y(k));
        mse[2] += (mlp(k) - y(k)) * (mlp(k) - y(k));
    }
    const double n = static_cast<double>(x.rows());
    out << "samples: " << x.rows() << '\n'
        << "mse_poly: " << fixed(mse[0] / n) << '\n'
        << "mse_trees: " << fixed(mse[1] / n) << '\n'
        << "mse_mlp: " << fixed(mse[2] / n) << '\n';
    return kOk;
}

inline int cmd_calibrate(const Options& o, std::ostream& out, std::ostream& err) {
    require(!o.chain.empty(), "calibrate: --chain is required");
    require(!o.bonds.empty(), "calibrate: --bonds is required");
    const RunConfig config = load_run_config(o);

    const std::vector<ZeroBondQuote> bonds = load_bonds(o.bonds);
    const double r0 = implied_short_rate(bonds);
    const CirFit cir = calibrate_cir(bonds, r0, config.calibration.cir);
    const std::vector<OptionQuote> quotes = load_filtered_chain(o.chain, config.calibration.chain, "chain", err);

    const CalibrationReport report = calibrate_bcc(quotes, cir.params, config.regressor, config.grid,
                                                   config.calibration.optimizer, cir, config.pricing);
    {
        std::ofstream file = open_output(o.out, "calibration.json");
        file << report_to_json(report).dump(2) << '\n';
    }
    const BucketReport in_sample = mse_report(price_quotes(quotes, report.final, config));
    {
        std::ofstream file = open_output(o.out, "report_in_sample.csv");
        write_report_csv(in_sample, file);
    }
    out << "quotes: " << quotes.size() << '\n';
    out << "final:";
    const auto values = report.final.to_array();
    for (std::size_t k = 0; k < BccParams::size; ++k) {
        out << ' ' << BccParams::names[k] << '=' << values[k];
    }
    out << '\n' << "in_sample_mse: " << fixed(in_sample.overall_mse) << '\n';

    if (!o.chain2.empty()) {
        const std::vector<OptionQuote> second = load_filtered_chain(o.chain2, config.calibration.chain2, "chain2", err);
        const BucketReport oos = mse_report(price_quotes(second, report.final, config));
        std::ofstream file = open_output(o.out, "report_out_of_sample.csv");
        write_report_csv(oos, file);
        out << "out_of_sample_mse: " << fixed(oos.overall_mse) << '\n';
    }
    return kOk;
}

inline int cmd_report(const Options& o, std::ostream& out, std::ostream& err) {
    require(!o.chain.empty(), "report: --chain is required");
    const RunConfig config = load_run_config(o);
    const std::vector<OptionQuote> quotes = load_filtered_chain(o.chain, config.calibration.chain, "chain", err);
    const BucketReport report = mse_report(price_quotes(quotes, config.model, config));
    std::ofstream file = open_output(o.out, "report.csv");
    write_report_csv(report, file);
    out << "quotes: " << quotes.size() << '\n' << "mse: " << fixed(report.overall_mse) << '\n';
    return kOk;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"American put pricing by least-squares Monte Carlo under BCC97"};
    app.require_subcommand(1);
    Options o;

    auto add_seed = [&](CLI::App* sub) {
        sub->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) { o.seed = s; },
                                                "Override the random seed");
    };
    auto* price = app.add_subcommand("price", "Price one put from a config");
    price->add_option("--config", o.config, "Run configuration (JSON)")->required();
    price->add_option("--out", o.out, "Output directory");
    price->add_flag("--dump-paths", o.dump_paths, "Write paths.csv");
    add_seed(price);

    auto* benchmark = app.add_subcommand("benchmark", "Binomial vs LSM/trees/MLP on the S0=36, K=40 put");
    add_seed(benchmark);

    auto* sim = app.add_subcommand("simulate", "Simulate paths and write paths.csv");
    sim->add_option("--config", o.config, "Run configuration (JSON)")->required();
    sim->add_option("--out", o.out, "Output directory");
    sim->add_flag("--dump-paths", o.dump_paths, "Accepted for symmetry; simulate always writes paths");
    add_seed(sim);

    auto* fitdemo = app.add_subcommand("fitdemo", "Compare the three regressors on one sample");
    fitdemo->add_option("--config", o.config, "Run configuration (JSON)");
    fitdemo->add_option("--data", o.data, "CSV with header x,y");
    fitdemo->add_option("--out", o.out, "Output directory");
    add_seed(fitdemo);

    auto* calibrate = app.add_subcommand("calibrate", "Four-stage calibration to a chain and bond curve");
    calibrate->add_option("--config", o.config, "Run configuration (JSON)")->required();
    calibrate->add_option("--chain", o.chain, "Option chain CSV")->required();
    calibrate->add_option("--bonds", o.bonds, "Zero-coupon CSV")->required();
    calibrate->add_option("--chain2", o.chain2, "Out-of-sample chain CSV");
    calibrate->add_option("--out", o.out, "Output directory");
    add_seed(calibrate);

    auto* report = app.add_subcommand("report", "Bucketed MSE of config model prices against a chain");
    report->add_option("--config", o.config, "Run configuration (JSON)")->required();
    report->add_option("--chain", o.chain, "Option chain CSV")->required();
    report->add_option("--out", o.out, "Output directory");
    add_seed(report);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kValidation;
    }

    try {
        if (price->parsed()) return cmd_price(o, out);
        if (benchmark->parsed()) return cmd_benchmark(o, out);
        if (sim->parsed()) return cmd_simulate(o, out);
        if (fitdemo->parsed()) return cmd_fitdemo(o, out);
        if (calibrate->parsed()) return cmd_calibrate(o, out, err);
        if (report->parsed()) return cmd_report(o, out, err);
    } catch (const io_error& e) {
        err << "error: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    }
    return kValidation;
}

}  // namespace amerlsm::cli
