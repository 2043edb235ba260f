// Writes a synthetic option chain, a second chain one week later, a zero
// curve and a matching run configuration into a directory.
//
//   make_synthetic_data --out data [--seed 2017] [--paths 5000]

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "amerlsm/config.hpp"
#include "amerlsm/synthetic.hpp"

using namespace amerlsm;

int main(int argc, char** argv) {
    CLI::App app{"Synthetic chain and bond curve generator"};
    std::string out_dir = "data";
    std::uint64_t seed = 2017;
    int paths = 5000;
    int steps = 10;
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--seed", seed, "Seed for the pricing draws");
    app.add_option("--paths", paths, "Paths per maturity");
    app.add_option("--steps", steps, "Time steps per maturity");
    CLI11_PARSE(app, argc, argv);

    try {
        std::filesystem::create_directories(out_dir);
        const auto path = [&](const char* name) { return (std::filesystem::path(out_dir) / name).string(); };

        const BccParams truth = synthetic::reference_params();
        const GridSpec mc{1.0, 1.0, steps, paths, seed, true, true};

        synthetic::ChainSpec first;
        synthetic::ChainSpec second;
        second.spot = 249.0;
        second.quote_date = Date{std::chrono::sys_days{first.quote_date} + std::chrono::days{7}};

        std::ofstream chain(path("chain.csv"));
        synthetic::write_chain_csv(synthetic::price_chain(truth, first, PolynomialSpec{}, mc), chain);
        std::ofstream chain2(path("chain2.csv"));
        synthetic::write_chain_csv(synthetic::price_chain(truth, second, PolynomialSpec{}, mc), chain2);

        const CirParams cir{truth.kappa_r, truth.theta_r, truth.sigma_r, truth.r0};
        std::ofstream bonds(path("bonds.csv"));
        synthetic::write_bonds_csv(synthetic::cir_bonds(cir, {1.0 / 365.0, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0}), bonds);

        json config = json::object();
        config["grid"] = {{"steps", steps}, {"paths", 2000}, {"seed", seed + 1}};
        config["regressor"] = {{"type", "polynomial"}};
        config["calibration"] = {
            {"optimizer", {{"max_evaluations", 60}, {"tolerance", 1e-10}}},
            {"grid_search", {{"kappa_v", {5.0, 20.0}}, {"theta_v", {0.012, 0.04}}, {"lambda", {0.0001, 0.1}}}},
            {"chain", {{"spot", first.spot}, {"quote_date", format_date(first.quote_date)}}},
            {"chain2", {{"spot", second.spot}, {"quote_date", format_date(second.quote_date)}}},
        };
        std::ofstream cfg(path("config.json"));
        cfg << config.dump(2) << '\n';
        if (!chain || !chain2 || !bonds || !cfg) {
            std::cerr << "error: failed writing into " << out_dir << '\n';
            return 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
