#pragma once

// JSON run configuration and report serialization.
//
// Every section and key is optional and falls back to the library default;
// unknown keys are rejected. Validation of each section reruns the owning
// module's invariants.

#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "amerlsm/calibration/bcc.hpp"
#include "amerlsm/calibration/cir.hpp"
#include "amerlsm/error.hpp"
#include "amerlsm/lsm_pricer.hpp"
#include "amerlsm/market_data.hpp"
#include "amerlsm/regressors/regressor.hpp"
#include "amerlsm/stochastic_engine.hpp"

namespace amerlsm {

using json = nlohmann::ordered_json;

struct MarketSnapshot {
    double spot = 0.0;
    std::optional<Date> quote_date;
};

struct CalibrationConfig {
    OptimizerConfig optimizer;
    CirSettings cir;
    MarketSnapshot chain;
    MarketSnapshot chain2;
};

struct RunConfig {
    BccParams model = black_scholes_params(0.06, 0.2);
    GridSpec grid{36.0, 1.0, 20, 25000, 42, true, true};
    PutContract contract{40.0, 1.0};
    RegressorSpec regressor = PolynomialSpec{};
    PricingOptions pricing;
    CalibrationConfig calibration;

    void validate() const {
        model.validate();
        grid.validate();
        contract.validate();
        amerlsm::validate(regressor);
        calibration.optimizer.validate();
        calibration.cir.simplex.validate();
    }
};

namespace detail {

inline void reject_unknown(const json& object, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!object.is_object()) {
        throw validation_error(where + ": expected a JSON object");
    }
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& item : object.items()) {
        if (!keys.count(item.key())) {
            throw validation_error(where + ": unknown key '" + item.key() + "'");
        }
    }
}

template <typename T>
void read(const json& object, const char* key, T& target, const std::string& where) {
    if (!object.contains(key)) {
        return;
    }
    try {
        target = object.at(key).get<T>();
    } catch (const json::exception&) {
        throw validation_error(where + "." + key + ": wrong type");
    }
}

inline json number_or_null(double value) { return std::isfinite(value) ? json(value) : json(nullptr); }

}  // namespace detail

inline BccParams params_from_json(const json& j, BccParams base, const std::string& where) {
    if (!j.is_object()) {
        throw validation_error(where + ": expected a JSON object");
    }
    auto values = base.to_array();
    for (const auto& item : j.items()) {
        const std::size_t k = [&] {
            try {
                return param_index(item.key());
            } catch (const validation_error&) {
                throw validation_error(where + ": unknown key '" + item.key() + "'");
            }
        }();
        if (!item.value().is_number()) {
            throw validation_error(where + "." + item.key() + ": expected a number");
        }
        values[k] = item.value().get<double>();
    }
    return BccParams::from_array(values);
}

inline json params_to_json(const BccParams& p) {
    json j = json::object();
    const auto values = p.to_array();
    for (std::size_t k = 0; k < BccParams::size; ++k) {
        j[std::string(BccParams::names[k])] = values[k];
    }
    return j;
}

inline RegressorSpec regressor_from_json(const json& j) {
    const std::string where = "regressor";
    if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
        throw validation_error("regressor: missing string key 'type'");
    }
    const std::string type = j.at("type").get<std::string>();
    if (type == "polynomial") {
        detail::reject_unknown(j, {"type", "degree", "terms"}, where);
        PolynomialSpec s;
        detail::read(j, "degree", s.degree, where);
        if (j.contains("terms") && !j.at("terms").is_null()) {
            int terms = 0;
            detail::read(j, "terms", terms, where);
            s.terms = terms;
        }
        return s;
    }
    if (type == "trees") {
        detail::reject_unknown(j, {"type", "estimators", "max_depth", "learning_rate", "min_leaf", "max_bins"}, where);
        BoostedTreesSpec s;
        detail::read(j, "estimators", s.estimators, where);
        detail::read(j, "max_depth", s.max_depth, where);
        detail::read(j, "learning_rate", s.learning_rate, where);
        detail::read(j, "min_leaf", s.min_leaf, where);
        detail::read(j, "max_bins", s.max_bins, where);
        return s;
    }
    if (type == "mlp") {
        detail::reject_unknown(
            j, {"type", "hidden_layers", "batch_size", "epochs", "learning_rate", "seed", "tolerance", "patience"},
            where);
        MlpSpec s;
        detail::read(j, "hidden_layers", s.hidden_layers, where);
        detail::read(j, "batch_size", s.batch_size, where);
        detail::read(j, "epochs", s.epochs, where);
        detail::read(j, "learning_rate", s.learning_rate, where);
        detail::read(j, "seed", s.seed, where);
        detail::read(j, "tolerance", s.tolerance, where);
        detail::read(j, "patience", s.patience, where);
        return s;
    }
    throw validation_error("regressor.type must be one of polynomial, trees, mlp");
}

inline SimplexConfig simplex_from_json(const json& j, SimplexConfig s, const std::string& where) {
    detail::reject_unknown(j, {"reflection", "expansion", "contraction", "shrink", "max_evaluations", "tolerance"},
                           where);
    detail::read(j, "reflection", s.reflection, where);
    detail::read(j, "expansion", s.expansion, where);
    detail::read(j, "contraction", s.contraction, where);
    detail::read(j, "shrink", s.shrink, where);
    detail::read(j, "max_evaluations", s.max_evaluations, where);
    detail::read(j, "tolerance", s.tolerance, where);
    return s;
}

inline MarketSnapshot snapshot_from_json(const json& j, const std::string& where) {
    detail::reject_unknown(j, {"spot", "quote_date"}, where);
    MarketSnapshot m;
    detail::read(j, "spot", m.spot, where);
    if (j.contains("quote_date")) {
        std::string text;
        detail::read(j, "quote_date", text, where);
        m.quote_date = parse_date(text);
    }
    return m;
}

inline CalibrationConfig calibration_from_json(const json& j) {
    const std::string where = "calibration";
    detail::reject_unknown(j, {"optimizer", "grid_search", "bounds", "start", "cir_optimizer", "chain", "chain2"},
                           where);
    CalibrationConfig c;
    if (j.contains("optimizer")) {
        c.optimizer.simplex = simplex_from_json(j.at("optimizer"), c.optimizer.simplex, where + ".optimizer");
    }
    if (j.contains("grid_search")) {
        const json& g = j.at("grid_search");
        if (!g.is_object()) {
            throw validation_error(where + ".grid_search: expected an object");
        }
        for (const auto& item : g.items()) {
            param_index(item.key());
            std::vector<double> values;
            detail::read(g, item.key().c_str(), values, where + ".grid_search");
            c.optimizer.grid[item.key()] = values;
        }
    }
    if (j.contains("bounds")) {
        const json& b = j.at("bounds");
        if (!b.is_object()) {
            throw validation_error(where + ".bounds: expected an object");
        }
        for (const auto& item : b.items()) {
            param_index(item.key());
            std::vector<double> range;
            detail::read(b, item.key().c_str(), range, where + ".bounds");
            require(range.size() == 2, where + ".bounds." + item.key() + ": expected [lo, hi]");
            c.optimizer.bounds[item.key()] = {range[0], range[1]};
        }
    }
    if (j.contains("start")) {
        c.optimizer.start = params_from_json(j.at("start"), c.optimizer.start, where + ".start");
    }
    if (j.contains("cir_optimizer")) {
        c.cir.simplex = simplex_from_json(j.at("cir_optimizer"), c.cir.simplex, where + ".cir_optimizer");
    }
    if (j.contains("chain")) {
        c.chain = snapshot_from_json(j.at("chain"), where + ".chain");
    }
    if (j.contains("chain2")) {
        c.chain2 = snapshot_from_json(j.at("chain2"), where + ".chain2");
    }
    return c;
}

inline RunConfig config_from_json(const json& j) {
    detail::reject_unknown(j, {"model", "grid", "contract", "regressor", "pricing", "calibration"}, "config");
    RunConfig c;
    if (j.contains("model")) {
        c.model = params_from_json(j.at("model"), c.model, "model");
    }
    if (j.contains("grid")) {
        const json& g = j.at("grid");
        detail::reject_unknown(g, {"s0", "horizon", "steps", "paths", "seed", "antithetic", "moment_match"}, "grid");
        detail::read(g, "s0", c.grid.s0, "grid");
        detail::read(g, "horizon", c.grid.horizon, "grid");
        detail::read(g, "steps", c.grid.steps, "grid");
        detail::read(g, "paths", c.grid.paths, "grid");
        detail::read(g, "seed", c.grid.seed, "grid");
        detail::read(g, "antithetic", c.grid.antithetic, "grid");
        detail::read(g, "moment_match", c.grid.moment_match, "grid");
    }
    if (j.contains("contract")) {
        const json& k = j.at("contract");
        detail::reject_unknown(k, {"strike", "maturity"}, "contract");
        detail::read(k, "strike", c.contract.strike, "contract");
        detail::read(k, "maturity", c.contract.maturity, "contract");
    }
    if (j.contains("regressor")) {
        c.regressor = regressor_from_json(j.at("regressor"));
    }
    if (j.contains("pricing")) {
        const json& p = j.at("pricing");
        detail::reject_unknown(p, {"itm_only", "features", "control_variate"}, "pricing");
        detail::read(p, "itm_only", c.pricing.itm_only, "pricing");
        detail::read(p, "control_variate", c.pricing.control_variate, "pricing");
        if (p.contains("features")) {
            std::string f;
            detail::read(p, "features", f, "pricing");
            if (f == "price_only") {
                c.pricing.features = FeatureSet::price_only;
            } else if (f == "full_state") {
                c.pricing.features = FeatureSet::full_state;
            } else {
                throw validation_error("pricing.features must be price_only or full_state");
            }
        }
    }
    if (j.contains("calibration")) {
        c.calibration = calibration_from_json(j.at("calibration"));
    }
    c.validate();
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("cannot open config '" + path + "'");
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw validation_error("config '" + path + "': " + e.what());
    }
    return config_from_json(j);
}

/// {stages:[{stage,params_in,params_out,objective_in,objective_out,
/// evaluations,wall_time}],final:{...}}; undefined objectives are null.
/// A "notes" array is added only when a stage was skipped.
inline json report_to_json(const CalibrationReport& report) {
    json stages = json::array();
    for (const auto& s : report.stages) {
        json entry = json::object();
        entry["stage"] = s.stage;
        entry["params_in"] = params_to_json(s.params_in);
        entry["params_out"] = params_to_json(s.params_out);
        entry["objective_in"] = detail::number_or_null(s.objective_in);
        entry["objective_out"] = detail::number_or_null(s.objective_out);
        entry["evaluations"] = s.evaluations;
        entry["wall_time"] = s.wall_time;
        stages.push_back(entry);
    }
    json j = json::object();
    j["stages"] = stages;
    j["final"] = params_to_json(report.final);
    if (!report.notes.empty()) {
        j["notes"] = report.notes;
    }
    return j;
}

}  // namespace amerlsm
