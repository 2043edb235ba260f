#pragma once

// Bounded Nelder-Mead simplex minimisation. Proposed points are clamped
// into the box before evaluation; non-finite objective values rank as +inf.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "amerlsm/error.hpp"

namespace amerlsm {

struct SimplexConfig {
    double reflection = 1.0;
    double expansion = 2.0;
    double contraction = 0.5;
    double shrink = 0.5;
    int max_evaluations = 1000;
    /// Stop once max f - min f over the simplex is at most this.
    double tolerance = 1e-10;

    void validate() const {
        require(reflection > 0.0, "SimplexConfig: reflection must be > 0");
        require(expansion > 1.0 && expansion > reflection, "SimplexConfig: expansion must exceed reflection and 1");
        require(contraction > 0.0 && contraction < 1.0, "SimplexConfig: contraction must be in (0, 1)");
        require(shrink > 0.0 && shrink < 1.0, "SimplexConfig: shrink must be in (0, 1)");
        require(max_evaluations >= 0, "SimplexConfig: max_evaluations must be >= 0");
        require(tolerance >= 0.0, "SimplexConfig: tolerance must be >= 0");
    }
};

struct Box {
    std::vector<double> lower;
    std::vector<double> upper;

    bool empty() const { return lower.empty(); }

    void clamp(std::vector<double>& x) const {
        for (std::size_t k = 0; k < lower.size() && k < x.size(); ++k) {
            x[k] = std::clamp(x[k], lower[k], upper[k]);
        }
    }

    bool contains(const std::vector<double>& x) const {
        for (std::size_t k = 0; k < lower.size(); ++k) {
            if (x[k] < lower[k] || x[k] > upper[k]) {
                return false;
            }
        }
        return true;
    }
};

struct NelderMeadResult {
    std::vector<double> argmin;
    double min_value = 0.0;
    int evaluations = 0;
};

using Objective = std::function<double(const std::vector<double>&)>;

/// The start is always evaluated (so `evaluations` >= 1 even with a zero
/// budget) and is returned unless a strictly better point is found.
inline NelderMeadResult nelder_mead(const Objective& objective, std::vector<double> start,
                                    const SimplexConfig& config, const Box& box = {}) {
    config.validate();
    const std::size_t n = start.size();
    require(n >= 1, "nelder_mead: empty start vector");
    if (!box.empty()) {
        require(box.lower.size() == n && box.upper.size() == n, "nelder_mead: bounds size mismatch");
        for (std::size_t k = 0; k < n; ++k) {
            require(std::isfinite(box.lower[k]) && std::isfinite(box.upper[k]) && box.lower[k] < box.upper[k],
                    "nelder_mead: bounds must be finite with lo < hi");
        }
        box.clamp(start);
    }

    int evaluations = 0;
    auto evaluate = [&](const std::vector<double>& x) {
        ++evaluations;
        const double f = objective(x);
        return std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
    };

    const double f_start = objective(start);
    ++evaluations;
    if (!std::isfinite(f_start)) {
        throw validation_error("nelder_mead: objective is not finite at the start point");
    }
    NelderMeadResult result{start, f_start, evaluations};
    const int budget = std::max(config.max_evaluations, 1);
    if (budget <= 1) {
        return result;
    }

    std::vector<std::vector<double>> simplex{start};
    std::vector<double> values{f_start};
    for (std::size_t k = 0; k < n && evaluations < budget; ++k) {
        std::vector<double> vertex = start;
        const double step = start[k] != 0.0 ? 0.05 * start[k] : 0.00025;
        vertex[k] += step;
        if (!box.empty()) {
            box.clamp(vertex);
            if (vertex[k] == start[k]) {
                vertex[k] = start[k] - step;
                box.clamp(vertex);
            }
        }
        simplex.push_back(vertex);
        values.push_back(evaluate(vertex));
    }

    std::vector<std::size_t> order(simplex.size());
    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        std::vector<std::vector<double>> s;
        std::vector<double> v;
        for (std::size_t i : order) {
            s.push_back(simplex[i]);
            v.push_back(values[i]);
        }
        simplex = std::move(s);
        values = std::move(v);
    };
    auto along = [&](const std::vector<double>& from, const std::vector<double>& to, double t) {
        std::vector<double> x(n);
        for (std::size_t k = 0; k < n; ++k) {
            x[k] = from[k] + t * (to[k] - from[k]);
        }
        if (!box.empty()) {
            box.clamp(x);
        }
        return x;
    };

    if (simplex.size() == n + 1) {
        while (evaluations < budget) {
            sort_simplex();
            if (values.back() - values.front() <= config.tolerance) {
                break;
            }
            std::vector<double> centroid(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t k = 0; k < n; ++k) {
                    centroid[k] += simplex[i][k] / static_cast<double>(n);
                }
            }
            const std::vector<double>& worst = simplex[n];
            const std::vector<double> reflected = along(centroid, worst, -config.reflection);
            const double f_reflected = evaluate(reflected);
            if (f_reflected < values[0]) {
                if (evaluations >= budget) {
                    simplex[n] = reflected;
                    values[n] = f_reflected;
                    break;
                }
                const std::vector<double> expanded = along(centroid, worst, -config.expansion);
                const double f_expanded = evaluate(expanded);
                if (f_expanded < f_reflected) {
                    simplex[n] = expanded;
                    values[n] = f_expanded;
                } else {
                    simplex[n] = reflected;
                    values[n] = f_reflected;
                }
                continue;
            }
            if (f_reflected < values[n - 1]) {
                simplex[n] = reflected;
                values[n] = f_reflected;
                continue;
            }
            if (evaluations >= budget) {
                break;
            }
            const bool outside = f_reflected < values[n];
            const std::vector<double> contracted =
                outside ? along(centroid, reflected, config.contraction) : along(centroid, worst, config.contraction);
            const double f_contracted = evaluate(contracted);
            if (outside ? f_contracted <= f_reflected : f_contracted < values[n]) {
                simplex[n] = contracted;
                values[n] = f_contracted;
                continue;
            }
            for (std::size_t i = 1; i <= n && evaluations < budget; ++i) {
                simplex[i] = along(simplex[0], simplex[i], config.shrink);
                values[i] = evaluate(simplex[i]);
            }
        }
    }

    for (std::size_t i = 0; i < simplex.size(); ++i) {
        if (values[i] < result.min_value) {
            result.min_value = values[i];
            result.argmin = simplex[i];
        }
    }
    result.evaluations = evaluations;
    return result;
}

}  // namespace amerlsm
