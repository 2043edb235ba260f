#pragma once

// Cox-Ross-Rubinstein tree for puts under constant rate and volatility.

#include <algorithm>
#include <cmath>
#include <vector>

#include "amerlsm/error.hpp"

namespace amerlsm {

struct BsSetup {
    double s0 = 36.0;
    double strike = 40.0;
    double maturity = 1.0;
    double rate = 0.06;
    double sigma = 0.2;
    int steps = 500;

    void validate() const {
        require(s0 > 0.0 && strike > 0.0, "BsSetup: s0 and strike must be > 0");
        require(maturity > 0.0, "BsSetup: maturity must be > 0");
        require(sigma > 0.0, "BsSetup: sigma must be > 0");
        require(steps >= 1, "BsSetup: steps must be >= 1");
    }
};

/// Put value on a CRR tree; `american` enables early exercise at every node.
inline double binomial_put(const BsSetup& setup, bool american = true) {
    setup.validate();
    const double dt = setup.maturity / setup.steps;
    const double up = std::exp(setup.sigma * std::sqrt(dt));
    const double down = 1.0 / up;
    const double growth = std::exp(setup.rate * dt);
    const double p = (growth - down) / (up - down);
    require(p > 0.0 && p < 1.0, "binomial_put: risk-neutral probability outside (0, 1); use more steps");
    const double disc = 1.0 / growth;

    const int n = setup.steps;
    std::vector<double> values(static_cast<std::size_t>(n) + 1);
    for (int j = 0; j <= n; ++j) {
        const double spot = setup.s0 * std::pow(up, 2.0 * j - n);
        values[static_cast<std::size_t>(j)] = std::max(setup.strike - spot, 0.0);
    }
    for (int step = n - 1; step >= 0; --step) {
        for (int j = 0; j <= step; ++j) {
            const auto k = static_cast<std::size_t>(j);
            double value = disc * (p * values[k + 1] + (1.0 - p) * values[k]);
            if (american) {
                const double spot = setup.s0 * std::pow(up, 2.0 * j - step);
                value = std::max(value, setup.strike - spot);
            }
            values[k] = value;
        }
    }
    return values[0];
}

}  // namespace amerlsm
