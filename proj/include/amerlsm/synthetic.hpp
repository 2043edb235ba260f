#pragma once

// Synthetic market data priced from known parameters: option chains from the
// LSM pricer and zero-coupon bonds from the CIR formula.

#include <chrono>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "amerlsm/calibration/bcc.hpp"
#include "amerlsm/calibration/cir.hpp"
#include "amerlsm/market_data.hpp"

namespace amerlsm::synthetic {

/// Reference parameter set used to generate the bundled data, with r0 as
/// the only free input.
inline BccParams reference_params(double r0 = 0.01) {
    return BccParams{20.850, 0.012, 0.712, -0.984, 0.002, 0.0001, -0.378, 0.0005, 0.123, 0.066, 0.001, r0};
}

struct ChainSpec {
    double spot = 246.0;
    Date quote_date = std::chrono::year{2017} / std::chrono::September / 5;
    std::vector<int> expiry_days{8, 15, 22, 29, 36};
    std::vector<double> strike_ratios{0.94, 0.96, 0.97, 0.98, 0.99, 1.0, 1.01, 1.02, 1.03, 1.04, 1.06};
};

/// One quote per (expiry, strike ratio) with the mid set to the LSM price
/// under `params`. Strikes are rounded to whole dollars.
inline std::vector<OptionQuote> price_chain(const BccParams& params, const ChainSpec& chain,
                                            const RegressorSpec& regressor, const GridSpec& mc) {
    std::vector<OptionQuote> quotes;
    for (int days : chain.expiry_days) {
        const Date expiry{std::chrono::sys_days{chain.quote_date} + std::chrono::days{days}};
        for (double ratio : chain.strike_ratios) {
            OptionQuote q;
            q.quote_date = chain.quote_date;
            q.expiry_date = expiry;
            q.strike = std::round(chain.spot * ratio);
            q.spot = chain.spot;
            q.maturity_years = year_fraction(chain.quote_date, expiry);
            q.volume = 500;
            quotes.push_back(q);
        }
    }
    const ChainObjective pricer(quotes, regressor, mc);
    const std::vector<double> prices = pricer.model_prices(params);
    for (std::size_t k = 0; k < quotes.size(); ++k) {
        quotes[k].mid_price = prices[k];
    }
    return quotes;
}

/// Writes expiry,strike,bid,ask,volume with a symmetric one-cent half spread
/// around each mid.
inline void write_chain_csv(const std::vector<OptionQuote>& quotes, std::ostream& out) {
    out << "expiry,strike,bid,ask,volume\n";
    char line[160];
    for (const auto& q : quotes) {
        const double bid = std::max(0.0, q.mid_price - 0.01);
        const double ask = q.mid_price + 0.01;
        std::snprintf(line, sizeof line, "%s,%.2f,%.6f,%.6f,%lld\n", format_date(q.expiry_date).c_str(), q.strike,
                      bid, ask, q.volume);
        out << line;
    }
}

inline std::vector<ZeroBondQuote> cir_bonds(const CirParams& cir, const std::vector<double>& maturities) {
    std::vector<ZeroBondQuote> bonds;
    for (double t : maturities) {
        bonds.push_back({t, cir_bond_price(cir, t)});
    }
    return bonds;
}

inline void write_bonds_csv(const std::vector<ZeroBondQuote>& bonds, std::ostream& out) {
    out << "maturity_years,price\n";
    char line[96];
    for (const auto& b : bonds) {
        std::snprintf(line, sizeof line, "%.10g,%.12f\n", b.maturity_years, b.price);
        out << line;
    }
}

}  // namespace amerlsm::synthetic
