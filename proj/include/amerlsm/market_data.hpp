#pragma once

// Option-chain and zero-coupon CSV ingestion, quote filters, moneyness and
// maturity buckets, and bucketed pricing-error reports.

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "amerlsm/error.hpp"

namespace amerlsm {

using Date = std::chrono::year_month_day;

/// Years per week under the ACT/365 day count.
inline constexpr double kWeek = 7.0 / 365.0;

inline Date parse_date(std::string_view text) {
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    const std::string s(text);
    char tail = 0;
    if (std::sscanf(s.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
        throw validation_error("invalid date '" + s + "' (expected YYYY-MM-DD)");
    }
    const Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!date.ok()) {
        throw validation_error("invalid date '" + s + "'");
    }
    return date;
}

inline std::string format_date(const Date& date) {
    char buffer[16];
    std::snprintf(buffer, sizeof buffer, "%04d-%02u-%02u", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
    return buffer;
}

/// ACT/365 year fraction.
inline double year_fraction(const Date& from, const Date& to) {
    const auto days = (std::chrono::sys_days{to} - std::chrono::sys_days{from}).count();
    return static_cast<double>(days) / 365.0;
}

struct OptionQuote {
    Date quote_date{};
    Date expiry_date{};
    double strike = 0.0;
    double mid_price = 0.0;
    long long volume = 0;
    double spot = 0.0;
    double maturity_years = 0.0;
};

struct ZeroBondQuote {
    double maturity_years = 0.0;
    double price = 1.0;
};

enum class Moneyness { ITM, NTM, OTM };
enum class MaturityBucket { Short, Mid };

struct Bucket {
    Moneyness moneyness = Moneyness::NTM;
    MaturityBucket maturity = MaturityBucket::Short;
    friend bool operator==(const Bucket&, const Bucket&) = default;
};

inline std::string_view to_string(Moneyness m) {
    switch (m) {
        case Moneyness::ITM: return "ITM";
        case Moneyness::NTM: return "NTM";
        case Moneyness::OTM: return "OTM";
    }
    return "?";
}

inline std::string_view to_string(MaturityBucket m) {
    return m == MaturityBucket::Short ? "Short" : "Mid";
}

namespace csv {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                  : comma - start)));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return fields;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
    T value{};
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || end != s.data() + s.size() || s.empty()) {
        return std::nullopt;
    }
    if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(value)) {
            return std::nullopt;
        }
    }
    return value;
}

/// Column positions of `expected`, which must be exactly the header fields.
template <std::size_t N>
std::array<std::size_t, N> header_columns(std::string_view header, const std::array<std::string_view, N>& expected,
                                          const std::string& path) {
    const auto fields = split(header);
    std::array<std::size_t, N> positions{};
    for (std::size_t k = 0; k < N; ++k) {
        const auto it = std::find(fields.begin(), fields.end(), expected[k]);
        if (it == fields.end()) {
            throw validation_error(path + ": missing header column '" + std::string(expected[k]) + "'");
        }
        positions[k] = static_cast<std::size_t>(it - fields.begin());
    }
    if (fields.size() != N) {
        throw validation_error(path + ": unexpected header columns");
    }
    return positions;
}

inline std::ifstream open(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("cannot open '" + path + "'");
    }
    return in;
}

}  // namespace csv

struct RowDiagnostic {
    std::size_t row = 0;  // 1-based data row (the header is row 0)
    std::string message;
};

struct ChainLoad {
    std::vector<OptionQuote> quotes;
    std::vector<RowDiagnostic> rejected;
};

/// Reads a CSV with header expiry,strike,bid,ask,volume. Unparseable rows
/// and rows with non-positive maturity or mid above strike are rejected
/// with diagnostics; a negative numeric field fails the whole load.
inline ChainLoad load_chain(const std::string& path, double spot, const Date& quote_date) {
    require(spot > 0.0, "load_chain: spot must be > 0");
    std::ifstream in = csv::open(path);
    std::string line;
    if (!std::getline(in, line)) {
        throw validation_error(path + ": missing header");
    }
    static constexpr std::array<std::string_view, 5> columns{"expiry", "strike", "bid", "ask", "volume"};
    const auto pos = csv::header_columns(line, columns, path);

    ChainLoad out;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (csv::trim(line).empty()) {
            continue;
        }
        const auto fields = csv::split(line);
        auto reject = [&](std::string message) { out.rejected.push_back({row, std::move(message)}); };
        if (fields.size() != columns.size()) {
            reject("expected 5 fields");
            continue;
        }
        Date expiry{};
        try {
            expiry = parse_date(fields[pos[0]]);
        } catch (const validation_error& e) {
            reject(e.what());
            continue;
        }
        const auto strike = csv::parse_number<double>(fields[pos[1]]);
        const auto bid = csv::parse_number<double>(fields[pos[2]]);
        const auto ask = csv::parse_number<double>(fields[pos[3]]);
        const auto volume = csv::parse_number<long long>(fields[pos[4]]);
        if (!strike || !bid || !ask || !volume) {
            reject("unparseable numeric field");
            continue;
        }
        if (*strike < 0.0 || *bid < 0.0 || *ask < 0.0 || *volume < 0) {
            throw validation_error(path + ": row " + std::to_string(row) + ": negative numeric field");
        }
        OptionQuote q;
        q.quote_date = quote_date;
        q.expiry_date = expiry;
        q.strike = *strike;
        q.mid_price = 0.5 * (*bid + *ask);
        q.volume = *volume;
        q.spot = spot;
        q.maturity_years = year_fraction(quote_date, expiry);
        if (q.strike <= 0.0) {
            reject("strike must be > 0");
        } else if (q.maturity_years <= 0.0) {
            reject("expiry not after quote date");
        } else if (q.mid_price > q.strike) {
            reject("mid price exceeds strike");
        } else {
            out.quotes.push_back(q);
        }
    }
    return out;
}

/// Reads a CSV with header maturity_years,price; returns quotes sorted by
/// maturity.
inline std::vector<ZeroBondQuote> load_bonds(const std::string& path) {
    std::ifstream in = csv::open(path);
    std::string line;
    if (!std::getline(in, line)) {
        throw validation_error(path + ": missing header");
    }
    static constexpr std::array<std::string_view, 2> columns{"maturity_years", "price"};
    const auto pos = csv::header_columns(line, columns, path);
    std::vector<ZeroBondQuote> bonds;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (csv::trim(line).empty()) {
            continue;
        }
        const auto fields = csv::split(line);
        const auto maturity = fields.size() == 2 ? csv::parse_number<double>(fields[pos[0]]) : std::nullopt;
        const auto price = fields.size() == 2 ? csv::parse_number<double>(fields[pos[1]]) : std::nullopt;
        if (!maturity || !price || *maturity <= 0.0 || *price <= 0.0 || *price > 1.0) {
            throw validation_error(path + ": row " + std::to_string(row) +
                                   ": need maturity_years > 0 and price in (0, 1]");
        }
        bonds.push_back({*maturity, *price});
    }
    std::sort(bonds.begin(), bonds.end(),
              [](const ZeroBondQuote& a, const ZeroBondQuote& b) { return a.maturity_years < b.maturity_years; });
    return bonds;
}

/// True when prices do not increase with maturity (sorted input).
inline bool is_monotone_curve(const std::vector<ZeroBondQuote>& sorted) {
    for (std::size_t k = 1; k < sorted.size(); ++k) {
        if (sorted[k].price > sorted[k - 1].price) {
            return false;
        }
    }
    return true;
}

namespace detail {
// Boundary comparisons are made in weeks with a small slack so that whole
// day counts land on the intended side.
constexpr double kWeekSlack = 1e-9;

inline double weeks(double years) { return years / kWeek; }
}  // namespace detail

/// Keeps quotes with moneyness K/S in [0.8, 1.2], volume >= 50,
/// mid >= 0.10 and maturity between 1 and 6 weeks inclusive.
inline std::vector<OptionQuote> apply_filters(const std::vector<OptionQuote>& quotes) {
    std::vector<OptionQuote> kept;
    for (const auto& q : quotes) {
        const double moneyness = q.strike / q.spot;
        const double w = detail::weeks(q.maturity_years);
        const bool keep = moneyness >= 0.80 - 1e-12 && moneyness <= 1.20 + 1e-12 && q.volume >= 50 &&
                          q.mid_price >= 0.10 - 1e-12 && w >= 1.0 - detail::kWeekSlack &&
                          w <= 6.0 + detail::kWeekSlack;
        if (keep) {
            kept.push_back(q);
        }
    }
    return kept;
}

inline Moneyness classify_moneyness(double strike, double spot) {
    if (std::abs(strike / spot - 1.0) <= 0.02 + 1e-12) {
        return Moneyness::NTM;
    }
    if (spot > 1.02 * strike) {
        return Moneyness::OTM;
    }
    return Moneyness::ITM;
}

inline MaturityBucket classify_maturity(double maturity_years) {
    const double w = detail::weeks(maturity_years);
    if (w < 1.0 - detail::kWeekSlack || w > 6.0 + detail::kWeekSlack) {
        throw std::out_of_range("bucketize: maturity outside [1, 6] weeks");
    }
    return w < 3.0 - detail::kWeekSlack ? MaturityBucket::Short : MaturityBucket::Mid;
}

inline Bucket bucketize(const OptionQuote& quote) {
    return {classify_moneyness(quote.strike, quote.spot), classify_maturity(quote.maturity_years)};
}

struct BucketEntry {
    Bucket bucket;
    std::size_t count = 0;
    double mse = std::numeric_limits<double>::quiet_NaN();  // NaN when empty
};

struct BucketReport {
    /// Six entries: Short x {ITM, NTM, OTM}, then Mid x {ITM, NTM, OTM}.
    std::vector<BucketEntry> entries;
    std::size_t count = 0;
    double overall_mse = 0.0;
};

inline BucketReport mse_report(const std::vector<std::pair<OptionQuote, double>>& pairs) {
    require(!pairs.empty(), "mse_report: no quotes");
    BucketReport report;
    for (auto maturity : {MaturityBucket::Short, MaturityBucket::Mid}) {
        for (auto moneyness : {Moneyness::ITM, Moneyness::NTM, Moneyness::OTM}) {
            report.entries.push_back({{moneyness, maturity}, 0, 0.0});
        }
    }
    double total = 0.0;
    for (const auto& [quote, model_price] : pairs) {
        const Bucket bucket = bucketize(quote);
        const double residual = model_price - quote.mid_price;
        auto it = std::find_if(report.entries.begin(), report.entries.end(),
                               [&](const BucketEntry& e) { return e.bucket == bucket; });
        it->count += 1;
        it->mse += residual * residual;
        total += residual * residual;
    }
    for (auto& e : report.entries) {
        e.mse = e.count > 0 ? e.mse / static_cast<double>(e.count) : std::numeric_limits<double>::quiet_NaN();
    }
    report.count = pairs.size();
    report.overall_mse = total / static_cast<double>(pairs.size());
    return report;
}

/// CSV with header maturity_bucket,moneyness_bucket,count,mse; empty
/// buckets print NA; the last row is OVERALL,ALL.
inline void write_report_csv(const BucketReport& report, std::ostream& out) {
    out << "maturity_bucket,moneyness_bucket,count,mse\n";
    auto format = [](double value) {
        if (std::isnan(value)) {
            return std::string("NA");
        }
        char buffer[64];
        std::snprintf(buffer, sizeof buffer, "%.10g", value);
        return std::string(buffer);
    };
    for (const auto& e : report.entries) {
        out << to_string(e.bucket.maturity) << ',' << to_string(e.bucket.moneyness) << ',' << e.count << ','
            << format(e.mse) << '\n';
    }
    out << "OVERALL,ALL," << report.count << ',' << format(report.overall_mse) << '\n';
}

}  // namespace amerlsm
