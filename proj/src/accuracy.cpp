#include "bess/accuracy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "bess/csvio.hpp"

namespace bess {

namespace {

double quantile_sorted(const std::vector<double>& v, double p) {
    // Linear interpolation between order statistics (the numpy default).
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= v.size()) return v.back();
    const double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[lo + 1] - v[lo]);
}

GroupStats stats_for(int key, std::vector<double> values) {
    GroupStats g;
    g.key = key;
    g.n = values.size();
    double sum = 0.0;
    for (const double v : values) sum += v;
    g.mean = sum / static_cast<double>(g.n);
    std::sort(values.begin(), values.end());
    g.median = quantile_sorted(values, 0.5);
    g.q1 = quantile_sorted(values, 0.25);
    g.q3 = quantile_sorted(values, 0.75);
    double sq = 0.0;
    for (const double v : values) sq += (v - g.mean) * (v - g.mean);
    const double s = g.n > 1 ? std::sqrt(sq / static_cast<double>(g.n - 1)) : 0.0;
    const double half = 1.96 * s / std::sqrt(static_cast<double>(g.n));
    g.ci95_lo = g.mean - half;
    g.ci95_hi = g.mean + half;
    return g;
}

std::vector<GroupStats> grouped(const std::map<int, std::vector<double>>& groups) {
    std::vector<GroupStats> out;
    out.reserve(groups.size());
    for (const auto& [key, values] : groups) out.push_back(stats_for(key, values));
    return out;
}

}  // namespace

std::vector<ErrorRecord> compute_errors(const AlignedDataset& dataset) {
    std::vector<ErrorRecord> out;
    out.reserve(dataset.forecasts.size());
    for (const auto& f : dataset.forecasts) {
        const auto actual = dataset.actual_price(f.settlement_time);
        if (!actual) continue;
        ErrorRecord e;
        e.region = f.region;
        e.settlement_time = f.settlement_time;
        e.hours_ahead = f.hours_ahead;
        e.abs_error = f.predicted_price - *actual;
        if (std::abs(*actual) >= 1.0) {
            e.pct_error = 100.0 * (f.predicted_price - *actual) / *actual;
        }
        out.push_back(e);
    }
    return out;
}

std::vector<GroupStats> horizon_profile(std::span<const ErrorRecord> errors, Region region) {
    std::map<int, std::vector<double>> groups;
    for (const auto& e : errors) {
        if (e.region != region) continue;
        groups[static_cast<int>(std::lround(e.hours_ahead * 2.0))].push_back(e.abs_error);
    }
    return grouped(groups);
}

std::vector<GroupStats> temporal_profile(std::span<const ErrorRecord> errors,
                                         TemporalGrouping grouping) {
    std::map<int, std::vector<double>> groups;
    for (const auto& e : errors) {
        int key = 0;
        switch (grouping) {
            case TemporalGrouping::Hour: key = hour_of_day(e.settlement_time); break;
            case TemporalGrouping::Weekday: key = weekday(date_of(e.settlement_time)); break;
            case TemporalGrouping::Month: key = month_of(date_of(e.settlement_time)); break;
        }
        groups[key].push_back(e.abs_error);
    }
    return grouped(groups);
}

VolatilityResult volatility(std::span<const SettlementRecord> settlements, Region region) {
    std::map<Date, std::vector<double>> days;
    for (const auto& s : settlements) {
        if (s.region != region) continue;
        days[date_of(s.settlement_time)].push_back(s.actual_price);
    }
    VolatilityResult result;
    double sum = 0.0;
    for (const auto& [date, prices] : days) {
        if (prices.size() != 48) {
            ++result.partial_days_skipped;
            continue;
        }
        double mean = 0.0;
        for (const double p : prices) mean += p;
        mean /= 48.0;
        double sq = 0.0;
        for (const double p : prices) sq += (p - mean) * (p - mean);
        const double sd = std::sqrt(sq / 48.0);
        result.days.push_back({region, date, sd});
        sum += sd;
    }
    if (!result.days.empty()) sum /= static_cast<double>(result.days.size());
    result.overall_mean = sum;
    return result;
}

void write_group_stats_csv(const std::filesystem::path& path, std::span<const GroupStats> stats,
                           bool horizon_keys) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << "group_key,n,mean,median,q1,q3,ci95_lo,ci95_hi\n";
    for (const auto& g : stats) {
        if (horizon_keys) {
            out << fmt_double(static_cast<double>(g.key) * 0.5);
        } else {
            out << g.key;
        }
        out << ',' << g.n << ',' << fmt_double(g.mean) << ',' << fmt_double(g.median) << ','
            << fmt_double(g.q1) << ',' << fmt_double(g.q3) << ',' << fmt_double(g.ci95_lo) << ','
            << fmt_double(g.ci95_hi) << '\n';
    }
}

void write_volatility_csv(const std::filesystem::path& path, const VolatilityResult& result) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << "region,date,stddev\n";
    for (const auto& d : result.days) {
        out << region_name(d.region) << ',' << format_date(d.date) << ',' << fmt_double(d.stddev)
            << '\n';
    }
}

}  // namespace bess
