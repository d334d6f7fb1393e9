#pragma once

// Forecast-error statistics by horizon / hour / weekday / month, and
// within-day price volatility.

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "bess/market_data.hpp"

namespace bess {

struct ErrorRecord {
    Region region;
    Timestamp settlement_time;
    double hours_ahead;
    double abs_error;                 // predicted - actual, $/MWh
    std::optional<double> pct_error;  // present iff |actual| >= 1 $/MWh
};

struct GroupStats {
    int key = 0;  // horizon bucket (half-hours), hour 0-23, weekday 0-6, or month 1-12
    std::size_t n = 0;
    double mean = 0.0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double ci95_lo = 0.0;
    double ci95_hi = 0.0;
};

enum class TemporalGrouping { Hour, Weekday, Month };

struct VolatilityRecord {
    Region region;
    Date date;
    double stddev = 0.0;  // population stddev over the day's 48 prices
};

struct VolatilityResult {
    std::vector<VolatilityRecord> days;
    double overall_mean = 0.0;
    std::size_t partial_days_skipped = 0;
};

std::vector<ErrorRecord> compute_errors(const AlignedDataset& dataset);

// Buckets at exactly 0.5 h granularity; key = hours_ahead * 2.
std::vector<GroupStats> horizon_profile(std::span<const ErrorRecord> errors, Region region);

std::vector<GroupStats> temporal_profile(std::span<const ErrorRecord> errors,
                                         TemporalGrouping grouping);

VolatilityResult volatility(std::span<const SettlementRecord> settlements, Region region);

// CSV exports with columns exactly matching the record fields.
void write_group_stats_csv(const std::filesystem::path& path, std::span<const GroupStats> stats,
                           bool horizon_keys);
void write_volatility_csv(const std::filesystem::path& path, const VolatilityResult& result);

}  // namespace bess
