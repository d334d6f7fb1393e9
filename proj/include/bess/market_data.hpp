#pragma once

// Ingestion of dispatch prices and pre-dispatch forecasts: parse, clean,
// resample to 30-minute periods, align into one dataset, and cache it.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bess/errors.hpp"
#include "bess/timeutil.hpp"

namespace bess {

enum class Region : std::uint8_t { NSW1, QLD1, SA1, VIC1, TAS1 };

std::optional<Region> parse_region(std::string_view name);
std::string_view region_name(Region r);

struct SettlementRecord {
    Region region;
    Timestamp settlement_time;
    double actual_price = 0.0;  // regional reference price, $/MWh; may be negative or extreme
};

struct ForecastRecord {
    Region region;
    Timestamp settlement_time;
    Timestamp made_time;
    double hours_ahead = 0.0;  // settlement_time - made_time, multiple of 0.5
    double predicted_price = 0.0;
};

struct PredispatchStats {
    std::size_t rows_kept = 0;
    std::size_t rows_discarded_short_horizon = 0;  // hours_ahead < 0.5
    std::size_t rows_rejected_inverted = 0;        // made_time after settlement_time
};

struct AlignedDataset {
    Region region = Region::NSW1;
    std::vector<SettlementRecord> settlements;  // strictly increasing settlement_time
    std::vector<ForecastRecord> forecasts;      // sorted by (settlement_time, made_time)
    std::size_t unmatched_forecasts = 0;        // forecasts with no matching settlement

    std::optional<double> actual_price(Timestamp t) const;
    bool has_settlement(Timestamp t) const { return actual_price(t).has_value(); }
    std::span<const ForecastRecord> forecasts_for(Timestamp target) const;
    std::size_t distinct_days() const;
};

std::vector<SettlementRecord> parse_dispatch(const std::filesystem::path& path, Region region);

// Arithmetic mean of the six 5-minute prices per half-hour window.
// Input already at 30-minute cadence passes through unchanged.
std::vector<SettlementRecord> resample_to_30min(std::vector<SettlementRecord> records);

std::vector<ForecastRecord> parse_predispatch(const std::filesystem::path& path, Region region,
                                              PredispatchStats* stats = nullptr);

AlignedDataset align(std::vector<SettlementRecord> settlements,
                     std::vector<ForecastRecord> forecasts, Region region);

void cache_write(const AlignedDataset& dataset, const std::filesystem::path& path);
AlignedDataset cache_read(const std::filesystem::path& path);

}  // namespace bess
