#pragma once

// Collapses all forecasts available at decision time into one weighted price
// per future settlement period, with weights 1 / hours_ahead.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "bess/market_data.hpp"

namespace bess {

struct WeightedForecast {
    Timestamp settlement_time;
    double price = 0.0;   // convex combination of the contributing predictions
    int contributing = 0;
};

// Price provider for the optimizer: raw operator predictions, or a
// precomputed correction aligned index-for-index with dataset.forecasts.
class ForecastSource {
public:
    static ForecastSource raw() { return ForecastSource{}; }
    static ForecastSource corrected(std::vector<double> prices) {
        ForecastSource s;
        s.corrected_ = std::move(prices);
        return s;
    }

    bool is_raw() const { return corrected_.empty(); }

    double price_of(std::size_t record_index, const ForecastRecord& record) const {
        return corrected_.empty() ? record.predicted_price : corrected_[record_index];
    }

private:
    std::vector<double> corrected_;
};

struct LookaheadStats {
    std::size_t omitted_periods = 0;     // future periods with no usable forecast
    std::size_t hygiene_violations = 0;  // contributions with made_time > now (must stay 0)
};

// Weighted price over one target period's forecasts made at or before `now`.
// Returns nullopt when nothing is available (the period is un-plannable).
std::optional<WeightedForecast> weighted_forecast(std::span<const ForecastRecord> forecasts,
                                                  Timestamp now);

// One entry per future half-hour in (now, now + horizon_hours] that has at
// least one available forecast; periods with none are omitted and counted.
std::vector<WeightedForecast> lookahead_prices(const AlignedDataset& dataset, Timestamp now,
                                               double horizon_hours, const ForecastSource& source,
                                               LookaheadStats* stats = nullptr);

// Debug dump of one lookahead window.
void write_weighted_forecasts_csv(const std::filesystem::path& path,
                                  std::span<const WeightedForecast> prices);

}  // namespace bess
