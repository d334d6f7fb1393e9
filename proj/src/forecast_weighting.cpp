#include "bess/forecast_weighting.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "bess/csvio.hpp"

namespace bess {

namespace {

// `forecasts` is expected to hold only records available at `now`; any record
// that slips through with made_time > now is excluded here and counted as a
// hygiene violation rather than silently used.
std::optional<WeightedForecast> weighted_over(std::span<const ForecastRecord> forecasts,
                                              Timestamp now, const ForecastSource& source,
                                              std::size_t base_index, LookaheadStats* stats) {
    double weight_sum = 0.0;
    double price_sum = 0.0;
    int contributing = 0;
    Timestamp target{};
    for (std::size_t i = 0; i < forecasts.size(); ++i) {
        const auto& f = forecasts[i];
        if (f.made_time > now) {
            if (stats) ++stats->hygiene_violations;
            continue;
        }
        const double w = 1.0 / f.hours_ahead;
        weight_sum += w;
        price_sum += w * source.price_of(base_index + i, f);
        ++contributing;
        target = f.settlement_time;
    }
    if (contributing == 0) return std::nullopt;
    return WeightedForecast{target, price_sum / weight_sum, contributing};
}

}  // namespace

std::optional<WeightedForecast> weighted_forecast(std::span<const ForecastRecord> forecasts,
                                                  Timestamp now) {
    const ForecastSource raw = ForecastSource::raw();
    return weighted_over(forecasts, now, raw, 0, nullptr);
}

std::vector<WeightedForecast> lookahead_prices(const AlignedDataset& dataset, Timestamp now,
                                               double horizon_hours, const ForecastSource& source,
                                               LookaheadStats* stats) {
    std::vector<WeightedForecast> out;
    const auto periods = static_cast<std::int64_t>(std::llround(horizon_hours * 60.0)) /
                         kPeriodMinutes;
    out.reserve(static_cast<std::size_t>(periods));
    for (std::int64_t k = 1; k <= periods; ++k) {
        const Timestamp target{now.mins + k * kPeriodMinutes};
        const auto span = dataset.forecasts_for(target);
        // Records per target are sorted by made_time, so the available set is
        // the prefix up to `now`.
        const auto cut = std::upper_bound(
            span.begin(), span.end(), now,
            [](Timestamp t, const ForecastRecord& r) { return t < r.made_time; });
        const std::span<const ForecastRecord> available{span.begin(), cut};
        const auto base = available.empty()
                              ? 0
                              : static_cast<std::size_t>(available.data() -
                                                         dataset.forecasts.data());
        const auto wf = weighted_over(available, now, source, base, stats);
        if (wf) {
            out.push_back(*wf);
        } else if (stats) {
            ++stats->omitted_periods;
        }
    }
    return out;
}

void write_weighted_forecasts_csv(const std::filesystem::path& path,
                                  std::span<const WeightedForecast> prices) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << "settlement_time,price,contributing\n";
    for (const auto& wf : prices) {
        out << format_timestamp(wf.settlement_time) << ',' << fmt_double(wf.price) << ','
            << wf.contributing << '\n';
    }
}

}  // namespace bess
