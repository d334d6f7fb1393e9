#include "bess/backtest.hpp"

#include <fstream>

#include "bess/csvio.hpp"
#include "json.hpp"

namespace bess {

void write_result_json(const std::filesystem::path& path, const BacktestResult& result) {
    nlohmann::ordered_json j;
    j["strategy"] = result.strategy;
    j["total_revenue"] = result.total_revenue();
    j["actions_total"] = result.actions_total;
    j["actions_per_day_mean"] = result.actions_per_day_mean;
    j["hourly_histogram"]["charge"] = result.histogram.charges;
    j["hourly_histogram"]["discharge"] = result.histogram.discharges;
    j["cumulative_revenue_csv"] = "cumulative_revenue.csv";
    j["rejected_bids"] = result.rejected_bids;
    j["overrides_executed"] = result.overrides_executed;
    j["unplannable_periods"] = result.unplannable_periods;
    j["skipped_by_daily_limit"] = result.skipped_by_daily_limit;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void write_cumulative_csv(const std::filesystem::path& path, const BacktestResult& result) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << "settlement_time,cumulative_revenue\n";
    for (const auto& [t, revenue] : result.cumulative_revenue) {
        out << format_timestamp(t) << ',' << fmt_double(revenue) << '\n';
    }
}

void write_histogram_csv(const std::filesystem::path& path, const HourlyHistogram& histogram) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << "hour,charge_actions,discharge_actions\n";
    for (int h = 0; h < 24; ++h) {
        out << h << ',' << histogram.charges[static_cast<std::size_t>(h)] << ','
            << histogram.discharges[static_cast<std::size_t>(h)] << '\n';
    }
}

}  // namespace bess
