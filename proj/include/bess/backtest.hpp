#pragma once

// Result type shared by the baseline and MILP backtests, plus artifact
// writers (result JSON, ledger CSV, cumulative revenue CSV, histogram CSV).

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "bess/battery.hpp"

namespace bess {

struct HourlyHistogram {
    std::array<std::uint64_t, 24> charges{};
    std::array<std::uint64_t, 24> discharges{};

    void record(TradeAction action, Timestamp t) {
        auto& buckets = action == TradeAction::Charge ? charges : discharges;
        ++buckets[static_cast<std::size_t>(hour_of_day(t))];
    }
};

struct BacktestResult {
    std::string strategy;
    TradeLedger ledger;
    HourlyHistogram histogram;
    std::uint64_t actions_total = 0;
    double actions_per_day_mean = 0.0;
    std::vector<std::pair<Timestamp, double>> cumulative_revenue;  // one point per period

    // MILP-only diagnostics; zero for the baseline.
    std::uint64_t rejected_bids = 0;
    std::uint64_t overrides_executed = 0;
    std::uint64_t unplannable_periods = 0;
    std::uint64_t skipped_by_daily_limit = 0;
    std::uint64_t hygiene_violations = 0;

    double total_revenue() const { return ledger.total_revenue; }
};

void write_result_json(const std::filesystem::path& path, const BacktestResult& result);
void write_cumulative_csv(const std::filesystem::path& path, const BacktestResult& result);
void write_histogram_csv(const std::filesystem::path& path, const HourlyHistogram& histogram);

}  // namespace bess
