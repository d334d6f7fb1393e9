#pragma once

// Parameter studies over the baseline strategy: buy/sell threshold heatmap,
// max-actions-per-day curve, and the combined grid for parallel coordinates.
// Cells are independent backtests; they run under OpenMP with a serial path
// kept as the reference for testing.

#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "bess/market_data.hpp"
#include "bess/strategy_baseline.hpp"

namespace bess {

struct SweepGrid {
    std::vector<double> buy_range;    // default -50..50 step 10
    std::vector<double> sell_range;   // default 50..150 step 10
    std::vector<std::pair<double, double>> extended_points;  // e.g. (1500, 1500)
    std::vector<int> actions_range;   // default 1..10

    static SweepGrid defaults();
    static std::vector<double> steps(double lo, double hi, double step);
    void validate() const;  // throws std::invalid_argument
};

struct SweepCell {
    double buy = 0.0;
    double sell = 0.0;
    int max_actions = 0;
    double total_revenue = 0.0;
    double actions_per_day_mean = 0.0;
};

// One baseline backtest per (buy, sell) pair at a fixed daily cap, including
// the grid's extended points. Results ordered by (buy, sell).
std::vector<SweepCell> threshold_sweep(const AlignedDataset& dataset, const BatteryConfig& config,
                                       const SweepGrid& grid, int max_actions, int jobs = 0);

// Revenue as a function of the daily action cap at fixed thresholds.
std::vector<SweepCell> max_actions_sweep(const AlignedDataset& dataset,
                                         const BatteryConfig& config,
                                         const BaselineParams& params,
                                         std::span<const int> actions_range, int jobs = 0);

// Full buy x sell x cap cross product for the parallel-coordinates export.
std::vector<SweepCell> grid_sweep(const AlignedDataset& dataset, const BatteryConfig& config,
                                  const SweepGrid& grid, int jobs = 0);

const SweepCell* argmax_cell(std::span<const SweepCell> cells);

// First cap whose revenue already matches the largest cap's revenue.
std::optional<int> plateau_cap(std::span<const SweepCell> curve);

void export_heatmap_csv(const std::filesystem::path& path, std::span<const SweepCell> cells);
void export_actions_curve_csv(const std::filesystem::path& path,
                              std::span<const SweepCell> cells);
void parallel_coords_export(const std::filesystem::path& path, std::span<const SweepCell> cells);

}  // namespace bess
