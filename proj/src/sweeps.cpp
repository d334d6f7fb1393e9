#include "bess/sweeps.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "bess/csvio.hpp"

namespace bess {

SweepGrid SweepGrid::defaults() {
    SweepGrid g;
    g.buy_range = steps(-50.0, 50.0, 10.0);
    g.sell_range = steps(50.0, 150.0, 10.0);
    g.actions_range.resize(10);
    for (int i = 0; i < 10; ++i) g.actions_range[static_cast<std::size_t>(i)] = i + 1;
    return g;
}

std::vector<double> SweepGrid::steps(double lo, double hi, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("sweep step must be positive");
    std::vector<double> out;
    for (double v = lo; v <= hi + 1e-9; v += step) out.push_back(v);
    return out;
}

void SweepGrid::validate() const {
    if (buy_range.empty() || sell_range.empty() || actions_range.empty()) {
        throw std::invalid_argument("sweep ranges must be non-empty");
    }
    for (const int a : actions_range) {
        if (a < 0) throw std::invalid_argument("actions_range entries must be >= 0");
    }
}

namespace {

struct CellParams {
    double buy;
    double sell;
    int max_actions;
};

SweepCell run_cell(const AlignedDataset& dataset, const BatteryConfig& config,
                   const CellParams& p) {
    BaselineParams params;
    params.charge_bid = p.buy;
    params.discharge_offer = p.sell;
    params.daily_action_max = p.max_actions;
    SweepCell cell;
    cell.buy = p.buy;
    cell.sell = p.sell;
    cell.max_actions = p.max_actions;
    const BacktestResult result = run_baseline_backtest(dataset, config, params);
    cell.total_revenue = result.total_revenue();
    cell.actions_per_day_mean = result.actions_per_day_mean;
    return cell;
}

// Each cell owns its battery state, so cells are independent; the serial
// loop is the reference the parallel path must reproduce exactly.
std::vector<SweepCell> run_cells(const AlignedDataset& dataset, const BatteryConfig& config,
                                 const std::vector<CellParams>& combos, int jobs) {
    std::vector<SweepCell> cells(combos.size());
    if (jobs == 1) {
        for (std::size_t i = 0; i < combos.size(); ++i) {
            cells[i] = run_cell(dataset, config, combos[i]);
        }
        return cells;
    }
    const auto n = static_cast<std::int64_t>(combos.size());
#pragma omp parallel for schedule(dynamic) num_threads(jobs > 0 ? jobs : omp_get_max_threads())
    for (std::int64_t i = 0; i < n; ++i) {
        cells[static_cast<std::size_t>(i)] =
            run_cell(dataset, config, combos[static_cast<std::size_t>(i)]);
    }
    return cells;
}

}  // namespace

std::vector<SweepCell> threshold_sweep(const AlignedDataset& dataset, const BatteryConfig& config,
                                       const SweepGrid& grid, int max_actions, int jobs) {
    grid.validate();
    std::vector<CellParams> combos;
    combos.reserve(grid.buy_range.size() * grid.sell_range.size() + grid.extended_points.size());
    for (const double buy : grid.buy_range) {
        for (const double sell : grid.sell_range) {
            combos.push_back({buy, sell, max_actions});
        }
    }
    for (const auto& [buy, sell] : grid.extended_points) {
        combos.push_back({buy, sell, max_actions});
    }
    return run_cells(dataset, config, combos, jobs);
}

std::vector<SweepCell> max_actions_sweep(const AlignedDataset& dataset,
                                         const BatteryConfig& config,
                                         const BaselineParams& params,
                                         std::span<const int> actions_range, int jobs) {
    if (actions_range.empty()) throw std::invalid_argument("actions_range must be non-empty");
    std::vector<CellParams> combos;
    combos.reserve(actions_range.size());
    for (const int cap : actions_range) {
        if (cap < 0) throw std::invalid_argument("actions_range entries must be >= 0");
        combos.push_back({params.charge_bid, params.discharge_offer, cap});
    }
    return run_cells(dataset, config, combos, jobs);
}

std::vector<SweepCell> grid_sweep(const AlignedDataset& dataset, const BatteryConfig& config,
                                  const SweepGrid& grid, int jobs) {
    grid.validate();
    std::vector<CellParams> combos;
    combos.reserve(grid.buy_range.size() * grid.sell_range.size() * grid.actions_range.size());
    for (const double buy : grid.buy_range) {
        for (const double sell : grid.sell_range) {
            for (const int cap : grid.actions_range) {
                combos.push_back({buy, sell, cap});
            }
        }
    }
    return run_cells(dataset, config, combos, jobs);
}

const SweepCell* argmax_cell(std::span<const SweepCell> cells) {
    const SweepCell* best = nullptr;
    for (const auto& c : cells) {
        if (!best || c.total_revenue > best->total_revenue) best = &c;
    }
    return best;
}

std::optional<int> plateau_cap(std::span<const SweepCell> curve) {
    if (curve.empty()) return std::nullopt;
    const double final_revenue = curve.back().total_revenue;
    for (const auto& c : curve) {
        if (c.total_revenue == final_revenue) return c.max_actions;
    }
    return curve.back().max_actions;
}

namespace {

void write_cells(const std::filesystem::path& path, std::span<const SweepCell> cells) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << "buy,sell,max_actions,actions_per_day_mean,total_revenue\n";
    for (const auto& c : cells) {
        out << fmt_double(c.buy) << ',' << fmt_double(c.sell) << ',' << c.max_actions << ','
            << fmt_double(c.actions_per_day_mean) << ',' << fmt_double(c.total_revenue) << '\n';
    }
}

}  // namespace

void export_heatmap_csv(const std::filesystem::path& path, std::span<const SweepCell> cells) {
    write_cells(path, cells);
}

void export_actions_curve_csv(const std::filesystem::path& path,
                              std::span<const SweepCell> cells) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << "max_actions,total_revenue\n";
    for (const auto& c : cells) {
        out << c.max_actions << ',' << fmt_double(c.total_revenue) << '\n';
    }
}

void parallel_coords_export(const std::filesystem::path& path,
                            std::span<const SweepCell> cells) {
    if (cells.empty()) throw std::invalid_argument("no cells to export");
    write_cells(path, cells);
}

}  // namespace bess
