// Times the OpenMP kernels against their serial reference paths: the sweep
// grid, forest training, and batch prediction. Results must agree exactly;
// the timings show the speedup.

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "bess/forest.hpp"
#include "bess/market_data.hpp"
#include "bess/rng.hpp"
#include "bess/sweeps.hpp"
#include "bess/timeutil.hpp"

using namespace bess;

namespace {

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

AlignedDataset bench_dataset(int days) {
    const Date start = civil_to_date(2024, 1, 1);
    std::vector<SettlementRecord> settlements;
    std::vector<ForecastRecord> forecasts;
    for (int d = 0; d < days; ++d) {
        for (int p = 0; p < 48; ++p) {
            const Timestamp st{start_of(Date{start.days + d}).mins + p * kPeriodMinutes};
            double price = 100.0;
            if (p == 8) price = 30.0;
            if (p == 24) price = 40.0;
            if (p == 14) price = 240.0;
            if (p == 36) price = 190.0;
            price += 3.0 * std::sin(0.37 * (d * 48 + p));
            settlements.push_back({Region::NSW1, st, price});
            for (const double h : {0.5, 6.0, 24.0}) {
                forecasts.push_back({Region::NSW1, st,
                                     Timestamp{st.mins - static_cast<std::int64_t>(h * 60)}, h,
                                     price + 2.0 * std::cos(0.11 * p)});
            }
        }
    }
    return align(std::move(settlements), std::move(forecasts), Region::NSW1);
}

template <typename F>
double timed(F&& fn) {
    const double t0 = now_s();
    fn();
    return now_s() - t0;
}

}  // namespace

int main() {
    const int threads = omp_get_max_threads();
    std::printf("hardware threads available: %d\n\n", threads);

    const auto ds = bench_dataset(120);
    std::printf("dataset: %zu settlements, %zu forecasts\n\n", ds.settlements.size(),
                ds.forecasts.size());

    {
        SweepGrid grid = SweepGrid::defaults();
        grid.actions_range = {1, 2, 3, 4, 5};
        std::vector<SweepCell> serial, parallel;
        const double t_serial =
            timed([&] { serial = grid_sweep(ds, BatteryConfig{}, grid, 1); });
        const double t_parallel =
            timed([&] { parallel = grid_sweep(ds, BatteryConfig{}, grid, 0); });
        bool equal = serial.size() == parallel.size();
        for (std::size_t i = 0; equal && i < serial.size(); ++i) {
            equal = serial[i].total_revenue == parallel[i].total_revenue;
        }
        std::printf("sweep grid (%zu cells):   serial %.3fs, parallel %.3fs, speedup %.2fx, "
                    "results %s\n",
                    serial.size(), t_serial, t_parallel, t_serial / t_parallel,
                    equal ? "identical" : "DIFFER");
    }

    {
        const auto rows = make_training_rows(ds, ds.settlements.front().settlement_time,
                                             ds.settlements.back().settlement_time, 2);
        ForestHyperparams hp;
        hp.n_trees = 60;
        EnsembleModel serial_model = train(rows, hp, 3, 1);
        EnsembleModel parallel_model = serial_model;
        const double t_serial = timed([&] { serial_model = train(rows, hp, 3, 1); });
        const double t_parallel = timed([&] { parallel_model = train(rows, hp, 3, 0); });
        bool equal = true;
        for (std::size_t i = 0; i < rows.size() && equal; i += 97) {
            equal = serial_model.predict(rows[i].features) ==
                    parallel_model.predict(rows[i].features);
        }
        std::printf("forest train (%zu rows):  serial %.3fs, parallel %.3fs, speedup %.2fx, "
                    "results %s\n",
                    rows.size(), t_serial, t_parallel, t_serial / t_parallel,
                    equal ? "identical" : "DIFFER");

        std::vector<double> serial_pred, parallel_pred;
        const double tp_serial = timed([&] {
            const auto src = enhanced_source(serial_model, ds, 1);
            serial_pred.push_back(src.price_of(0, ds.forecasts[0]));
        });
        const double tp_parallel = timed([&] {
            const auto src = enhanced_source(serial_model, ds, 0);
            parallel_pred.push_back(src.price_of(0, ds.forecasts[0]));
        });
        std::printf("batch predict (%zu rows): serial %.3fs, parallel %.3fs, speedup %.2fx, "
                    "results %s\n",
                    ds.forecasts.size(), tp_serial, tp_parallel, tp_serial / tp_parallel,
                    serial_pred == parallel_pred ? "identical" : "DIFFER");
    }

    return 0;
}
