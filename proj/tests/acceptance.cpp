// Acceptance suite: runs every gate criterion at its stated tolerance and
// prints one pass/fail line each. Exit code is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bess/accuracy.hpp"
#include "bess/backtest.hpp"
#include "bess/battery.hpp"
#include "bess/finance.hpp"
#include "bess/forecast_weighting.hpp"
#include "bess/forest.hpp"
#include "bess/market_data.hpp"
#include "bess/optimizer.hpp"
#include "bess/rng.hpp"
#include "bess/strategy_baseline.hpp"
#include "helpers/synthetic.hpp"

using namespace bess;

namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void expect(bool condition, const std::string& message) {
    if (!condition) throw Failure(message);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// Every backtest executed by this suite lands here for the ledger
// conservation criterion.
std::vector<std::pair<std::string, TradeLedger>> g_ledgers;

void track(const std::string& name, const BacktestResult& result) {
    g_ledgers.emplace_back(name, result.ledger);
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(BESS_CLI_BIN) + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

std::string criterion_financial() {
    const CashModel model;  // capex 8M, opex 20k, 5.5%, 20 years
    const struct {
        double cashflow, npv, payback, irr;
    } rows[] = {
        {430'000.0, -2.86e6, 18.6, 0.01},
        {730'000.0, 0.72e6, 11.0, 0.07},
        {980'000.0, 3.71e6, 8.2, 0.11},
    };
    for (const auto& row : rows) {
        const double value = npv(model, row.cashflow);
        expect(std::abs(value - row.npv) <= 0.01e6,
               "npv(" + fmt(row.cashflow) + ") = " + fmt(value) + ", want " + fmt(row.npv) +
                   " +/- 0.01M");
        const auto pb = payback(model, row.cashflow);
        expect(pb.has_value() && std::abs(*pb - row.payback) <= 0.05,
               "payback(" + fmt(row.cashflow) + ") = " + fmt(pb.value_or(-1)) + ", want " +
                   fmt(row.payback) + " +/- 0.05");
        const auto rate = irr(model, row.cashflow);
        expect(rate.has_value() && std::abs(*rate - row.irr) <= 0.005,
               "irr(" + fmt(row.cashflow) + ") = " + fmt(rate.value_or(-1)) + ", want " +
                   fmt(row.irr) + " +/- 0.5pp");
    }
    return "three cashflow rows match the published NPV/payback/IRR";
}

std::string criterion_degradation() {
    BatteryConfig config;  // eta = 0.00005
    TradeLedger ledger;
    auto state = new_state(config);
    const Timestamp t = *parse_timestamp("2024-01-01T00:00");
    for (int k = 0; k < 500; ++k) {
        expect(execute_discharge(state, config, t, 200.0, 150.0, ledger), "discharge failed");
        expect(execute_charge(state, config, t, 40.0, 50.0, ledger), "charge failed");
    }
    const double ratio = state.capacity_max / config.capacity_init;
    expect(std::abs(ratio - 0.951207) <= 0.00001,
           "capacity ratio after 1000 actions = " + fmt(ratio) +
               ", asserted 0.951207 +/- 0.00001; exact compounding gives (1-0.00005)^1000 = " +
               fmt(std::pow(1.0 - 0.00005, 1000)));
    return "capacity ratio " + fmt(ratio);
}

std::string criterion_spike() {
    BatteryConfig config;
    TradeLedger ledger;
    auto state = new_state(config);  // soc 10 >= 5
    const Timestamp t = *parse_timestamp("2024-12-01T18:00");
    expect(execute_discharge(state, config, t, 17480.0, 150.0, ledger), "spike bid rejected");
    const double cash = ledger.entries.back().cash_delta;
    expect(std::abs(cash - 87400.0) < 1e-9,
           "spike cash = " + fmt(cash) + ", want 87400");
    return "one 17,480 period pays " + fmt(cash);
}

std::string criterion_optimizer_exactness() {
    OptimizerParams params;
    Rng rng(0xACCE55);
    int instances = 0;
    for (int trial = 0; trial < 110; ++trial) {
        const int n = rng.uniform_int(4, 16);
        HorizonInstance inst;
        const Date day = civil_to_date(2024, 3, 1 + trial % 28);
        const int start_period = rng.uniform_int(0, 47);
        for (int i = 0; i < n; ++i) {
            inst.prices.push_back(
                {Timestamp{start_of(day).mins + (start_period + i) * kPeriodMinutes},
                 rng.uniform(-50.0, 300.0), 1});
        }
        // soc0 on the half-MWh lattice so the 0.05 grid oracle can reach the
        // continuous optimum exactly.
        inst.soc0 = rng.uniform_int(0, 40) * 0.5;
        inst.capacity_max = 20.0;
        const auto plan = solve_horizon(inst, params);
        validate_plan(inst, params, plan);
        const double coarse = oracle_dp(inst, params, 0.5);
        expect(plan.objective_value >= coarse - 1e-9,
               "solver " + fmt(plan.objective_value) + " below 0.5-grid oracle " + fmt(coarse));
        const double fine = oracle_dp(inst, params, 0.05);
        const double tol = 1e-6 * std::max(1.0, std::abs(fine));
        expect(std::abs(plan.objective_value - fine) <= tol,
               "solver " + fmt(plan.objective_value) + " vs 0.05-grid oracle " + fmt(fine));
        ++instances;
    }
    return fmt(instances) + " randomized instances within contract, all plans validated";
}

std::string criterion_hygiene() {
    fixtures::YearSpec spec{.days = 366, .seed = 1001};
    spec.bias = fixtures::ordering_bias;
    const auto ds = fixtures::build_year(spec);
    const auto result = run_milp_backtest(ds, BatteryConfig{}, OptimizerParams{},
                                          ForecastSource::raw());
    track("hygiene milp-raw year", result);
    expect(result.hygiene_violations == 0,
           fmt(static_cast<double>(result.hygiene_violations)) + " hygiene violations");
    expect(result.actions_total > 0, "backtest executed no actions");
    return "full-year backtest, zero look-ahead violations";
}

std::string criterion_strategy_ordering() {
    fixtures::YearSpec train_spec{.start_year = 2023, .days = 365, .seed = 2023};
    train_spec.bias = fixtures::ordering_bias;
    const auto train_ds = fixtures::build_year(train_spec);

    fixtures::YearSpec test_spec{.start_year = 2024, .days = 366, .seed = 2024};
    test_spec.bias = fixtures::ordering_bias;
    const auto test_ds = fixtures::build_year(test_spec);

    const auto rows = make_training_rows(train_ds, train_ds.settlements.front().settlement_time,
                                         train_ds.settlements.back().settlement_time, 6);
    const auto model = train(rows, ForestHyperparams{}, 7);

    BatteryConfig config;
    const auto base = run_baseline_backtest(test_ds, config, BaselineParams{});
    track("ordering baseline", base);
    const auto raw = run_milp_backtest(test_ds, config, OptimizerParams{},
                                       ForecastSource::raw());
    track("ordering milp-raw", raw);
    const auto ml = run_milp_backtest(test_ds, config, OptimizerParams{},
                                      enhanced_source(model, test_ds));
    track("ordering milp-ml", ml);

    const double b = base.total_revenue();
    const double r = raw.total_revenue();
    const double m = ml.total_revenue();
    expect(b <= r, "baseline " + fmt(b) + " > milp-raw " + fmt(r));
    expect(r <= m, "milp-raw " + fmt(r) + " > milp-ml " + fmt(m));
    return "baseline " + fmt(b) + " <= milp-raw " + fmt(r) + " <= milp-ml " + fmt(m);
}

std::string criterion_bias_correction() {
    fixtures::YearSpec train_spec{.start_year = 2023, .days = 90, .seed = 3001};
    train_spec.bias = fixtures::hourly_bias;
    train_spec.forecast_noise = 0.0;
    train_spec.actual_noise = 1.0;
    const auto train_ds = fixtures::build_year(train_spec);

    fixtures::YearSpec test_spec = train_spec;
    test_spec.start_year = 2024;
    test_spec.seed = 3002;
    test_spec.days = 45;
    const auto test_ds = fixtures::build_year(test_spec);

    const auto rows = make_training_rows(train_ds, train_ds.settlements.front().settlement_time,
                                         train_ds.settlements.back().settlement_time, 4);
    const auto model = train(rows, ForestHyperparams{}, 11);

    const auto raw_errors = compute_errors(test_ds);
    const auto ml_errors = accuracy_report(model, test_ds);
    expect(raw_errors.size() == ml_errors.size(), "error record counts differ");
    double raw_mae[24] = {};
    double ml_mae[24] = {};
    std::size_t counts[24] = {};
    for (std::size_t i = 0; i < raw_errors.size(); ++i) {
        const int h = hour_of_day(raw_errors[i].settlement_time);
        raw_mae[h] += std::abs(raw_errors[i].abs_error);
        ml_mae[h] += std::abs(ml_errors[i].abs_error);
        ++counts[h];
    }
    for (int h = 0; h < 24; ++h) {
        expect(counts[h] > 0, "hour bucket " + fmt(h) + " is empty");
        expect(ml_mae[h] < raw_mae[h],
               "hour " + fmt(h) + ": model MAE " + fmt(ml_mae[h] / counts[h]) +
                   " not below operator MAE " + fmt(raw_mae[h] / counts[h]));
    }
    return "model beats the biased operator in all 24 hour buckets";
}

std::string criterion_accuracy_properties() {
    Rng rng(4001);
    for (int trial = 0; trial < 1000; ++trial) {
        const int days = rng.uniform_int(1, 2);
        std::vector<SettlementRecord> settlements;
        std::vector<ForecastRecord> forecasts;
        const Date start = civil_to_date(2024, rng.uniform_int(1, 12), rng.uniform_int(1, 28));
        for (int d = 0; d < days; ++d) {
            for (int p = 0; p < 48; ++p) {
                const Timestamp st{start_of(Date{start.days + d}).mins + p * kPeriodMinutes};
                const double actual = rng.uniform(-100.0, 300.0);
                settlements.push_back({Region::NSW1, st, actual});
                const int horizons = rng.uniform_int(1, 2);
                for (int h = 1; h <= horizons; ++h) {
                    forecasts.push_back({Region::NSW1, st, Timestamp{st.mins - h * 30},
                                         h * 0.5, actual + rng.uniform(-60.0, 60.0)});
                }
            }
        }
        const auto ds = align(std::move(settlements), std::move(forecasts), Region::NSW1);
        const auto errors = compute_errors(ds);
        for (const auto grouping :
             {TemporalGrouping::Hour, TemporalGrouping::Weekday, TemporalGrouping::Month}) {
            const auto profile = temporal_profile(errors, grouping);
            std::size_t total = 0;
            for (const auto& g : profile) {
                total += g.n;
                expect(g.q1 <= g.median && g.median <= g.q3, "quartile ordering violated");
                expect(g.ci95_lo <= g.mean && g.mean <= g.ci95_hi, "CI does not cover mean");
            }
            expect(total == errors.size(), "partition sums do not add up");
        }
        const auto hours = temporal_profile(errors, TemporalGrouping::Hour);
        for (const auto& g : hours) {
            std::vector<double> values;
            for (const auto& e : errors) {
                if (hour_of_day(e.settlement_time) == g.key) values.push_back(e.abs_error);
            }
            double mean = 0.0;
            for (const double v : values) mean += v;
            mean /= static_cast<double>(values.size());
            double sq = 0.0;
            for (const double v : values) sq += (v - mean) * (v - mean);
            const double s =
                values.size() > 1 ? std::sqrt(sq / static_cast<double>(values.size() - 1)) : 0.0;
            const double half = 1.96 * s / std::sqrt(static_cast<double>(values.size()));
            expect(std::abs(g.ci95_lo - (mean - half)) <= 1e-9 * std::max(1.0, std::abs(mean)),
                   "CI lower bound does not recompute");
            expect(std::abs(g.ci95_hi - (mean + half)) <= 1e-9 * std::max(1.0, std::abs(mean)),
                   "CI upper bound does not recompute");
        }
    }
    return "1000 randomized trials: partitions, quartiles and CI formula hold";
}

std::string criterion_ledger_conservation() {
    expect(!g_ledgers.empty(), "no backtests were tracked");
    for (const auto& [name, ledger] : g_ledgers) {
        const double resummed = ledger.resum();
        const double tol = 1e-9 * std::max(1.0, std::abs(resummed));
        expect(std::abs(resummed - ledger.total_revenue) <= tol,
               name + ": running total " + fmt(ledger.total_revenue) + " vs re-sum " +
                   fmt(resummed));
    }
    return fmt(static_cast<double>(g_ledgers.size())) + " suite backtests conserve cash";
}

std::string criterion_cli_determinism() {
    const auto dir = fixtures::temp_dir("acceptance_cli");
    const auto ds = fixtures::cycle_days(5);
    fixtures::write_dispatch_csv(dir / "dispatch.csv", ds.settlements);
    fixtures::write_predispatch_csv(dir / "predispatch.csv", ds.forecasts);
    expect(run_cli("ingest --dispatch " + (dir / "dispatch.csv").string() + " --predispatch " +
                   (dir / "predispatch.csv").string() + " --cache " +
                   (dir / "cache.bin").string()) == 0,
           "ingest failed");

    for (const char* run : {"a", "b"}) {
        expect(run_cli("backtest --cache " + (dir / "cache.bin").string() +
                       " --strategy milp-raw --out " + (dir / run).string()) == 0,
               "backtest run failed");
    }
    for (const char* name :
         {"result.json", "ledger.csv", "cumulative_revenue.csv", "hourly_histogram.csv"}) {
        expect(slurp(dir / "a" / name) == slurp(dir / "b" / name),
               std::string(name) + " differs between identical runs");
    }

    // train-forecast determinism over a two-year fixture.
    fixtures::YearSpec spec{.start_year = 2023, .days = 200, .seed = 5001};
    spec.horizons = {0.5, 24.0};
    const auto train_ds = fixtures::build_year(spec);
    cache_write(train_ds, dir / "train_cache.bin");
    for (const char* run : {"m1.bin", "m2.bin"}) {
        expect(run_cli("train-forecast --cache " + (dir / "train_cache.bin").string() +
                       " --model-out " + (dir / run).string() +
                       " --train-start 2023-01-01 --train-end 2023-07-18"
                       " --trees 20 --sample-every 20 --seed 9") == 0,
               "train-forecast run failed");
    }
    expect(slurp(dir / "m1.bin") == slurp(dir / "m2.bin"),
           "model files differ between identical seeded runs");
    return "backtest and train-forecast artifacts byte-identical across reruns";
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double time_limit_s;  // 0 = none stated
        std::function<std::string()> body;
    };
    const std::vector<Criterion> criteria = {
        {1, "financial golden test", 1.0, criterion_financial},
        {2, "degradation golden test", 1.0, criterion_degradation},
        {3, "spike capture", 1.0, criterion_spike},
        {4, "optimizer exactness vs DP oracle", 60.0, criterion_optimizer_exactness},
        {5, "look-ahead hygiene", 120.0, criterion_hygiene},
        {6, "strategy ordering on constructed data", 0.0, criterion_strategy_ordering},
        {7, "ML bias correction per hour", 120.0, criterion_bias_correction},
        {8, "accuracy statistics properties", 30.0, criterion_accuracy_properties},
        {9, "ledger conservation", 0.0, criterion_ledger_conservation},
        {10, "seeded CLI determinism", 0.0, criterion_cli_determinism},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        bool ok = true;
        std::string detail;
        try {
            detail = c.body();
        } catch (const std::exception& e) {
            ok = false;
            detail = e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (ok && c.time_limit_s > 0.0 && elapsed > c.time_limit_s) {
            ok = false;
            detail = "exceeded " + fmt(c.time_limit_s) + "s time limit";
        }
        if (!ok) ++failures;
        std::printf("[%s] %2d. %s (%.2fs): %s\n", ok ? "PASS" : "FAIL", c.id, c.name, elapsed,
                    detail.c_str());
        std::fflush(stdout);
    }
    if (failures > 0) {
        std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    } else {
        std::printf("all %zu criteria passed\n", criteria.size());
    }
    return failures;
}
