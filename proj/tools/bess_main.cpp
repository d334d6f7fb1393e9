// Command-line entry point: ingest, accuracy, backtest, sweep,
// train-forecast, finance. All outputs are deterministic for a given input
// and seed, so reruns are byte-identical.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bess/accuracy.hpp"
#include "bess/backtest.hpp"
#include "bess/battery.hpp"
#include "bess/csvio.hpp"
#include "bess/finance.hpp"
#include "bess/forecast_weighting.hpp"
#include "bess/forest.hpp"
#include "bess/market_data.hpp"
#include "bess/optimizer.hpp"
#include "bess/strategy_baseline.hpp"
#include "bess/sweeps.hpp"

namespace fs = std::filesystem;
using namespace bess;

namespace {

Region region_or_throw(const std::string& name) {
    const auto r = parse_region(name);
    if (!r) throw CLI::ValidationError("--region", "unknown region '" + name + "'");
    return *r;
}

Timestamp range_start(const std::string& date) {
    const auto d = parse_date(date);
    if (!d) throw CLI::ValidationError("date", "expected YYYY-MM-DD, got '" + date + "'");
    return start_of(*d);
}

Timestamp range_end(const std::string& date) {
    const auto d = parse_date(date);
    if (!d) throw CLI::ValidationError("date", "expected YYYY-MM-DD, got '" + date + "'");
    return Timestamp{start_of(Date{d->days + 1}).mins - kPeriodMinutes};
}

void report_gaps(const AlignedDataset& ds) {
    if (ds.settlements.size() < 2) return;
    std::size_t missing = 0;
    for (std::size_t i = 1; i < ds.settlements.size(); ++i) {
        const auto delta =
            ds.settlements[i].settlement_time.mins - ds.settlements[i - 1].settlement_time.mins;
        missing += static_cast<std::size_t>(delta / kPeriodMinutes - 1);
    }
    std::printf("settlement gaps: %zu missing half-hours\n", missing);
}

void write_backtest_artifacts(const fs::path& out, const BacktestResult& result) {
    fs::create_directories(out);
    write_result_json(out / "result.json", result);
    export_ledger_csv(out / "ledger.csv", result.ledger);
    write_cumulative_csv(out / "cumulative_revenue.csv", result);
    write_histogram_csv(out / "hourly_histogram.csv", result.histogram);
    std::printf("strategy %s: total revenue %.2f, actions %llu, actions/day %.3f\n",
                result.strategy.c_str(), result.total_revenue(),
                static_cast<unsigned long long>(result.actions_total),
                result.actions_per_day_mean);
    if (result.strategy != "baseline") {
        std::printf("rejected bids %llu, overrides %llu, unplannable periods %llu, "
                    "hygiene violations %llu\n",
                    static_cast<unsigned long long>(result.rejected_bids),
                    static_cast<unsigned long long>(result.overrides_executed),
                    static_cast<unsigned long long>(result.unplannable_periods),
                    static_cast<unsigned long long>(result.hygiene_violations));
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Battery storage arbitrage backtesting toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "Plain key=value config file; command-line flags win");

    int jobs = 0;
    std::uint64_t seed = 42;
    app.add_option("--jobs", jobs, "Worker cap for parallel stages (0 = all cores)");
    app.add_option("--seed", seed, "Seed for all randomized stages");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Parse, clean, align and cache market data");
    std::string dispatch_path, predispatch_path, region_name_arg = "NSW1", cache_path;
    ingest->add_option("--dispatch", dispatch_path, "Dispatch price CSV")->required();
    ingest->add_option("--predispatch", predispatch_path, "Pre-dispatch forecast CSV")
        ->required();
    ingest->add_option("--region", region_name_arg, "Region code (NSW1..TAS1)");
    ingest->add_option("--cache", cache_path, "Output cache file")->required();

    // accuracy
    auto* accuracy_cmd = app.add_subcommand("accuracy", "Forecast error and volatility exports");
    std::string acc_cache, acc_out;
    accuracy_cmd->add_option("--cache", acc_cache, "Cache file")->required();
    accuracy_cmd->add_option("--out", acc_out, "Output directory")->required();

    // backtest
    auto* backtest_cmd = app.add_subcommand("backtest", "Run one strategy over the cached data");
    std::string bt_cache, bt_out, bt_strategy = "baseline", bt_model;
    BatteryConfig battery;
    BaselineParams baseline;
    OptimizerParams optimizer;
    backtest_cmd->add_option("--cache", bt_cache, "Cache file")->required();
    backtest_cmd->add_option("--out", bt_out, "Output directory")->required();
    backtest_cmd->add_option("--strategy", bt_strategy, "baseline | milp-raw | milp-ml");
    backtest_cmd->add_option("--model", bt_model, "Trained model file (milp-ml only)");
    backtest_cmd->add_option("--capacity", battery.capacity_init, "Battery capacity MWh");
    backtest_cmd->add_option("--power", battery.power_max, "Battery power MW");
    backtest_cmd->add_option("--degradation", battery.degradation_rate,
                             "Capacity fraction lost per action");
    backtest_cmd->add_option("--charge-bid", baseline.charge_bid, "Baseline charge bid $/MWh");
    backtest_cmd->add_option("--discharge-offer", baseline.discharge_offer,
                             "Baseline discharge offer $/MWh");
    backtest_cmd->add_option("--daily-actions", baseline.daily_action_max,
                             "Daily action cap (baseline)");
    backtest_cmd->add_option("--theta-charge", optimizer.theta_charge, "MILP charge threshold");
    backtest_cmd->add_option("--theta-discharge", optimizer.theta_discharge,
                             "MILP discharge threshold");
    backtest_cmd->add_option("--lookahead", optimizer.lookahead_hours, "Lookahead hours");
    backtest_cmd->add_option("--milp-daily-actions", optimizer.daily_action_max,
                             "Daily action cap (MILP)");
    backtest_cmd->add_option("--override-revenue", optimizer.override_revenue,
                             "Expected revenue unlocking actions past the cap");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Threshold and action-cap studies");
    std::string sw_cache, sw_out;
    double buy_min = -50.0, buy_max = 50.0, buy_step = 10.0;
    double sell_min = 50.0, sell_max = 150.0, sell_step = 10.0;
    int actions_min = 1, actions_max = 10, heatmap_actions = 3;
    std::vector<std::string> extended_raw;
    sweep_cmd->add_option("--cache", sw_cache, "Cache file")->required();
    sweep_cmd->add_option("--out", sw_out, "Output directory")->required();
    sweep_cmd->add_option("--buy-min", buy_min);
    sweep_cmd->add_option("--buy-max", buy_max);
    sweep_cmd->add_option("--buy-step", buy_step);
    sweep_cmd->add_option("--sell-min", sell_min);
    sweep_cmd->add_option("--sell-max", sell_max);
    sweep_cmd->add_option("--sell-step", sell_step);
    sweep_cmd->add_option("--actions-min", actions_min);
    sweep_cmd->add_option("--actions-max", actions_max);
    sweep_cmd->add_option("--heatmap-actions", heatmap_actions,
                          "Fixed daily cap for the threshold heatmap");
    sweep_cmd->add_option("--extended", extended_raw,
                          "Extra (buy:sell) points, e.g. 1500:1500");

    // train-forecast
    auto* train_cmd = app.add_subcommand("train-forecast",
                                         "Train the forecast-correction model");
    std::string tr_cache, tr_model_out, tr_out;
    std::string train_start_s, train_end_s, test_start_s, test_end_s;
    ForestHyperparams hyper;
    std::size_t sample_every = 1;
    bool grid_search = false;
    train_cmd->add_option("--cache", tr_cache, "Cache file")->required();
    train_cmd->add_option("--model-out", tr_model_out, "Output model file")->required();
    train_cmd->add_option("--train-start", train_start_s, "YYYY-MM-DD")->required();
    train_cmd->add_option("--train-end", train_end_s, "YYYY-MM-DD")->required();
    train_cmd->add_option("--test-start", test_start_s, "YYYY-MM-DD (enables the report)");
    train_cmd->add_option("--test-end", test_end_s, "YYYY-MM-DD");
    train_cmd->add_option("--out", tr_out, "Report directory (with --test-start/--test-end)");
    train_cmd->add_option("--trees", hyper.n_trees);
    train_cmd->add_option("--max-depth", hyper.max_depth);
    train_cmd->add_option("--min-split", hyper.min_split);
    train_cmd->add_option("--min-leaf", hyper.min_leaf);
    train_cmd->add_option("--sample-every", sample_every, "Deterministically thin training rows to about 1 in N");
    train_cmd->add_flag("--grid-sweep", grid_search,
                        "Re-train across a small hyperparameter grid and report RMSE");

    // finance
    auto* finance_cmd = app.add_subcommand("finance", "Discounted cash flow report");
    std::string fin_out;
    CashModel cash;
    std::vector<double> cashflows, revenues;
    std::vector<std::string> labels;
    finance_cmd->add_option("--out", fin_out, "Output directory")->required();
    finance_cmd->add_option("--cashflow", cashflows, "Annual cash flow(s), post-opex");
    finance_cmd->add_option("--revenue", revenues, "Annual revenue(s), pre-opex");
    finance_cmd->add_option("--label", labels, "Labels matching the given values");
    finance_cmd->add_option("--capex", cash.capex);
    finance_cmd->add_option("--opex", cash.opex_annual);
    finance_cmd->add_option("--rate", cash.discount_rate);
    finance_cmd->add_option("--years", cash.lifetime_years);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) {
            const Region region = region_or_throw(region_name_arg);
            auto settlements = resample_to_30min(parse_dispatch(dispatch_path, region));
            PredispatchStats stats;
            auto forecasts = parse_predispatch(predispatch_path, region, &stats);
            const auto ds = align(std::move(settlements), std::move(forecasts), region);
            cache_write(ds, cache_path);
            std::printf("region %s: %zu settlements, %zu forecasts (%zu unmatched)\n",
                        std::string(region_name(region)).c_str(), ds.settlements.size(),
                        ds.forecasts.size(), ds.unmatched_forecasts);
            std::printf("forecast rows: %zu kept, %zu short-horizon discarded, "
                        "%zu inverted rejected\n",
                        stats.rows_kept, stats.rows_discarded_short_horizon,
                        stats.rows_rejected_inverted);
            report_gaps(ds);
        } else if (*accuracy_cmd) {
            const auto ds = cache_read(acc_cache);
            fs::create_directories(acc_out);
            const auto errors = compute_errors(ds);
            write_group_stats_csv(fs::path(acc_out) / "horizon_profile.csv",
                                  horizon_profile(errors, ds.region), true);
            write_group_stats_csv(fs::path(acc_out) / "temporal_profile_hour.csv",
                                  temporal_profile(errors, TemporalGrouping::Hour), false);
            write_group_stats_csv(fs::path(acc_out) / "temporal_profile_weekday.csv",
                                  temporal_profile(errors, TemporalGrouping::Weekday), false);
            write_group_stats_csv(fs::path(acc_out) / "temporal_profile_month.csv",
                                  temporal_profile(errors, TemporalGrouping::Month), false);
            const auto vol = volatility(ds.settlements, ds.region);
            write_volatility_csv(fs::path(acc_out) / "volatility.csv", vol);
            std::printf("%zu error records; mean within-day volatility %.3f $/MWh "
                        "(%zu partial days skipped)\n",
                        errors.size(), vol.overall_mean, vol.partial_days_skipped);
        } else if (*backtest_cmd) {
            const auto ds = cache_read(bt_cache);
            BacktestResult result;
            if (bt_strategy == "baseline") {
                result = run_baseline_backtest(ds, battery, baseline);
            } else if (bt_strategy == "milp-raw") {
                result = run_milp_backtest(ds, battery, optimizer, ForecastSource::raw());
            } else if (bt_strategy == "milp-ml") {
                if (bt_model.empty()) {
                    throw DataError("milp-ml requires --model");
                }
                const auto model = EnsembleModel::load(bt_model);
                result = run_milp_backtest(ds, battery, optimizer,
                                           enhanced_source(model, ds, jobs));
            } else {
                throw CLI::ValidationError("--strategy",
                                           "unknown strategy '" + bt_strategy + "'");
            }
            write_backtest_artifacts(bt_out, result);
        } else if (*sweep_cmd) {
            const auto ds = cache_read(sw_cache);
            SweepGrid grid;
            grid.buy_range = SweepGrid::steps(buy_min, buy_max, buy_step);
            grid.sell_range = SweepGrid::steps(sell_min, sell_max, sell_step);
            for (int c = actions_min; c <= actions_max; ++c) grid.actions_range.push_back(c);
            for (const auto& raw : extended_raw) {
                const auto colon = raw.find(':');
                double buy, sell;
                if (colon == std::string::npos || !parse_double(raw.substr(0, colon), buy) ||
                    !parse_double(raw.substr(colon + 1), sell)) {
                    throw CLI::ValidationError("--extended", "expected buy:sell, got '" + raw +
                                                                 "'");
                }
                grid.extended_points.emplace_back(buy, sell);
            }
            fs::create_directories(sw_out);
            const auto heat = threshold_sweep(ds, battery, grid, heatmap_actions, jobs);
            export_heatmap_csv(fs::path(sw_out) / "heatmap.csv", heat);
            const auto* best = argmax_cell(heat);
            if (best) {
                std::printf("best heatmap cell: buy %.1f sell %.1f revenue %.2f\n", best->buy,
                            best->sell, best->total_revenue);
            }
            BaselineParams curve_params;
            const auto curve =
                max_actions_sweep(ds, battery, curve_params, grid.actions_range, jobs);
            export_actions_curve_csv(fs::path(sw_out) / "actions_curve.csv", curve);
            if (const auto plateau = plateau_cap(curve)) {
                std::printf("actions curve plateaus at cap %d\n", *plateau);
            }
            const auto cells = grid_sweep(ds, battery, grid, jobs);
            parallel_coords_export(fs::path(sw_out) / "parallel_coords.csv", cells);
            std::printf("sweep wrote %zu heatmap cells, %zu curve points, %zu grid rows\n",
                        heat.size(), curve.size(), cells.size());
        } else if (*train_cmd) {
            const auto ds = cache_read(tr_cache);
            const Timestamp t0 = range_start(train_start_s);
            const Timestamp t1 = range_end(train_end_s);
            if (t1 < t0) throw DataError("train range is empty");
            const bool want_report = !test_start_s.empty() || !test_end_s.empty();
            Timestamp s0{}, s1{};
            if (want_report) {
                if (test_start_s.empty() || test_end_s.empty()) {
                    throw DataError("--test-start and --test-end must be given together");
                }
                s0 = range_start(test_start_s);
                s1 = range_end(test_end_s);
                if (t0 <= s1 && s0 <= t1) {
                    throw DataError("training range overlaps test range");
                }
            }
            const auto rows = make_training_rows(ds, t0, t1, sample_every);
            if (grid_search) {
                for (const int trees : {50, 100}) {
                    for (const int depth : {5, 10}) {
                        ForestHyperparams hp = hyper;
                        hp.n_trees = trees;
                        hp.max_depth = depth;
                        const auto candidate = train(rows, hp, seed, jobs);
                        std::printf("grid: trees %d depth %d -> train RMSE %.4f\n", trees,
                                    depth, candidate.training_rmse());
                    }
                }
            }
            const auto model = train(rows, hyper, seed, jobs);
            model.save(tr_model_out);
            std::printf("trained %d trees on %zu rows, train RMSE %.4f\n", hyper.n_trees,
                        rows.size(), model.training_rmse());
            if (want_report) {
                AlignedDataset test_ds = ds;
                std::erase_if(test_ds.settlements, [&](const SettlementRecord& r) {
                    return r.settlement_time < s0 || r.settlement_time > s1;
                });
                std::erase_if(test_ds.forecasts, [&](const ForecastRecord& r) {
                    return r.settlement_time < s0 || r.settlement_time > s1;
                });
                if (test_ds.settlements.empty()) throw DataError("test range has no data");
                const auto errors = accuracy_report(model, test_ds);
                const fs::path out = tr_out.empty() ? fs::path(".") : fs::path(tr_out);
                fs::create_directories(out);
                write_group_stats_csv(out / "horizon_profile.csv",
                                      horizon_profile(errors, ds.region), true);
                write_group_stats_csv(out / "temporal_profile_hour.csv",
                                      temporal_profile(errors, TemporalGrouping::Hour), false);
                write_group_stats_csv(out / "temporal_profile_weekday.csv",
                                      temporal_profile(errors, TemporalGrouping::Weekday),
                                      false);
                write_group_stats_csv(out / "temporal_profile_month.csv",
                                      temporal_profile(errors, TemporalGrouping::Month), false);
                std::printf("test-range report written to %s (%zu error records)\n",
                            out.string().c_str(), errors.size());
            }
        } else if (*finance_cmd) {
            std::vector<FinanceReport> rows;
            std::size_t label_idx = 0;
            const auto next_label = [&](const std::string& fallback) {
                if (label_idx < labels.size()) return labels[label_idx++];
                ++label_idx;
                return fallback;
            };
            for (const double cf : cashflows) {
                rows.push_back(
                    finance_report(cash, cf + cash.opex_annual,
                                   next_label("cashflow-" + fmt_double(cf))));
            }
            for (const double rev : revenues) {
                rows.push_back(finance_report(cash, rev, next_label("revenue-" + fmt_double(rev))));
            }
            if (rows.empty()) throw DataError("finance needs --cashflow or --revenue values");
            fs::create_directories(fin_out);
            write_finance_csv(fs::path(fin_out) / "finance.csv", rows, cash);
            write_finance_json(fs::path(fin_out) / "finance.json", rows, cash);
            for (const auto& r : rows) {
                std::printf("%s: cashflow %.0f payback %s npv %.0f irr %s\n", r.label.c_str(),
                            r.annual_cashflow,
                            r.payback_years ? fmt_double(*r.payback_years).c_str() : "n/a",
                            r.npv, r.irr ? fmt_double(*r.irr).c_str() : "n/a");
            }
        }
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
