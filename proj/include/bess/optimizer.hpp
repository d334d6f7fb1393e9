#pragma once

// Rolling-horizon dispatch optimization: pick charge/discharge/hold per
// future period to maximize forecast profit subject to SOC, power, price
// threshold, exclusivity and daily-action constraints; execute only the
// first step each period.

#include <filesystem>
#include <map>
#include <vector>

#include "bess/backtest.hpp"
#include "bess/battery.hpp"
#include "bess/forecast_weighting.hpp"
#include "bess/market_data.hpp"

namespace bess {

struct OptimizerParams {
    double theta_charge = 50.0;     // charge permitted only when forecast <= this
    double theta_discharge = 150.0; // discharge permitted only when forecast >= this
    double lookahead_hours = 24.0;
    int daily_action_max = 6;
    double override_revenue = 1000.0;  // expected revenue that unlocks actions past the cap

    void validate() const;
};

enum class Decision { Hold, Charge, Discharge };

struct PlanStep {
    Timestamp settlement_time;
    Decision decision = Decision::Hold;
    double charge_energy = 0.0;     // MWh
    double discharge_energy = 0.0;  // MWh
    double expected_price = 0.0;
};

struct DispatchPlan {
    std::vector<PlanStep> steps;
    double objective_value = 0.0;
};

struct HorizonInstance {
    std::vector<WeightedForecast> prices;  // strictly increasing settlement times
    double soc0 = 0.0;
    double capacity_max = 20.0;
    double power_max = 10.0;
    double period_hours = 0.5;
    // Remaining allowance per calendar day; days not present default to the
    // params' daily_action_max.
    std::map<Date, int> remaining_allowance;

    double max_energy() const { return power_max * period_hours; }
    int allowance_for(Date d, const OptimizerParams& params) const {
        const auto it = remaining_allowance.find(d);
        return it == remaining_allowance.end() ? params.daily_action_max : it->second;
    }
};

// Exact optimum of the horizon problem. The plan it returns always satisfies
// validate_plan.
DispatchPlan solve_horizon(const HorizonInstance& instance, const OptimizerParams& params);

// Independent verification oracle: exact optimum over the action space
// restricted to SOC moves in multiples of soc_grid. Instances are limited to
// 20 periods.
double oracle_dp(const HorizonInstance& instance, const OptimizerParams& params, double soc_grid);

// Re-validates a plan independently of the solver: SOC trajectory bounds,
// exclusivity, power limits, thresholds and daily allowances. Throws
// DataError on any violation.
void validate_plan(const HorizonInstance& instance, const OptimizerParams& params,
                   const DispatchPlan& plan);

BacktestResult run_milp_backtest(const AlignedDataset& dataset, const BatteryConfig& config,
                                 const OptimizerParams& params, const ForecastSource& source);

void export_plan_csv(const std::filesystem::path& path, const DispatchPlan& plan);

}  // namespace bess
