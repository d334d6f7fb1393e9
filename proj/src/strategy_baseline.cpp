#include "bess/strategy_baseline.hpp"

namespace bess {

Bid decide_bid(const BatteryState& state, const BaselineParams& params) {
    if (state.soc < 0.5 * state.capacity_max) return {TradeAction::Charge, params.charge_bid};
    return {TradeAction::Discharge, params.discharge_offer};
}

BacktestResult run_baseline_backtest(const AlignedDataset& dataset, const BatteryConfig& config,
                                     const BaselineParams& params) {
    BacktestResult result;
    result.strategy = "baseline";
    BatteryState state = new_state(config);
    result.cumulative_revenue.reserve(dataset.settlements.size());

    for (const auto& s : dataset.settlements) {
        roll_date(state, date_of(s.settlement_time));
        if (state.actions_today >= params.daily_action_max) {
            result.cumulative_revenue.emplace_back(s.settlement_time,
                                                   result.ledger.total_revenue);
            continue;
        }
        const Bid bid = decide_bid(state, params);
        bool executed = false;
        if (bid.action == TradeAction::Charge) {
            executed = execute_charge(state, config, s.settlement_time, s.actual_price,
                                      bid.price, result.ledger);
        } else {
            executed = execute_discharge(state, config, s.settlement_time, s.actual_price,
                                         bid.price, result.ledger);
        }
        if (executed) result.histogram.record(bid.action, s.settlement_time);
        result.cumulative_revenue.emplace_back(s.settlement_time, result.ledger.total_revenue);
    }

    result.actions_total = result.ledger.entries.size();
    const std::size_t days = dataset.distinct_days();
    result.actions_per_day_mean =
        days > 0 ? static_cast<double>(result.actions_total) / static_cast<double>(days) : 0.0;
    return result;
}

}  // namespace bess
