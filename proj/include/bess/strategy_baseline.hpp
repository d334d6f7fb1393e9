#pragma once

// Forecast-unaware threshold strategy: the bid direction depends only on the
// state of charge relative to half of the current (degraded) capacity.

#include "bess/backtest.hpp"
#include "bess/battery.hpp"
#include "bess/market_data.hpp"

namespace bess {

struct BaselineParams {
    double charge_bid = 50.0;       // $/MWh
    double discharge_offer = 150.0; // $/MWh
    int daily_action_max = 3;
};

struct Bid {
    TradeAction action;
    double price;
};

// Charge bid iff soc < 0.5 * capacity_max (current, degraded); otherwise a
// discharge offer.
Bid decide_bid(const BatteryState& state, const BaselineParams& params);

BacktestResult run_baseline_backtest(const AlignedDataset& dataset, const BatteryConfig& config,
                                     const BaselineParams& params);

}  // namespace bess
