#pragma once

// Storage asset simulation: state of charge, power limits, per-action
// degradation, daily action accounting, and bid-acceptance execution.

#include <filesystem>
#include <limits>
#include <vector>

#include "bess/market_data.hpp"
#include "bess/timeutil.hpp"

namespace bess {

struct BatteryConfig {
    double capacity_init = 20.0;        // MWh
    double power_max = 10.0;            // MW
    double degradation_rate = 0.00005;  // capacity fraction lost per executed action
    double period_hours = 0.5;
    int daily_action_max = 6;
    double capex = 8'000'000.0;

    void validate() const;  // throws std::invalid_argument
    double max_energy_per_action() const { return power_max * period_hours; }
};

enum class TradeAction { Charge, Discharge };

struct LedgerEntry {
    Timestamp settlement_time;
    TradeAction action;
    double energy_mwh;
    double price;
    double cash_delta;  // -energy*price for charges, +energy*price for discharges
    double soc_after;
    double capacity_after;
};

struct TradeLedger {
    std::vector<LedgerEntry> entries;
    double total_revenue = 0.0;  // running sum of cash_delta, in entry order

    void append(const LedgerEntry& e) {
        entries.push_back(e);
        total_revenue += e.cash_delta;
    }
    double resum() const {
        double s = 0.0;
        for (const auto& e : entries) s += e.cash_delta;
        return s;
    }
};

struct BatteryState {
    double capacity_max = 0.0;  // shrinks by one degradation step per executed action
    double soc = 0.0;
    int actions_today = 0;
    Date current_date{0};
    double degradation_clamp_loss = 0.0;  // energy clamped away when capacity shrinks below soc
};

BatteryState new_state(const BatteryConfig& config);

// Charges at full power (or to the headroom / energy_cap, whichever binds)
// iff market_price <= bid_price and soc < capacity_max. Returns whether the
// action executed. An executed action appends to the ledger, shrinks
// capacity_max by one degradation step and increments actions_today.
bool execute_charge(BatteryState& state, const BatteryConfig& config, Timestamp t,
                    double market_price, double bid_price, TradeLedger& ledger,
                    double energy_cap = std::numeric_limits<double>::infinity());

// Mirror of execute_charge: discharges iff market_price >= offer_price and soc > 0.
bool execute_discharge(BatteryState& state, const BatteryConfig& config, Timestamp t,
                       double market_price, double offer_price, TradeLedger& ledger,
                       double energy_cap = std::numeric_limits<double>::infinity());

// Resets the daily action counter when the calendar date advances.
void roll_date(BatteryState& state, Date new_date);

void export_ledger_csv(const std::filesystem::path& path, const TradeLedger& ledger);

}  // namespace bess
