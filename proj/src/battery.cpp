#include "bess/battery.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "bess/csvio.hpp"

namespace bess {

void BatteryConfig::validate() const {
    if (!(capacity_init > 0.0)) throw std::invalid_argument("capacity_init must be positive");
    if (!(power_max > 0.0)) throw std::invalid_argument("power_max must be positive");
    if (!(degradation_rate > 0.0) || degradation_rate >= 1.0) {
        throw std::invalid_argument("degradation_rate must be in (0, 1)");
    }
    if (period_hours != 0.5) throw std::invalid_argument("period_hours must be 0.5");
    if (daily_action_max <= 0) throw std::invalid_argument("daily_action_max must be positive");
    if (!(capex > 0.0)) throw std::invalid_argument("capex must be positive");
}

BatteryState new_state(const BatteryConfig& config) {
    config.validate();
    BatteryState s;
    s.capacity_max = config.capacity_init;
    s.soc = 0.5 * config.capacity_init;
    s.actions_today = 0;
    return s;
}

namespace {

// Degradation shrinks capacity only; stored energy is clamped if the new
// capacity falls below it, with the clamped energy tracked separately.
void degrade(BatteryState& state, const BatteryConfig& config) {
    state.capacity_max *= (1.0 - config.degradation_rate);
    if (state.soc > state.capacity_max) {
        state.degradation_clamp_loss += state.soc - state.capacity_max;
        state.soc = state.capacity_max;
    }
    ++state.actions_today;
}

}  // namespace

bool execute_charge(BatteryState& state, const BatteryConfig& config, Timestamp t,
                    double market_price, double bid_price, TradeLedger& ledger,
                    double energy_cap) {
    if (market_price > bid_price || state.soc >= state.capacity_max) return false;
    const double energy = std::min({config.max_energy_per_action(),
                                    state.capacity_max - state.soc, energy_cap});
    if (!(energy > 0.0)) return false;
    state.soc += energy;
    degrade(state, config);
    ledger.append({t, TradeAction::Charge, energy, market_price, -energy * market_price,
                   state.soc, state.capacity_max});
    return true;
}

bool execute_discharge(BatteryState& state, const BatteryConfig& config, Timestamp t,
                       double market_price, double offer_price, TradeLedger& ledger,
                       double energy_cap) {
    if (market_price < offer_price || state.soc <= 0.0) return false;
    const double energy = std::min({config.max_energy_per_action(), state.soc, energy_cap});
    if (!(energy > 0.0)) return false;
    state.soc -= energy;
    degrade(state, config);
    ledger.append({t, TradeAction::Discharge, energy, market_price, energy * market_price,
                   state.soc, state.capacity_max});
    return true;
}

void roll_date(BatteryState& state, Date new_date) {
    if (new_date != state.current_date) {
        state.actions_today = 0;
        state.current_date = new_date;
    }
}

void export_ledger_csv(const std::filesystem::path& path, const TradeLedger& ledger) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << "settlement_time,action,energy_mwh,price,cash_delta,soc_after,capacity_after\n";
    for (const auto& e : ledger.entries) {
        out << format_timestamp(e.settlement_time) << ','
            << (e.action == TradeAction::Charge ? "charge" : "discharge") << ','
            << fmt_double(e.energy_mwh) << ',' << fmt_double(e.price) << ','
            << fmt_double(e.cash_delta) << ',' << fmt_double(e.soc_after) << ','
            << fmt_double(e.capacity_after) << '\n';
    }
}

}  // namespace bess
