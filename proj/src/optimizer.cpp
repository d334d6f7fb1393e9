#include "bess/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "bess/csvio.hpp"

namespace bess {

namespace {

constexpr double kGridEps = 1e-9;

void validate_instance(const HorizonInstance& instance) {
    if (!(instance.capacity_max > 0.0)) throw std::invalid_argument("capacity_max must be positive");
    if (!(instance.power_max > 0.0)) throw std::invalid_argument("power_max must be positive");
    if (!(instance.period_hours > 0.0)) throw std::invalid_argument("period_hours must be positive");
    if (instance.soc0 < -kGridEps || instance.soc0 > instance.capacity_max + kGridEps) {
        throw std::invalid_argument("soc0 outside [0, capacity_max]");
    }
    for (std::size_t i = 1; i < instance.prices.size(); ++i) {
        if (instance.prices[i].settlement_time <= instance.prices[i - 1].settlement_time) {
            throw std::invalid_argument("horizon prices must be strictly increasing in time");
        }
    }
    for (const auto& [date, remaining] : instance.remaining_allowance) {
        if (remaining < 0) throw std::invalid_argument("negative remaining allowance");
    }
}

// SOC values an optimal plan can visit: full-power multiples anchored at the
// initial SOC (clipped) or at either capacity bound. Every vertex of the
// fixed-decision LP lies on this grid, so a DP over it is exact.
std::vector<double> build_soc_grid(double soc0, double capacity, double step) {
    std::vector<double> g;
    const int k_max = static_cast<int>(std::ceil(capacity / step)) + 1;
    for (int k = -k_max; k <= k_max; ++k) {
        g.push_back(std::clamp(soc0 + k * step, 0.0, capacity));
    }
    for (int k = 0; k <= k_max; ++k) {
        const double up = k * step;
        if (up <= capacity + kGridEps) g.push_back(std::min(up, capacity));
        const double down = capacity - k * step;
        if (down >= -kGridEps) g.push_back(std::max(down, 0.0));
    }
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end(),
                        [](double a, double b) { return std::abs(a - b) < kGridEps; }),
            g.end());
    return g;
}

struct DpValue {
    double profit = 0.0;
    int actions = 0;
    int first_discharge = std::numeric_limits<int>::max();
};

// Lexicographic preference: max profit, then fewest actions, then earliest
// discharge.
bool better(const DpValue& a, const DpValue& b) {
    if (a.profit != b.profit) return a.profit > b.profit;
    if (a.actions != b.actions) return a.actions < b.actions;
    return a.first_discharge < b.first_discharge;
}

struct DpChoice {
    Decision decision = Decision::Hold;
    std::int32_t target = -1;  // grid index after the action
};

}  // namespace

void OptimizerParams::validate() const {
    const double periods = lookahead_hours * 2.0;
    if (std::abs(periods - std::round(periods)) > 1e-9 || lookahead_hours <= 0.0) {
        throw std::invalid_argument("lookahead_hours must be a positive multiple of 0.5");
    }
    if (override_revenue < 0.0) throw std::invalid_argument("override_revenue must be >= 0");
    if (daily_action_max <= 0) throw std::invalid_argument("daily_action_max must be positive");
}

DispatchPlan solve_horizon(const HorizonInstance& instance, const OptimizerParams& params) {
    params.validate();
    validate_instance(instance);

    const double e_max = instance.max_energy();
    const std::size_t n = instance.prices.size();

    // Threshold indicators are plain constants per period.
    std::vector<int> actionable;  // indices of periods where any action is permitted
    std::vector<bool> can_charge(n), can_discharge(n);
    for (std::size_t i = 0; i < n; ++i) {
        can_charge[i] = instance.prices[i].price <= params.theta_charge;
        can_discharge[i] = instance.prices[i].price >= params.theta_discharge;
        if (can_charge[i] || can_discharge[i]) actionable.push_back(static_cast<int>(i));
    }

    DispatchPlan plan;
    plan.steps.reserve(n);
    for (const auto& p : instance.prices) {
        plan.steps.push_back({p.settlement_time, Decision::Hold, 0.0, 0.0, p.price});
    }
    if (actionable.empty()) return plan;

    const auto grid = build_soc_grid(instance.soc0, instance.capacity_max, e_max);
    const auto n_grid = static_cast<int>(grid.size());
    const int start = static_cast<int>(
        std::min_element(grid.begin(), grid.end(),
                         [&](double a, double b) {
                             return std::abs(a - instance.soc0) < std::abs(b - instance.soc0);
                         }) -
        grid.begin());

    const auto n_act = static_cast<int>(actionable.size());
    std::vector<int> allowance(actionable.size());
    std::vector<bool> day_rolls(actionable.size());  // date change before the NEXT actionable step
    int max_allow = 0;
    for (int j = 0; j < n_act; ++j) {
        const Date d = date_of(instance.prices[static_cast<std::size_t>(actionable[j])]
                                   .settlement_time);
        allowance[static_cast<std::size_t>(j)] = instance.allowance_for(d, params);
        max_allow = std::max(max_allow, allowance[static_cast<std::size_t>(j)]);
        if (j + 1 < n_act) {
            const Date next = date_of(
                instance.prices[static_cast<std::size_t>(actionable[j + 1])].settlement_time);
            day_rolls[static_cast<std::size_t>(j)] = next != d;
        }
    }

    const int n_used = max_allow + 1;
    const auto idx = [&](int g, int u) { return g * n_used + u; };
    std::vector<DpValue> next_v(static_cast<std::size_t>(n_grid * n_used));
    std::vector<DpValue> cur_v(next_v.size());
    std::vector<DpChoice> choices(static_cast<std::size_t>(n_act) * next_v.size());

    for (int j = n_act - 1; j >= 0; --j) {
        const auto period = static_cast<std::size_t>(actionable[j]);
        const double price = instance.prices[period].price;
        const bool rolls = day_rolls[static_cast<std::size_t>(j)];
        DpChoice* choice_row = choices.data() + static_cast<std::size_t>(j) * next_v.size();

        for (int g = 0; g < n_grid; ++g) {
            for (int u = 0; u < n_used; ++u) {
                const auto after = [&](int g2, int u2) -> const DpValue& {
                    return next_v[static_cast<std::size_t>(idx(g2, rolls ? 0 : u2))];
                };
                DpValue best = after(g, u);
                DpChoice best_choice{Decision::Hold, -1};

                if (u < allowance[static_cast<std::size_t>(j)]) {
                    if (can_discharge[period]) {
                        for (int g2 = g - 1; g2 >= 0; --g2) {
                            const double energy = grid[static_cast<std::size_t>(g)] -
                                                  grid[static_cast<std::size_t>(g2)];
                            if (energy > e_max + kGridEps) break;
                            const DpValue& rest = after(g2, u + 1);
                            DpValue cand{price * energy + rest.profit, rest.actions + 1, j};
                            if (better(cand, best)) {
                                best = cand;
                                best_choice = {Decision::Discharge, g2};
                            }
                        }
                    }
                    if (can_charge[period]) {
                        for (int g2 = g + 1; g2 < n_grid; ++g2) {
                            const double energy = grid[static_cast<std::size_t>(g2)] -
                                                  grid[static_cast<std::size_t>(g)];
                            if (energy > e_max + kGridEps) break;
                            const DpValue& rest = after(g2, u + 1);
                            DpValue cand{-price * energy + rest.profit, rest.actions + 1,
                                         rest.first_discharge};
                            if (better(cand, best)) {
                                best = cand;
                                best_choice = {Decision::Charge, g2};
                            }
                        }
                    }
                }
                cur_v[static_cast<std::size_t>(idx(g, u))] = best;
                choice_row[idx(g, u)] = best_choice;
            }
        }
        std::swap(cur_v, next_v);
    }

    plan.objective_value = next_v[static_cast<std::size_t>(idx(start, 0))].profit;

    // Walk the stored choices forward to materialize energies per period.
    int g = start;
    int u = 0;
    for (int j = 0; j < n_act; ++j) {
        const DpChoice c =
            choices[static_cast<std::size_t>(j) * static_cast<std::size_t>(n_grid * n_used) +
                    static_cast<std::size_t>(idx(g, u))];
        auto& step = plan.steps[static_cast<std::size_t>(actionable[j])];
        if (c.decision == Decision::Charge) {
            step.decision = Decision::Charge;
            step.charge_energy =
                grid[static_cast<std::size_t>(c.target)] - grid[static_cast<std::size_t>(g)];
            g = c.target;
            ++u;
        } else if (c.decision == Decision::Discharge) {
            step.decision = Decision::Discharge;
            step.discharge_energy =
                grid[static_cast<std::size_t>(g)] - grid[static_cast<std::size_t>(c.target)];
            g = c.target;
            ++u;
        }
        if (day_rolls[static_cast<std::size_t>(j)]) u = 0;
    }

    return plan;
}

double oracle_dp(const HorizonInstance& instance, const OptimizerParams& params,
                 double soc_grid) {
    params.validate();
    validate_instance(instance);
    if (instance.prices.size() > 20) {
        throw std::invalid_argument("oracle_dp is limited to 20 periods");
    }
    if (!(soc_grid > 0.0) || soc_grid > instance.capacity_max) {
        throw std::invalid_argument("soc_grid must be in (0, capacity_max]");
    }

    const double e_max = instance.max_energy();
    const auto n = instance.prices.size();
    // States are soc0 + m * soc_grid within [0, capacity].
    const int m_lo = -static_cast<int>(std::floor((instance.soc0 + kGridEps) / soc_grid));
    const int m_hi = static_cast<int>(
        std::floor((instance.capacity_max - instance.soc0 + kGridEps) / soc_grid));
    const int n_states = m_hi - m_lo + 1;
    const int j_max = static_cast<int>(std::floor((e_max + kGridEps) / soc_grid));

    int max_allow = 0;
    std::vector<int> allowance(n);
    std::vector<bool> rolls(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Date d = date_of(instance.prices[i].settlement_time);
        allowance[i] = instance.allowance_for(d, params);
        max_allow = std::max(max_allow, allowance[i]);
        if (i + 1 < n) {
            rolls[i] = date_of(instance.prices[i + 1].settlement_time) != d;
        }
    }

    const int n_used = max_allow + 1;
    const auto idx = [&](int m, int u) {
        return static_cast<std::size_t>((m - m_lo) * n_used + u);
    };
    std::vector<double> next_v(static_cast<std::size_t>(n_states) * static_cast<std::size_t>(n_used),
                               0.0);
    std::vector<double> cur_v(next_v.size());

    for (int i = static_cast<int>(n) - 1; i >= 0; --i) {
        const auto ui = static_cast<std::size_t>(i);
        const double price = instance.prices[ui].price;
        const bool chargeable = price <= params.theta_charge;
        const bool dischargeable = price >= params.theta_discharge;
        for (int m = m_lo; m <= m_hi; ++m) {
            for (int u = 0; u < n_used; ++u) {
                const auto after = [&](int m2, int u2) {
                    return next_v[idx(m2, rolls[ui] ? 0 : u2)];
                };
                double best = after(m, u);
                if (u < allowance[ui]) {
                    if (dischargeable) {
                        for (int j = 1; j <= j_max && m - j >= m_lo; ++j) {
                            const double v = price * (j * soc_grid) + after(m - j, u + 1);
                            best = std::max(best, v);
                        }
                    }
                    if (chargeable) {
                        for (int j = 1; j <= j_max && m + j <= m_hi; ++j) {
                            const double v = -price * (j * soc_grid) + after(m + j, u + 1);
                            best = std::max(best, v);
                        }
                    }
                }
                cur_v[idx(m, u)] = best;
            }
        }
        std::swap(cur_v, next_v);
    }
    return next_v[idx(0, 0)];
}

void validate_plan(const HorizonInstance& instance, const OptimizerParams& params,
                   const DispatchPlan& plan) {
    if (plan.steps.size() != instance.prices.size()) {
        throw DataError("plan/instance period count mismatch");
    }
    const double e_max = instance.max_energy();
    double soc = instance.soc0;
    double objective = 0.0;
    std::map<Date, int> used;
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        const auto& step = plan.steps[i];
        const auto& price = instance.prices[i];
        if (step.settlement_time != price.settlement_time) {
            throw DataError("plan step time mismatch");
        }
        if (step.charge_energy < 0.0 || step.discharge_energy < 0.0) {
            throw DataError("negative plan energy");
        }
        const bool charges = step.charge_energy > 0.0;
        const bool discharges = step.discharge_energy > 0.0;
        if (charges && discharges) throw DataError("charge and discharge in one period");
        if ((step.decision == Decision::Hold) == (charges || discharges)) {
            throw DataError("plan decision inconsistent with energies");
        }
        if (charges) {
            if (price.price > params.theta_charge) throw DataError("charge above theta_charge");
            if (step.charge_energy > e_max + kGridEps) throw DataError("charge power violation");
            soc += step.charge_energy;
            objective -= price.price * step.charge_energy;
        }
        if (discharges) {
            if (price.price < params.theta_discharge) {
                throw DataError("discharge below theta_discharge");
            }
            if (step.discharge_energy > e_max + kGridEps) {
                throw DataError("discharge power violation");
            }
            soc -= step.discharge_energy;
            objective += price.price * step.discharge_energy;
        }
        if (soc < -kGridEps || soc > instance.capacity_max + kGridEps) {
            throw DataError("plan SOC out of bounds");
        }
        if (charges || discharges) {
            const Date d = date_of(step.settlement_time);
            const int count = ++used[d];
            if (count > instance.allowance_for(d, params)) {
                throw DataError("plan exceeds daily allowance");
            }
        }
    }
    if (std::abs(objective - plan.objective_value) >
        1e-6 * std::max(1.0, std::abs(plan.objective_value))) {
        throw DataError("plan objective does not match its steps");
    }
}

BacktestResult run_milp_backtest(const AlignedDataset& dataset, const BatteryConfig& config,
                                 const OptimizerParams& params, const ForecastSource& source) {
    params.validate();
    BacktestResult result;
    result.strategy = source.is_raw() ? "milp-raw" : "milp-ml";
    BatteryState state = new_state(config);
    result.cumulative_revenue.reserve(dataset.settlements.size());
    LookaheadStats stats;

    for (const auto& s : dataset.settlements) {
        const Date today = date_of(s.settlement_time);
        roll_date(state, today);
        const auto record_point = [&] {
            result.cumulative_revenue.emplace_back(s.settlement_time,
                                                   result.ledger.total_revenue);
        };

        const Timestamp now{s.settlement_time.mins - kPeriodMinutes};
        auto prices = lookahead_prices(dataset, now, params.lookahead_hours, source, &stats);
        if (prices.empty() || prices.front().settlement_time != s.settlement_time) {
            ++result.unplannable_periods;
            record_point();
            continue;
        }

        // Only the first step of the plan is ever executed, and the price
        // thresholds force a hold whenever the current period's weighted
        // forecast sits inside the dead band, so the solve is skipped then.
        const double first_price = prices.front().price;
        if (first_price > params.theta_charge && first_price < params.theta_discharge) {
            record_point();
            continue;
        }

        HorizonInstance instance;
        instance.prices = std::move(prices);
        instance.soc0 = state.soc;
        instance.capacity_max = state.capacity_max;
        instance.power_max = config.power_max;
        instance.period_hours = config.period_hours;
        const bool at_limit = state.actions_today >= params.daily_action_max;
        // At or past the cap the plan may still propose one override
        // candidate for today; the revenue guard below decides its fate.
        instance.remaining_allowance[today] =
            at_limit ? 1 : params.daily_action_max - state.actions_today;

        const DispatchPlan plan = solve_horizon(instance, params);
        const PlanStep& step = plan.steps.front();
        if (step.decision == Decision::Hold) {
            record_point();
            continue;
        }

        const double planned_energy =
            step.decision == Decision::Charge ? step.charge_energy : step.discharge_energy;
        const double expected_revenue = step.expected_price * planned_energy;
        if (at_limit && expected_revenue < params.override_revenue) {
            ++result.skipped_by_daily_limit;
            record_point();
            continue;
        }

        bool executed = false;
        if (step.decision == Decision::Charge) {
            executed = execute_charge(state, config, s.settlement_time, s.actual_price,
                                      params.theta_charge, result.ledger, planned_energy);
        } else {
            executed = execute_discharge(state, config, s.settlement_time, s.actual_price,
                                         params.theta_discharge, result.ledger, planned_energy);
        }
        if (executed) {
            result.histogram.record(
                step.decision == Decision::Charge ? TradeAction::Charge : TradeAction::Discharge,
                s.settlement_time);
            if (at_limit) ++result.overrides_executed;
        } else {
            ++result.rejected_bids;
        }
        record_point();
    }

    result.actions_total = result.ledger.entries.size();
    const std::size_t days = dataset.distinct_days();
    result.actions_per_day_mean =
        days > 0 ? static_cast<double>(result.actions_total) / static_cast<double>(days) : 0.0;
    result.hygiene_violations = stats.hygiene_violations;
    return result;
}

void export_plan_csv(const std::filesystem::path& path, const DispatchPlan& plan) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << "period,decision,energy,expected_price\n";
    for (const auto& s : plan.steps) {
        const char* decision = s.decision == Decision::Hold
                                   ? "hold"
                                   : (s.decision == Decision::Charge ? "charge" : "discharge");
        const double energy =
            s.decision == Decision::Charge ? s.charge_energy : s.discharge_energy;
        out << format_timestamp(s.settlement_time) << ',' << decision << ',' << fmt_double(energy)
            << ',' << fmt_double(s.expected_price) << '\n';
    }
}

}  // namespace bess
