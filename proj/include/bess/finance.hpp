#pragma once

// Discounted-cash-flow verdict on a trading strategy: annual cash flow,
// simple payback, NPV and IRR over a flat 20-year profile.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bess {

struct CashModel {
    double capex = 8'000'000.0;
    double opex_annual = 20'000.0;
    int lifetime_years = 20;
    double discount_rate = 0.055;

    void validate() const;  // throws std::invalid_argument
};

double annual_cashflow(double annual_revenue, const CashModel& model);

// -capex + sum over years 1..lifetime of cashflow / (1 + r)^t.
double npv(const CashModel& model, double cashflow);

// Rate where npv() crosses zero, by bisection on [-0.99, 10] to |npv| < 0.01
// or 200 iterations. Undefined (nullopt) when cashflow <= 0 or the bracket
// has no sign change.
std::optional<double> irr(const CashModel& model, double cashflow);

// Simple undiscounted payback, capex / cashflow; nullopt when the cash flow
// never recovers the capex.
std::optional<double> payback(const CashModel& model, double cashflow);

struct FinanceReport {
    std::string label;
    double annual_cashflow = 0.0;
    std::optional<double> payback_years;
    double npv = 0.0;
    std::optional<double> irr;
};

FinanceReport finance_report(const CashModel& model, double annual_revenue,
                             std::string label = {});

void write_finance_csv(const std::filesystem::path& path, std::span<const FinanceReport> rows,
                       const CashModel& model);
void write_finance_json(const std::filesystem::path& path, std::span<const FinanceReport> rows,
                        const CashModel& model);

}  // namespace bess
