#include "bess/finance.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "bess/csvio.hpp"
#include "bess/errors.hpp"
#include "json.hpp"

namespace bess {

void CashModel::validate() const {
    if (!(capex > 0.0)) throw std::invalid_argument("capex must be positive");
    if (!(opex_annual > 0.0)) throw std::invalid_argument("opex_annual must be positive");
    if (lifetime_years <= 0) throw std::invalid_argument("lifetime_years must be positive");
    if (!(discount_rate > 0.0) || discount_rate >= 1.0) {
        throw std::invalid_argument("discount_rate must be in (0, 1)");
    }
}

double annual_cashflow(double annual_revenue, const CashModel& model) {
    return annual_revenue - model.opex_annual;
}

namespace {

double npv_at(double rate, double capex, double cashflow, int years) {
    double value = -capex;
    double factor = 1.0;
    for (int t = 1; t <= years; ++t) {
        factor /= 1.0 + rate;
        value += cashflow * factor;
    }
    return value;
}

}  // namespace

double npv(const CashModel& model, double cashflow) {
    return npv_at(model.discount_rate, model.capex, cashflow, model.lifetime_years);
}

std::optional<double> irr(const CashModel& model, double cashflow) {
    if (!(cashflow > 0.0)) return std::nullopt;
    double lo = -0.99;
    double hi = 10.0;
    const auto f = [&](double r) { return npv_at(r, model.capex, cashflow, model.lifetime_years); };
    if (f(lo) <= 0.0 || f(hi) >= 0.0) {
        // npv is decreasing in the rate for positive cash flows; no sign
        // change over the bracket means no root inside it.
        return std::nullopt;
    }
    double mid = 0.5 * (lo + hi);
    for (int i = 0; i < 200; ++i) {
        mid = 0.5 * (lo + hi);
        const double v = f(mid);
        if (std::abs(v) < 0.01) return mid;
        if (v > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return mid;
}

std::optional<double> payback(const CashModel& model, double cashflow) {
    if (!(cashflow > 0.0)) return std::nullopt;
    return model.capex / cashflow;
}

FinanceReport finance_report(const CashModel& model, double annual_revenue, std::string label) {
    model.validate();
    FinanceReport r;
    r.label = std::move(label);
    r.annual_cashflow = annual_cashflow(annual_revenue, model);
    r.payback_years = payback(model, r.annual_cashflow);
    r.npv = npv(model, r.annual_cashflow);
    r.irr = irr(model, r.annual_cashflow);
    return r;
}

void write_finance_csv(const std::filesystem::path& path, std::span<const FinanceReport> rows,
                       const CashModel& model) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << "label,annual_cashflow,payback_years,discount_rate,npv,irr\n";
    for (const auto& r : rows) {
        out << r.label << ',' << fmt_double(r.annual_cashflow) << ','
            << (r.payback_years ? fmt_double(*r.payback_years) : "non-recoverable") << ','
            << fmt_double(model.discount_rate) << ',' << fmt_double(r.npv) << ','
            << (r.irr ? fmt_double(*r.irr) : "undefined") << '\n';
    }
}

void write_finance_json(const std::filesystem::path& path, std::span<const FinanceReport> rows,
                        const CashModel& model) {
    nlohmann::ordered_json j;
    j["capex"] = model.capex;
    j["opex_annual"] = model.opex_annual;
    j["lifetime_years"] = model.lifetime_years;
    j["discount_rate"] = model.discount_rate;
    j["strategies"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json row;
        row["label"] = r.label;
        row["annual_cashflow"] = r.annual_cashflow;
        if (r.payback_years) {
            row["payback_years"] = *r.payback_years;
        } else {
            row["payback_years"] = "non-recoverable";
        }
        row["npv"] = r.npv;
        if (r.irr) {
            row["irr"] = *r.irr;
        } else {
            row["irr"] = "undefined";
        }
        j["strategies"].push_back(row);
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace bess
