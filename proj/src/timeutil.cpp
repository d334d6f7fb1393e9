#include "bess/timeutil.hpp"

#include <cstdio>

namespace bess {

namespace {

// Howard Hinnant's civil-date algorithms.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
    y = static_cast<int>(yy + (m <= 2));
}

int days_in_month(int y, int m) {
    static const int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2) {
        const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
        return leap ? 29 : 28;
    }
    return lengths[m - 1];
}

bool parse_fixed_uint(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    int v = 0;
    for (std::size_t i = 0; i < len; ++i) {
        const char c = s[pos + i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

}  // namespace

Date civil_to_date(int year, int month, int day) {
    return Date{static_cast<std::int32_t>(days_from_civil(year, month, day))};
}

void date_to_civil(Date d, int& year, int& month, int& day) {
    civil_from_days(d.days, year, month, day);
}

int month_of(Date d) {
    int y, m, dd;
    civil_from_days(d.days, y, m, dd);
    return m;
}

std::optional<Date> parse_date(std::string_view s) {
    int y, mo, dd;
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    if (!parse_fixed_uint(s, 0, 4, y) || !parse_fixed_uint(s, 5, 2, mo) ||
        !parse_fixed_uint(s, 8, 2, dd))
        return std::nullopt;
    if (mo < 1 || mo > 12 || dd < 1 || dd > days_in_month(y, mo)) return std::nullopt;
    return civil_to_date(y, mo, dd);
}

std::optional<Timestamp> parse_timestamp(std::string_view s) {
    if (s.size() != 16 && s.size() != 19) return std::nullopt;
    if (s[10] != 'T' && s[10] != ' ') return std::nullopt;
    auto date = parse_date(s.substr(0, 10));
    if (!date) return std::nullopt;
    int hh, mm;
    if (s[13] != ':') return std::nullopt;
    if (!parse_fixed_uint(s, 11, 2, hh) || !parse_fixed_uint(s, 14, 2, mm)) return std::nullopt;
    if (hh > 23 || mm > 59) return std::nullopt;
    if (s.size() == 19) {
        int ss;
        if (s[16] != ':' || !parse_fixed_uint(s, 17, 2, ss) || ss != 0) return std::nullopt;
    }
    return Timestamp{static_cast<std::int64_t>(date->days) * kMinutesPerDay + hh * 60 + mm};
}

std::string format_timestamp(Timestamp t) {
    int y, mo, dd;
    civil_from_days(date_of(t).days, y, mo, dd);
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d", y, mo, dd, hour_of_day(t),
                  minute_of_hour(t));
    return buf;
}

std::string format_date(Date d) {
    int y, mo, dd;
    civil_from_days(d.days, y, mo, dd);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, mo, dd);
    return buf;
}

}  // namespace bess
