#pragma once

// Timezone-naive market time (fixed-offset AEST, no DST).
// Timestamps are minutes since 1970-01-01 00:00, dates are days since 1970-01-01.

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace bess {

struct Date {
    std::int32_t days = 0;
    auto operator<=>(const Date&) const = default;
};

struct Timestamp {
    std::int64_t mins = 0;
    auto operator<=>(const Timestamp&) const = default;
};

inline constexpr std::int64_t kMinutesPerDay = 24 * 60;
inline constexpr std::int64_t kPeriodMinutes = 30;  // settlement period length

constexpr Date date_of(Timestamp t) {
    std::int64_t d = t.mins >= 0 ? t.mins / kMinutesPerDay
                                 : (t.mins - (kMinutesPerDay - 1)) / kMinutesPerDay;
    return Date{static_cast<std::int32_t>(d)};
}

constexpr int minute_of_day(Timestamp t) {
    return static_cast<int>(t.mins - static_cast<std::int64_t>(date_of(t).days) * kMinutesPerDay);
}

constexpr int hour_of_day(Timestamp t) { return minute_of_day(t) / 60; }
constexpr int minute_of_hour(Timestamp t) { return minute_of_day(t) % 60; }

constexpr Timestamp start_of(Date d) {
    return Timestamp{static_cast<std::int64_t>(d.days) * kMinutesPerDay};
}

// 0 = Monday .. 6 = Sunday (1970-01-01 was a Thursday).
constexpr int weekday(Date d) {
    return static_cast<int>(((d.days % 7) + 7 + 3) % 7);
}

Date civil_to_date(int year, int month, int day);
void date_to_civil(Date d, int& year, int& month, int& day);
int month_of(Date d);  // 1..12

// Accepts YYYY-MM-DD[T ]HH:MM[:00]; rejects anything else.
std::optional<Timestamp> parse_timestamp(std::string_view s);
std::optional<Date> parse_date(std::string_view s);  // YYYY-MM-DD

std::string format_timestamp(Timestamp t);  // YYYY-MM-DDTHH:MM
std::string format_date(Date d);            // YYYY-MM-DD

}  // namespace bess
