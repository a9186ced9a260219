#pragma once

#include <charconv>
#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace storyline {

/// Day-resolution calendar date.
using CalendarDate = std::chrono::year_month_day;

inline constexpr double kDaysPerYear = 365.25;

inline CalendarDate make_date(int y, unsigned m, unsigned d) {
    return CalendarDate{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
}

/// Strict `YYYY-MM-DD`. Returns nullopt for anything else, including
/// impossible days such as 2021-02-30.
inline std::optional<CalendarDate> parse_iso_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    int y = 0;
    unsigned m = 0, d = 0;
    auto parse = [](std::string_view part, auto& out) {
        auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
        return ec == std::errc{} && p == part.data() + part.size();
    };
    if (!parse(s.substr(0, 4), y) || !parse(s.substr(5, 2), m) || !parse(s.substr(8, 2), d))
        return std::nullopt;
    CalendarDate date = make_date(y, m, d);
    if (!date.ok()) return std::nullopt;
    return date;
}

inline std::string format_iso(const CalendarDate& date) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
    return buf;
}

inline long to_day_number(const CalendarDate& date) {
    return std::chrono::sys_days{date}.time_since_epoch().count();
}

inline CalendarDate from_day_number(long days) {
    return CalendarDate{std::chrono::sys_days{std::chrono::days{days}}};
}

inline long days_between(const CalendarDate& from, const CalendarDate& to) {
    return to_day_number(to) - to_day_number(from);
}

/// Anniversary of `date` shifted by `years`. A February 29 anniversary in a
/// non-leap year falls on February 28.
inline CalendarDate add_years(const CalendarDate& date, int years) {
    CalendarDate shifted = date + std::chrono::years{years};
    if (!shifted.ok())
        shifted = CalendarDate{std::chrono::year_month_day_last{shifted.year(),
                                                                std::chrono::month_day_last{shifted.month()}}};
    return shifted;
}

inline CalendarDate add_months(const CalendarDate& date, int months) {
    CalendarDate shifted = date + std::chrono::months{months};
    if (!shifted.ok())
        shifted = CalendarDate{std::chrono::year_month_day_last{shifted.year(),
                                                                std::chrono::month_day_last{shifted.month()}}};
    return shifted;
}

/// Completed years between `dob` and `date` (negative before birth).
inline int age_on(const CalendarDate& dob, const CalendarDate& date) {
    int age = static_cast<int>(date.year()) - static_cast<int>(dob.year());
    if (add_years(dob, age) > date) --age;
    return age;
}

inline double years_between(const CalendarDate& from, const CalendarDate& to) {
    return static_cast<double>(days_between(from, to)) / kDaysPerYear;
}

}  // namespace storyline
