#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace gridhedonic {

using Date = std::chrono::sys_days;
using Timestamp = std::chrono::sys_seconds;

// "YYYY-MM-DD"; throws InvalidInput on anything else.
Date parse_date(std::string_view text);
std::string format_date(Date d);

// ISO-8601 "YYYY-MM-DDTHH:MM:SS" with optional fractional seconds and a
// trailing "Z" or "+HH:MM"/"-HH:MM" offset. Offsets are folded into UTC.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp t);

// UTC calendar date containing the instant.
inline Date utc_day(Timestamp t) { return std::chrono::floor<std::chrono::days>(t); }

// Weeks start on Monday. The index counts weeks since the Monday 1970-01-05,
// so it is negative for earlier dates.
int week_index(Date d);
Date week_start(int week);

inline int days_between(Date from, Date to) { return static_cast<int>((to - from).count()); }

}  // namespace gridhedonic
