#include "gridhedonic/calendar.hpp"

#include <charconv>
#include <cstdio>

#include "gridhedonic/errors.hpp"

namespace gridhedonic {
namespace {

using namespace std::chrono;

constexpr Date kWeekEpoch = sys_days{year{1970} / January / 5};

bool read_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > text.size()) return false;
  const char* first = text.data() + pos;
  const char* last = first + len;
  for (const char* p = first; p != last; ++p)
    if (*p < '0' || *p > '9') return false;
  return std::from_chars(first, last, out).ec == std::errc{};
}

Date make_date(int y, int m, int d, std::string_view text) {
  year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw InvalidInput("invalid calendar date '" + std::string(text) + "'");
  return sys_days{ymd};
}

}  // namespace

Date parse_date(std::string_view text) {
  int y = 0, m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !read_int(text, 0, 4, y) ||
      !read_int(text, 5, 2, m) || !read_int(text, 8, 2, d))
    throw InvalidInput("expected date YYYY-MM-DD, got '" + std::string(text) + "'");
  return make_date(y, m, d, text);
}

std::string format_date(Date d) {
  year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

Timestamp parse_timestamp(std::string_view text) {
  auto fail = [&]() -> Timestamp {
    throw InvalidInput("expected ISO-8601 timestamp, got '" + std::string(text) + "'");
  };
  if (text.size() < 19 || (text[10] != 'T' && text[10] != ' ')) return fail();
  const Date date = parse_date(text.substr(0, 10));
  int hh = 0, mm = 0, ss = 0;
  if (text[13] != ':' || text[16] != ':' || !read_int(text, 11, 2, hh) ||
      !read_int(text, 14, 2, mm) || !read_int(text, 17, 2, ss) || hh > 23 || mm > 59 || ss > 60)
    return fail();
  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
  }
  int offset_minutes = 0;
  if (pos < text.size()) {
    const char c = text[pos];
    if (c == 'Z' && pos + 1 == text.size()) {
      // UTC
    } else if ((c == '+' || c == '-') && text.size() == pos + 6 && text[pos + 3] == ':') {
      int oh = 0, om = 0;
      if (!read_int(text, pos + 1, 2, oh) || !read_int(text, pos + 4, 2, om)) return fail();
      offset_minutes = (c == '+' ? 1 : -1) * (oh * 60 + om);
    } else {
      return fail();
    }
  }
  return Timestamp{date} + hours{hh} + minutes{mm - offset_minutes} + seconds{ss};
}

std::string format_timestamp(Timestamp t) {
  const Date d = utc_day(t);
  const auto tod = t - Timestamp{d};
  const long secs = static_cast<long>(tod.count());
  char buf[32];
  std::snprintf(buf, sizeof buf, "%sT%02ld:%02ld:%02ldZ", format_date(d).c_str(), secs / 3600,
                (secs / 60) % 60, secs % 60);
  return buf;
}

int week_index(Date d) {
  const int diff = days_between(kWeekEpoch, d);
  return diff >= 0 ? diff / 7 : -((-diff + 6) / 7);
}

Date week_start(int week) { return kWeekEpoch + days{7 * week}; }

}  // namespace gridhedonic
