#include "stormlens/calendar.hpp"

#include <charconv>

#include "stormlens/error.hpp"

namespace stormlens::cal {

namespace {

int parse_int_field(std::string_view s, std::size_t pos, std::size_t len, std::string_view whole) {
  if (pos + len > s.size()) throw Error::at("malformed date/time '{}'", whole);
  int value = 0;
  auto* first = s.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc{} || ptr != first + len) throw Error::at("malformed date/time '{}'", whole);
  return value;
}

}  // namespace

Day parse_day(std::string_view s) {
  using namespace std::chrono;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') throw Error::at("malformed date '{}' (want YYYY-MM-DD)", s);
  int y = parse_int_field(s, 0, 4, s);
  int m = parse_int_field(s, 5, 2, s);
  int d = parse_int_field(s, 8, 2, s);
  year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw Error::at("invalid calendar date '{}'", s);
  return sys_days{ymd};
}

Instant parse_instant(std::string_view s) {
  using namespace std::chrono;
  std::string_view body = s;
  if (!body.empty() && (body.back() == 'Z' || body.back() == 'z')) body.remove_suffix(1);
  if (body.size() != 19 || (body[10] != 'T' && body[10] != ' ') || body[13] != ':' || body[16] != ':')
    throw Error::at("malformed timestamp '{}' (want YYYY-MM-DDTHH:MM:SS)", s);
  Day d = parse_day(body.substr(0, 10));
  int hh = parse_int_field(body, 11, 2, s);
  int mm = parse_int_field(body, 14, 2, s);
  int ss = parse_int_field(body, 17, 2, s);
  if (hh > 23 || mm > 59 || ss > 59) throw Error::at("invalid time of day in '{}'", s);
  return start_of(d) + hours{hh} + minutes{mm} + seconds{ss};
}

std::string format_day(Day d) {
  std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day()));
  return buf;
}

std::string format_instant(Instant t) {
  using namespace std::chrono;
  Day d = day_of(t);
  auto tod = t - start_of(d);
  auto h = duration_cast<hours>(tod);
  auto m = duration_cast<minutes>(tod - h);
  auto s = duration_cast<seconds>(tod - h - m);
  char buf[24];
  std::snprintf(buf, sizeof buf, "T%02d:%02d:%02dZ", int(h.count()), int(m.count()), int(s.count()));
  return format_day(d) + buf;
}

}  // namespace stormlens::cal
