#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace stormlens {

/// Calendar day, stored as days since the Unix epoch (UTC).
using Day = std::chrono::sys_days;

/// UTC instant with second resolution.
using Instant = std::chrono::sys_seconds;

namespace cal {

/// Parses "YYYY-MM-DD". Throws Error on malformed input.
Day parse_day(std::string_view s);

/// Parses an ISO-8601 instant "YYYY-MM-DDTHH:MM:SS" (optional trailing 'Z').
/// Throws Error on malformed input.
Instant parse_instant(std::string_view s);

std::string format_day(Day d);
std::string format_instant(Instant t);

/// Calendar day containing the instant.
inline Day day_of(Instant t) { return std::chrono::floor<std::chrono::days>(t); }

/// Start-of-day instant.
inline Instant start_of(Day d) { return Instant{std::chrono::duration_cast<std::chrono::seconds>(d.time_since_epoch())}; }

/// Noon UTC of the given day.
inline Instant noon_of(Day d) { return start_of(d) + std::chrono::hours{12}; }

inline std::int64_t days_between(Day from, Day to) {
  return (to - from).count();
}

}  // namespace cal
}  // namespace stormlens
