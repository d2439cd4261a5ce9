#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace atp {

// All instants are UTC milliseconds since the Unix epoch. Millisecond
// resolution keeps event arithmetic exact while still representing
// sub-second GPS sampling jitter.
using TimestampMs = std::int64_t;

inline constexpr std::int64_t kMsPerSecond = 1000;
inline constexpr std::int64_t kMsPerMinute = 60 * kMsPerSecond;
inline constexpr std::int64_t kMsPerHour = 60 * kMsPerMinute;
inline constexpr std::int64_t kMsPerDay = 24 * kMsPerHour;

// Parses "YYYY-MM-DDTHH:MM:SS[.fff]Z". Throws std::invalid_argument on
// malformed input.
TimestampMs parse_iso8601(std::string_view s);

// Parses "YYYY-MM-DD" as midnight UTC.
TimestampMs parse_iso_date(std::string_view s);

// Formats as "YYYY-MM-DDTHH:MM:SSZ", with ".fff" inserted when the
// instant has a sub-second component.
std::string format_iso8601(TimestampMs t);

TimestampMs from_civil(int year, int month, int day, int hour = 0, int minute = 0,
                       int second = 0, int millisecond = 0);

TimestampMs floor_to_hour(TimestampMs t);

double seconds_of_day(TimestampMs t);

// Monday = 0 ... Sunday = 6.
int day_of_week(TimestampMs t);

// Hour of day in [0, 24).
int hour_of_day(TimestampMs t);

struct TimeEncoding {
  double tod_sin = 0.0;
  double tod_cos = 1.0;
  double dow_sin = 0.0;
  double dow_cos = 1.0;
};

// Sine/cosine encoding of time-of-day and day-of-week.
TimeEncoding encode_time(TimestampMs t);

}  // namespace atp
