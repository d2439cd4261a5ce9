#include "atp/core/time.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace atp {

namespace {

// Floor division/modulo so pre-1970 instants behave.
std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b) != 0 && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t floor_mod(std::int64_t a, std::int64_t b) { return a - floor_div(a, b) * b; }

// Howard Hinnant's civil date algorithms.
std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = floor_div(z, 146097);
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y = static_cast<int>(yy + (m <= 2));
}

bool all_digits(std::string_view s) {
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return !s.empty();
}

int to_int(std::string_view s) {
  int v = 0;
  for (char c : s) v = v * 10 + (c - '0');
  return v;
}

}  // namespace

TimestampMs from_civil(int year, int month, int day, int hour, int minute, int second,
                       int millisecond) {
  const std::int64_t days = days_from_civil(year, static_cast<unsigned>(month),
                                            static_cast<unsigned>(day));
  return days * kMsPerDay + hour * kMsPerHour + minute * kMsPerMinute +
         second * kMsPerSecond + millisecond;
}

TimestampMs parse_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-' || !all_digits(s.substr(0, 4)) ||
      !all_digits(s.substr(5, 2)) || !all_digits(s.substr(8, 2)))
    throw std::invalid_argument("malformed ISO date: '" + std::string(s) + "'");
  const int y = to_int(s.substr(0, 4));
  const int m = to_int(s.substr(5, 2));
  const int d = to_int(s.substr(8, 2));
  if (m < 1 || m > 12 || d < 1 || d > 31)
    throw std::invalid_argument("out-of-range ISO date: '" + std::string(s) + "'");
  return from_civil(y, m, d);
}

TimestampMs parse_iso8601(std::string_view s) {
  // YYYY-MM-DDTHH:MM:SS(.fff)?Z
  if (s.size() < 20 || s.back() != 'Z' || s[10] != 'T' || s[13] != ':' || s[16] != ':')
    throw std::invalid_argument("malformed ISO-8601 timestamp: '" + std::string(s) + "'");
  const TimestampMs date = parse_iso_date(s.substr(0, 10));
  if (!all_digits(s.substr(11, 2)) || !all_digits(s.substr(14, 2)) ||
      !all_digits(s.substr(17, 2)))
    throw std::invalid_argument("malformed ISO-8601 timestamp: '" + std::string(s) + "'");
  const int hh = to_int(s.substr(11, 2));
  const int mm = to_int(s.substr(14, 2));
  const int ss = to_int(s.substr(17, 2));
  if (hh > 23 || mm > 59 || ss > 60)
    throw std::invalid_argument("out-of-range ISO-8601 time: '" + std::string(s) + "'");
  int ms = 0;
  if (s.size() > 20) {
    // fractional seconds, 1..3 digits
    std::string_view frac = s.substr(19, s.size() - 20);
    if (frac.empty() || frac[0] != '.' || frac.size() > 4 || !all_digits(frac.substr(1)))
      throw std::invalid_argument("malformed ISO-8601 fraction: '" + std::string(s) + "'");
    std::string digits(frac.substr(1));
    while (digits.size() < 3) digits.push_back('0');
    ms = to_int(digits);
  }
  return date + hh * kMsPerHour + mm * kMsPerMinute + ss * kMsPerSecond + ms;
}

std::string format_iso8601(TimestampMs t) {
  const std::int64_t days = floor_div(t, kMsPerDay);
  std::int64_t rem = floor_mod(t, kMsPerDay);
  int y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  const int hh = static_cast<int>(rem / kMsPerHour);
  rem %= kMsPerHour;
  const int mm = static_cast<int>(rem / kMsPerMinute);
  rem %= kMsPerMinute;
  const int ss = static_cast<int>(rem / kMsPerSecond);
  const int ms = static_cast<int>(rem % kMsPerSecond);
  std::array<char, 32> buf{};
  if (ms == 0) {
    std::snprintf(buf.data(), buf.size(), "%04d-%02u-%02uT%02d:%02d:%02dZ", y, m, d, hh, mm,
                  ss);
  } else {
    std::snprintf(buf.data(), buf.size(), "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", y, m, d, hh,
                  mm, ss, ms);
  }
  return std::string(buf.data());
}

TimestampMs floor_to_hour(TimestampMs t) { return floor_div(t, kMsPerHour) * kMsPerHour; }

double seconds_of_day(TimestampMs t) {
  return static_cast<double>(floor_mod(t, kMsPerDay)) / 1000.0;
}

int day_of_week(TimestampMs t) {
  // 1970-01-01 was a Thursday; Monday = 0.
  return static_cast<int>(floor_mod(floor_div(t, kMsPerDay) + 3, 7));
}

int hour_of_day(TimestampMs t) {
  return static_cast<int>(floor_mod(t, kMsPerDay) / kMsPerHour);
}

TimeEncoding encode_time(TimestampMs t) {
  const double tod_angle = 2.0 * std::numbers::pi * seconds_of_day(t) / 86400.0;
  const double dow_angle = 2.0 * std::numbers::pi * static_cast<double>(day_of_week(t)) / 7.0;
  return TimeEncoding{std::sin(tod_angle), std::cos(tod_angle), std::sin(dow_angle),
                      std::cos(dow_angle)};
}

}  // namespace atp
