#include "citywatch/time.hpp"

#include <array>
#include <cstdio>

namespace citywatch {
namespace {

using namespace std::chrono;

bool digits(std::string_view text, std::size_t pos, std::size_t count, int& out) {
  if (pos + count > text.size()) return false;
  int value = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    const char c = text[i];
    if (c < '0' || c > '9') return false;
    value = value * 10 + (c - '0');
  }
  out = value;
  return true;
}

std::optional<Instant> assemble(int year, int month, int day, int hour, int minute,
                                int second) {
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 59) return std::nullopt;
  return sys_days{ymd} + hours{hour} + minutes{minute} + seconds{second};
}

struct Civil {
  int year, month, day, hour, minute, second;
};

Civil split(Instant t) {
  const auto day_start = floor<days>(t);
  const year_month_day ymd{day_start};
  const hh_mm_ss hms{t - day_start};
  return {static_cast<int>(ymd.year()), static_cast<int>(static_cast<unsigned>(ymd.month())),
          static_cast<int>(static_cast<unsigned>(ymd.day())), static_cast<int>(hms.hours().count()),
          static_cast<int>(hms.minutes().count()), static_cast<int>(hms.seconds().count())};
}

}  // namespace

std::optional<Instant> parse_flow_timestamp(std::string_view text) {
  // 0123456789012345678901
  // dd/MM/yyyy hh:mm:ss AM
  if (text.size() != 22) return std::nullopt;
  if (text[2] != '/' || text[5] != '/' || text[10] != ' ' || text[13] != ':' ||
      text[16] != ':' || text[19] != ' ' || text[21] != 'M') {
    return std::nullopt;
  }
  int day = 0, month = 0, year = 0, hour = 0, minute = 0, second = 0;
  if (!digits(text, 0, 2, day) || !digits(text, 3, 2, month) || !digits(text, 6, 4, year) ||
      !digits(text, 11, 2, hour) || !digits(text, 14, 2, minute) ||
      !digits(text, 17, 2, second)) {
    return std::nullopt;
  }
  if (hour < 1 || hour > 12) return std::nullopt;
  const char meridiem = text[20];
  if (meridiem == 'A') {
    if (hour == 12) hour = 0;
  } else if (meridiem == 'P') {
    if (hour != 12) hour += 12;
  } else {
    return std::nullopt;
  }
  return assemble(year, month, day, hour, minute, second);
}

std::string format_flow_timestamp(Instant t) {
  const Civil c = split(t);
  int hour12 = c.hour % 12;
  if (hour12 == 0) hour12 = 12;
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%02d/%02d/%04d %02d:%02d:%02d %s", c.day, c.month,
                c.year, hour12, c.minute, c.second, c.hour < 12 ? "AM" : "PM");
  return buf.data();
}

std::optional<Instant> parse_iso8601(std::string_view text) {
  // 01234567890123456789
  // YYYY-MM-DDTHH:MM:SSZ
  if (text.size() != 20) return std::nullopt;
  if (text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':' ||
      text[16] != ':' || text[19] != 'Z') {
    return std::nullopt;
  }
  int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
  if (!digits(text, 0, 4, year) || !digits(text, 5, 2, month) || !digits(text, 8, 2, day) ||
      !digits(text, 11, 2, hour) || !digits(text, 14, 2, minute) ||
      !digits(text, 17, 2, second)) {
    return std::nullopt;
  }
  return assemble(year, month, day, hour, minute, second);
}

std::string format_iso8601(Instant t) {
  const Civil c = split(t);
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%04d-%02d-%02dT%02d:%02d:%02dZ", c.year, c.month, c.day,
                c.hour, c.minute, c.second);
  return buf.data();
}

}  // namespace citywatch
