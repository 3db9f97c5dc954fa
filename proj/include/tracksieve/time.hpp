#pragma once

#include <array>
#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "tracksieve/strings.hpp"

namespace tracksieve {

using Timestamp = std::chrono::sys_seconds;

namespace time_detail {

inline constexpr std::array<std::string_view, 12> kMonths = {
    "Jan", "Feb", "Mar", "Apr", "May", "Jun",
    "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
inline constexpr std::array<std::string_view, 7> kWeekdays = {
    "Sun", "Mon", "Tue", "Wed", "Thu", "Fri", "Sat"};

inline std::optional<int> month_index(std::string_view name) {
  for (std::size_t i = 0; i < kMonths.size(); ++i)
    if (strings::iequals(name, kMonths[i])) return int(i) + 1;
  return std::nullopt;
}

// Zone offset in minutes east of UTC.
inline std::optional<int> zone_offset(std::string_view zone) {
  if (zone.empty()) return 0;
  if ((zone[0] == '+' || zone[0] == '-') && zone.size() == 5) {
    auto hh = strings::parse_int(zone.substr(1, 2));
    auto mm = strings::parse_int(zone.substr(3, 2));
    if (!hh || !mm) return std::nullopt;
    int off = int(*hh) * 60 + int(*mm);
    return zone[0] == '-' ? -off : off;
  }
  struct Named { std::string_view name; int minutes; };
  static constexpr Named kNamed[] = {
      {"UT", 0},        {"UTC", 0},       {"GMT", 0},       {"Z", 0},
      {"EST", -5 * 60}, {"EDT", -4 * 60}, {"CST", -6 * 60}, {"CDT", -5 * 60},
      {"MST", -7 * 60}, {"MDT", -6 * 60}, {"PST", -8 * 60}, {"PDT", -7 * 60}};
  for (const auto& n : kNamed)
    if (strings::iequals(zone, n.name)) return n.minutes;
  return 0;  // unknown military/obsolete zones are treated as UTC
}

}  // namespace time_detail

inline Timestamp make_timestamp(int year, unsigned month, unsigned day,
                                int hour = 0, int minute = 0, int second = 0) {
  using namespace std::chrono;
  sys_days d = year_month_day{std::chrono::year{year}, std::chrono::month{month},
                              std::chrono::day{day}};
  return Timestamp{d} + hours{hour} + minutes{minute} + seconds{second};
}

// Parses an RFC 5322 date such as "Tue, 03 Nov 2015 10:00:00 +0100".
inline std::optional<Timestamp> parse_rfc5322_date(std::string_view text) {
  std::string_view s = strings::trim(text);
  if (auto comma = s.find(','); comma != std::string_view::npos)
    s = strings::trim(s.substr(comma + 1));
  // Drop trailing comments like "(UTC)".
  if (auto paren = s.find('('); paren != std::string_view::npos)
    s = strings::trim(s.substr(0, paren));
  std::vector<std::string_view> parts;
  for (auto p : strings::split(s, ' '))
    if (!p.empty()) parts.push_back(p);
  if (parts.size() < 4) return std::nullopt;
  auto day = strings::parse_int(parts[0]);
  auto month = time_detail::month_index(parts[1]);
  auto year = strings::parse_int(parts[2]);
  if (!day || !month || !year) return std::nullopt;
  if (*year < 100) *year += *year < 50 ? 2000 : 1900;
  auto hms = strings::split(parts[3], ':');
  if (hms.size() < 2 || hms.size() > 3) return std::nullopt;
  auto hh = strings::parse_int(hms[0]);
  auto mi = strings::parse_int(hms[1]);
  std::optional<std::int64_t> ss = hms.size() == 3 ? strings::parse_int(hms[2])
                                                   : std::optional<std::int64_t>(0);
  if (!hh || !mi || !ss) return std::nullopt;
  auto off = time_detail::zone_offset(parts.size() > 4 ? parts[4] : "");
  if (!off) return std::nullopt;
  using namespace std::chrono;
  year_month_day ymd{std::chrono::year{int(*year)}, std::chrono::month{unsigned(*month)},
                     std::chrono::day{unsigned(*day)}};
  if (!ymd.ok()) return std::nullopt;
  return make_timestamp(int(*year), unsigned(*month), unsigned(*day), int(*hh),
                        int(*mi), int(*ss)) -
         minutes{*off};
}

inline std::string format_rfc5322_date(Timestamp t) {
  using namespace std::chrono;
  sys_days days = floor<std::chrono::days>(t);
  year_month_day ymd{days};
  hh_mm_ss hms{t - days};
  weekday wd{days};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s, %02u %s %04d %02d:%02d:%02d +0000",
                std::string(time_detail::kWeekdays[wd.c_encoding()]).c_str(),
                unsigned(ymd.day()),
                std::string(time_detail::kMonths[unsigned(ymd.month()) - 1]).c_str(),
                int(ymd.year()), int(hms.hours().count()),
                int(hms.minutes().count()), int(hms.seconds().count()));
  return buf;
}

inline std::string to_iso8601(Timestamp t) {
  using namespace std::chrono;
  sys_days days = floor<std::chrono::days>(t);
  year_month_day ymd{days};
  hh_mm_ss hms{t - days};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()),
                int(hms.hours().count()), int(hms.minutes().count()),
                int(hms.seconds().count()));
  return buf;
}

// Accepts "YYYY-MM-DD" (meaning the last second of that day) or
// "YYYY-MM-DDTHH:MM:SSZ".
inline std::optional<Timestamp> parse_iso8601(std::string_view s) {
  s = strings::trim(s);
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  auto y = strings::parse_int(s.substr(0, 4));
  auto m = strings::parse_int(s.substr(5, 2));
  auto d = strings::parse_int(s.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  std::chrono::year_month_day ymd{std::chrono::year{int(*y)},
                                  std::chrono::month{unsigned(*m)},
                                  std::chrono::day{unsigned(*d)}};
  if (!ymd.ok()) return std::nullopt;
  if (s.size() == 10)
    return make_timestamp(int(*y), unsigned(*m), unsigned(*d), 23, 59, 59);
  if (s.size() < 19 || (s[10] != 'T' && s[10] != ' ')) return std::nullopt;
  auto hh = strings::parse_int(s.substr(11, 2));
  auto mi = strings::parse_int(s.substr(14, 2));
  auto ss = strings::parse_int(s.substr(17, 2));
  if (!hh || !mi || !ss) return std::nullopt;
  return make_timestamp(int(*y), unsigned(*m), unsigned(*d), int(*hh), int(*mi),
                        int(*ss));
}

// Calendar-month shift that keeps the time of day; days past the end of the
// target month clamp to its last day (Oct 31 + 3 months = Jan 31,
// Nov 30 + 3 months = Feb 28/29).
inline Timestamp add_months(Timestamp t, int months) {
  using namespace std::chrono;
  sys_days days = floor<std::chrono::days>(t);
  auto time_of_day = t - days;
  year_month_day ymd{days};
  year_month_day shifted = ymd + std::chrono::months{months};
  if (!shifted.ok())
    shifted = year_month_day_last{shifted.year(), month_day_last{shifted.month()}};
  return Timestamp{sys_days{shifted}} + time_of_day;
}

}  // namespace tracksieve
