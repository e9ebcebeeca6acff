#include "itd/timestamp.hpp"

#include <array>
#include <cstdio>

namespace itd {

namespace {

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
    static constexpr std::array<int, 12> d = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return d[m - 1];
}

// Parses exactly `width` digits, advances `pos`; returns -1 on any deviation.
int take_digits(std::string_view s, std::size_t& pos, int width) {
    if (pos + static_cast<std::size_t>(width) > s.size()) return -1;
    int value = 0;
    for (int i = 0; i < width; ++i) {
        const char c = s[pos + i];
        if (c < '0' || c > '9') return -1;
        value = value * 10 + (c - '0');
    }
    pos += static_cast<std::size_t>(width);
    return value;
}

bool take_char(std::string_view s, std::size_t& pos, char expected) {
    if (pos >= s.size() || s[pos] != expected) return false;
    ++pos;
    return true;
}

}  // namespace

bool Date::valid(int year, int month, int day) {
    return year >= 1 && month >= 1 && month <= 12 && day >= 1 && day <= days_in_month(year, month);
}

std::optional<Date> Date::try_parse(std::string_view text) {
    std::size_t pos = 0;
    const int m = take_digits(text, pos, 2);
    if (m < 0 || !take_char(text, pos, '/')) return std::nullopt;
    const int d = take_digits(text, pos, 2);
    if (d < 0 || !take_char(text, pos, '/')) return std::nullopt;
    const int y = take_digits(text, pos, 4);
    if (y < 0 || pos != text.size()) return std::nullopt;
    if (!valid(y, m, d)) return std::nullopt;
    return Date{y, m, d};
}

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%02d/%02d/%04d", month, day, year);
    return buf;
}

std::string Date::compact() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d%02d%02d", year, month, day);
    return buf;
}

// Howard Hinnant's civil-from-days / days-from-civil algorithms.
std::int64_t Date::civil_days() const {
    const int y = year - (month <= 2 ? 1 : 0);
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = static_cast<unsigned>((153 * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

Date Date::from_civil_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return Date{static_cast<int>(y + (m <= 2 ? 1 : 0)), static_cast<int>(m), static_cast<int>(d)};
}

Date Date::plus_days(int n) const { return from_civil_days(civil_days() + n); }

int Date::weekday() const {
    const std::int64_t z = civil_days();
    return static_cast<int>(z >= -4 ? (z + 4) % 7 : (z + 5) % 7 + 6);
}

std::string Timestamp::to_string() const {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%02d/%02d/%04d %02d:%02d:%02d", date.month, date.day, date.year,
                  time.hour, time.minute, time.second);
    return buf;
}

std::optional<Timestamp> Timestamp::try_parse(std::string_view text) {
    if (text.size() != 19) return std::nullopt;
    const auto date = Date::try_parse(text.substr(0, 10));
    if (!date) return std::nullopt;
    std::size_t pos = 10;
    if (!take_char(text, pos, ' ')) return std::nullopt;
    const int h = take_digits(text, pos, 2);
    if (h < 0 || h > 23 || !take_char(text, pos, ':')) return std::nullopt;
    const int m = take_digits(text, pos, 2);
    if (m < 0 || m > 59 || !take_char(text, pos, ':')) return std::nullopt;
    const int s = take_digits(text, pos, 2);
    if (s < 0 || s > 59 || pos != text.size()) return std::nullopt;
    return Timestamp{*date, TimeOfDay{h, m, s}};
}

Timestamp Timestamp::parse(std::string_view text) {
    const auto ts = try_parse(text);
    if (!ts) throw MalformedTimestamp("bad timestamp: \"" + std::string(text) + "\"");
    return *ts;
}

}  // namespace itd
