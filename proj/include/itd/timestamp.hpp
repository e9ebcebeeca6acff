#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "itd/error.hpp"

namespace itd {

struct MalformedTimestamp : Error {
    using Error::Error;
};

struct Date {
    int year = 1970;
    int month = 1;  // 1..12
    int day = 1;    // 1..31

    auto operator<=>(const Date&) const = default;

    std::string to_string() const;   // MM/DD/YYYY
    std::string compact() const;     // YYYYMMDD
    std::int64_t civil_days() const; // days since 1970-01-01
    Date plus_days(int n) const;
    int weekday() const;             // 0 = Sunday .. 6 = Saturday

    static std::optional<Date> try_parse(std::string_view text);  // MM/DD/YYYY
    static Date from_civil_days(std::int64_t days);
    static bool valid(int year, int month, int day);
};

struct TimeOfDay {
    int hour = 0;
    int minute = 0;
    int second = 0;

    auto operator<=>(const TimeOfDay&) const = default;

    int seconds_since_midnight() const { return hour * 3600 + minute * 60 + second; }
    double fractional_hours() const { return seconds_since_midnight() / 3600.0; }
};

// Corpus-local wall clock time, text form `MM/DD/YYYY HH:MM:SS`.
struct Timestamp {
    Date date;
    TimeOfDay time;

    auto operator<=>(const Timestamp&) const = default;

    std::string to_string() const;

    static Timestamp parse(std::string_view text);  // throws MalformedTimestamp
    static std::optional<Timestamp> try_parse(std::string_view text);
};

}  // namespace itd
