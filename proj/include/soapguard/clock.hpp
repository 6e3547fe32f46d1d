#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

#include "soapguard/errors.hpp"

namespace soapguard {

// Instants are UTC epoch seconds. The textual form is exactly
// "YYYY-MM-DDThh:mm:ssZ"; nothing looser parses.

namespace detail {

// Howard Hinnant's civil-from-days / days-from-civil, proleptic Gregorian.
inline std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y += m <= 2;
}

}  // namespace detail

inline std::string format_timestamp(std::int64_t epoch_seconds) {
    std::int64_t days = epoch_seconds / 86400;
    std::int64_t rem = epoch_seconds % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    std::int64_t year;
    unsigned month, day;
    detail::civil_from_days(days, year, month, day);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ",
                  static_cast<long long>(year), month, day, static_cast<long long>(rem / 3600),
                  static_cast<long long>(rem / 60 % 60), static_cast<long long>(rem % 60));
    return buf;
}

inline std::int64_t parse_timestamp(const std::string& text) {
    auto fail = [&] { throw BadTimestampFormat("bad timestamp: " + text); };
    if (text.size() != 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
        text[13] != ':' || text[16] != ':' || text[19] != 'Z')
        fail();
    auto num = [&](std::size_t pos, std::size_t len) -> std::int64_t {
        std::int64_t value = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            if (text[i] < '0' || text[i] > '9') fail();
            value = value * 10 + (text[i] - '0');
        }
        return value;
    };
    std::int64_t year = num(0, 4);
    std::int64_t month = num(5, 2), day = num(8, 2);
    std::int64_t hour = num(11, 2), minute = num(14, 2), second = num(17, 2);
    if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second > 59)
        fail();
    // Reject day numbers the calendar would silently normalize.
    std::int64_t days =
        detail::days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
    std::int64_t ry;
    unsigned rm, rd;
    detail::civil_from_days(days, ry, rm, rd);
    if (ry != year || rm != month || rd != day) fail();
    return days * 86400 + hour * 3600 + minute * 60 + second;
}

// Deterministic time source for pipeline runs and replay tests.
class VirtualClock {
public:
    explicit VirtualClock(std::int64_t start_epoch) : now_(start_epoch) {}

    std::int64_t now() const { return now_; }
    void advance(std::int64_t seconds) { now_ += seconds; }

private:
    std::int64_t now_;
};

}  // namespace soapguard
