#include "mercator/time.hpp"

#include "mercator/error.hpp"

#include <cctype>
#include <cstdio>

namespace mercator {

namespace {

int read_digits(std::string_view text, std::size_t pos, std::size_t count) {
    if (pos + count > text.size()) {
        throw DataError("truncated date/time: '" + std::string(text) + "'");
    }
    int value = 0;
    for (std::size_t i = pos; i < pos + count; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
            throw DataError("invalid date/time: '" + std::string(text) + "'");
        }
        value = value * 10 + (text[i] - '0');
    }
    return value;
}

void expect(std::string_view text, std::size_t pos, char c) {
    if (pos >= text.size() || text[pos] != c) {
        throw DataError("invalid date/time: '" + std::string(text) + "'");
    }
}

}  // namespace

Date parse_date(std::string_view text) {
    if (text.size() < 10) {
        throw DataError("invalid date: '" + std::string(text) + "'");
    }
    const int y = read_digits(text, 0, 4);
    expect(text, 4, '-');
    const int m = read_digits(text, 5, 2);
    expect(text, 7, '-');
    const int d = read_digits(text, 8, 2);
    if (text.size() != 10) {
        throw DataError("invalid date: '" + std::string(text) + "'");
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) {
        throw DataError("invalid calendar date: '" + std::string(text) + "'");
    }
    return Date{ymd};
}

std::string format_date(Date d) {
    const std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

Timestamp parse_timestamp(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) {
        text.remove_suffix(1);
    }
    if (text.size() < 10) {
        throw DataError("invalid timestamp: '" + std::string(text) + "'");
    }
    const Date day = parse_date(text.substr(0, 10));
    if (text.size() == 10) {
        return start_of(day);
    }
    if (text[10] != 'T' && text[10] != ' ') {
        throw DataError("invalid timestamp: '" + std::string(text) + "'");
    }
    const int hh = read_digits(text, 11, 2);
    expect(text, 13, ':');
    const int mm = read_digits(text, 14, 2);
    int ss = 0;
    std::size_t pos = 16;
    if (pos < text.size() && text[pos] == ':') {
        ss = read_digits(text, 17, 2);
        pos = 19;
    }
    if (hh > 23 || mm > 59 || ss > 60) {
        throw DataError("invalid time of day: '" + std::string(text) + "'");
    }
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
            ++pos;
        }
    }
    int offset_minutes = 0;
    if (pos < text.size()) {
        const char tz = text[pos];
        if (tz == 'Z' && pos + 1 == text.size()) {
            // UTC
        } else if ((tz == '+' || tz == '-') && text.size() >= pos + 5) {
            const int oh = read_digits(text, pos + 1, 2);
            std::size_t mpos = pos + 3;
            if (mpos < text.size() && text[mpos] == ':') {
                ++mpos;
            }
            const int om = read_digits(text, mpos, 2);
            if (mpos + 2 != text.size()) {
                throw DataError("invalid timestamp offset: '" + std::string(text) + "'");
            }
            offset_minutes = (tz == '+' ? 1 : -1) * (oh * 60 + om);
        } else {
            throw DataError("invalid timestamp: '" + std::string(text) + "'");
        }
    }
    using namespace std::chrono;
    return start_of(day) + hours{hh} + minutes{mm} + seconds{ss} - minutes{offset_minutes};
}

std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    const auto day = floor<days>(t);
    const hh_mm_ss hms{t - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", format_date(day).c_str(),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

double days_between(Timestamp from, Timestamp to) {
    return static_cast<double>((to - from).count()) / 86400.0;
}

}  // namespace mercator
