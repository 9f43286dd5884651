#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace mercator {

using Date = std::chrono::sys_days;
using Timestamp = std::chrono::sys_seconds;

// Accepts YYYY-MM-DD.
Date parse_date(std::string_view text);
std::string format_date(Date d);

// Accepts YYYY-MM-DD, YYYY-MM-DDTHH:MM:SS with optional fractional seconds
// and a trailing Z or +HH:MM / -HH:MM offset, and the space-separated
// "YYYY-MM-DD HH:MM:SS" variant some news APIs emit. Result is UTC.
Timestamp parse_timestamp(std::string_view text);
// Always YYYY-MM-DDTHH:MM:SSZ.
std::string format_timestamp(Timestamp t);

/// Fractional days from `from` to `to` (negative if `to` precedes `from`).
double days_between(Timestamp from, Timestamp to);

/// Start of the given calendar day in UTC.
inline Timestamp start_of(Date d) { return Timestamp{d}; }

}  // namespace mercator
