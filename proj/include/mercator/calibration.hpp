#pragma once

#include "mercator/time.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace mercator::calibration {

inline constexpr double kDefaultSharpness = 1.5;

enum class Direction { AtLeast, AtMost };

/// The event resolves Yes when the quantity is >= value (AtLeast) or
/// <= value (AtMost).
struct ThresholdSpec {
    double value = 0.0;
    Direction direction = Direction::AtLeast;
};

struct PointForecast {
    double x_hat = 0.0;
    double scale = 1.0;  // unit normaliser; must be > 0
};

/// Numerically stable logistic function.
double sigmoid(double z);

/// Threshold-crossing probability sigma(k * (x_hat - T) / scale) for AtLeast;
/// AtMost returns the exact complement of the AtLeast value.
double calibrate(const PointForecast& forecast, const ThresholdSpec& threshold, double k = kDefaultSharpness);

/// OLS linear trend over equally spaced observations, extrapolated `horizon`
/// steps past the last one. scale is the sample standard deviation of the
/// series, floored at 1e-9. Needs at least three observations.
PointForecast baseline_forecast(std::span<const double> series, double horizon);

struct SeriesPoint {
    Date date;
    double value = 0.0;
};

/// CSV with a `date,value` header. Rows must be in ascending date order.
std::vector<SeriesPoint> load_series(const std::filesystem::path& path);

Direction parse_direction(const std::string& text);
const char* to_string(Direction d);

}  // namespace mercator::calibration
