#include "mercator/calibration.hpp"

#include "mercator/error.hpp"
#include "mercator/text.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace mercator::calibration {

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double calibrate(const PointForecast& forecast, const ThresholdSpec& threshold, double k) {
    if (!std::isfinite(forecast.x_hat) || !std::isfinite(threshold.value) || !std::isfinite(k)) {
        throw DataError("calibrate: non-finite input");
    }
    if (!(forecast.scale > 0.0) || !std::isfinite(forecast.scale)) {
        throw DataError("calibrate: scale must be positive and finite");
    }
    const double p_at_least = sigmoid(k * (forecast.x_hat - threshold.value) / forecast.scale);
    return threshold.direction == Direction::AtLeast ? p_at_least : 1.0 - p_at_least;
}

PointForecast baseline_forecast(std::span<const double> series, double horizon) {
    const std::size_t n = series.size();
    if (n < 3) {
        throw DataError("baseline_forecast needs at least 3 observations, got " + std::to_string(n));
    }
    for (const double v : series) {
        if (!std::isfinite(v)) {
            throw DataError("baseline_forecast: non-finite observation");
        }
    }
    const double nd = static_cast<double>(n);
    const double t_mean = (nd - 1.0) / 2.0;
    const double y_mean = std::accumulate(series.begin(), series.end(), 0.0) / nd;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dt = static_cast<double>(i) - t_mean;
        const double dy = series[i] - y_mean;
        sxx += dt * dt;
        sxy += dt * dy;
        syy += dy * dy;
    }
    const double slope = sxy / sxx;
    const double intercept = y_mean - slope * t_mean;
    const double x_hat = intercept + slope * (nd - 1.0 + horizon);
    const double sd = std::sqrt(syy / (nd - 1.0));
    return {x_hat, std::max(sd, 1e-9)};
}

std::vector<SeriesPoint> load_series(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open series file " + path.string());
    }
    std::vector<SeriesPoint> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string row = text::trim(line);
        if (row.empty()) {
            continue;
        }
        if (line_no == 1 && row.rfind("date", 0) == 0) {
            continue;
        }
        const auto comma = row.find(',');
        if (comma == std::string::npos) {
            throw DataError(path.string() + " line " + std::to_string(line_no) + ": expected date,value");
        }
        SeriesPoint p;
        try {
            p.date = parse_date(text::trim(row.substr(0, comma)));
            std::size_t used = 0;
            const std::string value = text::trim(row.substr(comma + 1));
            p.value = std::stod(value, &used);
            if (used != value.size()) {
                throw DataError("trailing characters in value");
            }
        } catch (const std::exception& e) {
            throw DataError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!out.empty() && p.date <= out.back().date) {
            throw DataError(path.string() + " line " + std::to_string(line_no) + ": dates must be increasing");
        }
        out.push_back(p);
    }
    return out;
}

Direction parse_direction(const std::string& text) {
    if (text == "at_least" || text == ">=") return Direction::AtLeast;
    if (text == "at_most" || text == "<=") return Direction::AtMost;
    throw ConfigError("unknown threshold direction '" + text + "' (expected at_least or at_most)");
}

const char* to_string(Direction d) { return d == Direction::AtLeast ? "at_least" : "at_most"; }

}  // namespace mercator::calibration
