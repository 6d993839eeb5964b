#include "guidelab/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace guidelab {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::InvalidSchedule: return "InvalidSchedule";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::DegenerateTime: return "DegenerateTime";
        case ErrorCode::Unsupported: return "Unsupported";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::EmptyBatch: return "EmptyBatch";
        case ErrorCode::DimensionTooHigh: return "DimensionTooHigh";
        case ErrorCode::Undefined: return "Undefined";
        case ErrorCode::UnknownCheck: return "UnknownCheck";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double log_sum_exp(std::span<const double> v) {
    if (v.empty()) return -std::numeric_limits<double>::infinity();
    const double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

}  // namespace guidelab
