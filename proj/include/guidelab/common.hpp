#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace guidelab {

using Vec = std::vector<double>;

enum class ErrorCode {
    InvalidArgument,
    InvalidSchedule,
    IndexOutOfRange,
    DegenerateTime,
    Unsupported,
    NonFinite,
    ConfigError,
    EmptyBatch,
    DimensionTooHigh,
    Undefined,
    UnknownCheck,
    IoError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

    ErrorCode code() const noexcept { return code_; }
    // Message without the code prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

inline void require(bool cond, ErrorCode code, const char* what) {
    if (!cond) [[unlikely]]
        throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) [[unlikely]]
        throw Error(code, what);
}

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);
double squared_distance(std::span<const double> a, std::span<const double> b);

// log(sum(exp(v))) with the max shifted out; -inf for an empty span.
double log_sum_exp(std::span<const double> v);

}  // namespace guidelab
