#include "guidelab/schedule.hpp"

#include <cmath>
#include <string>

#include "guidelab/common.hpp"

namespace guidelab {

Schedule Schedule::build(int n_steps, double c0, double c1) {
    require(n_steps >= 2, ErrorCode::InvalidSchedule, "n_steps must be >= 2, got " + std::to_string(n_steps));
    require(c0 > 0.0 && std::isfinite(c0), ErrorCode::InvalidSchedule, "c0 must be positive");
    require(c1 > 0.0 && std::isfinite(c1), ErrorCode::InvalidSchedule, "c1 must be positive");

    const std::size_t n = static_cast<std::size_t>(n_steps);
    const double rate = c1 * std::log(static_cast<double>(n_steps)) / static_cast<double>(n_steps);

    std::vector<double> alpha_bar(n), beta(n);
    alpha_bar[n - 1] = std::pow(static_cast<double>(n_steps), -c0);
    for (std::size_t i = n - 1;; --i) {
        const double a = alpha_bar[i];
        const double x = rate * (1.0 - a);
        beta[i] = x / (1.0 + x);
        if (i == 0) break;
        alpha_bar[i - 1] = a + rate * a * (1.0 - a);
    }

    for (std::size_t i = 0; i < n; ++i) {
        require(std::isfinite(alpha_bar[i]) && std::isfinite(beta[i]), ErrorCode::InvalidSchedule,
                "non-finite value at step " + std::to_string(i + 1));
    }
    require(alpha_bar[0] < 1.0, ErrorCode::InvalidSchedule,
            "recursion reached alpha_bar_1 >= 1; reduce c1 or increase N");
    return Schedule(c0, c1, std::move(alpha_bar), std::move(beta));
}

double Schedule::alpha_bar(int n) const {
    if (n < 1 || n > steps()) [[unlikely]]
        throw Error(ErrorCode::IndexOutOfRange, "step " + std::to_string(n));
    return alpha_bar_[static_cast<std::size_t>(n - 1)];
}

double Schedule::beta(int n) const {
    if (n < 1 || n > steps()) [[unlikely]]
        throw Error(ErrorCode::IndexOutOfRange, "step " + std::to_string(n));
    return beta_[static_cast<std::size_t>(n - 1)];
}

double Schedule::noise_level(int n) const { return 1.0 - alpha_bar(n); }

int Schedule::nearest_step(double signal) const {
    int best = 1;
    double best_gap = std::abs(alpha_bar_[0] - signal);
    for (int n = 2; n <= steps(); ++n) {
        const double gap = std::abs(alpha_bar_[static_cast<std::size_t>(n - 1)] - signal);
        if (gap < best_gap) {
            best_gap = gap;
            best = n;
        }
    }
    return best;
}

}  // namespace guidelab
