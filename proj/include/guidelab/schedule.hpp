#pragma once

#include <span>
#include <vector>

namespace guidelab {

/// Discrete noise schedule {beta_n, alpha_bar_n}, n = 1..N.
///
/// alpha_bar_N = N^{-c0} and the cumulative products are filled by the backward
/// recursion alpha_bar_{n-1} = alpha_bar_n + c1 * alpha_bar_n * (1 - alpha_bar_n) * log N / N,
/// with beta_n = x / (1 + x), x = c1 * (1 - alpha_bar_n) * log N / N, so that
/// alpha_bar_n = alpha_bar_{n-1} * (1 - beta_n) holds up to round-off.
///
/// Step n of every sampler evaluates model scores at signal level alpha_bar_n
/// (marginal N(sqrt(alpha_bar_n) mu, ...)); see models.hpp for the convention.
class Schedule {
public:
    static constexpr int kDefaultSteps = 4000;
    static constexpr double kDefaultC0 = 1.0;
    static constexpr double kDefaultC1 = 2.0;

    static Schedule build(int n_steps = kDefaultSteps, double c0 = kDefaultC0, double c1 = kDefaultC1);

    int steps() const { return static_cast<int>(alpha_bar_.size()); }
    double c0() const { return c0_; }
    double c1() const { return c1_; }

    // 1-based accessors; throw IndexOutOfRange.
    double alpha_bar(int n) const;
    double beta(int n) const;
    // Forward-time noise level 1 - alpha_bar_n.
    double noise_level(int n) const;
    // Model time argument used for step-n scores (equals alpha_bar_n).
    double signal_level(int n) const { return alpha_bar(n); }

    // delta = 1 - alpha_bar_1: samplers stop at Y_1.
    double early_stopping() const { return 1.0 - alpha_bar_.front(); }

    // Step whose alpha_bar is closest to the given signal level.
    int nearest_step(double signal) const;

    std::span<const double> alpha_bars() const { return alpha_bar_; }
    std::span<const double> betas() const { return beta_; }

private:
    Schedule(double c0, double c1, std::vector<double> alpha_bar, std::vector<double> beta)
        : c0_(c0), c1_(c1), alpha_bar_(std::move(alpha_bar)), beta_(std::move(beta)) {}

    double c0_;
    double c1_;
    std::vector<double> alpha_bar_;  // index n-1
    std::vector<double> beta_;       // index n-1
};

}  // namespace guidelab
