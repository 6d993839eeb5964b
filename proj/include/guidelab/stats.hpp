#pragma once

#include <cstddef>
#include <span>

namespace guidelab {

// Neumaier compensated sum.
class CompensatedSum {
public:
    void add(double x);
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct MeanEstimate {
    double mean = 0.0;
    double std_error = 0.0;  // sample sd / sqrt(n); 0 when n < 2
    double variance = 0.0;
    std::size_t n = 0;
};

// Two-pass mean and variance, summed in index order so the result only depends
// on the values, never on how they were produced.
MeanEstimate estimate_mean(std::span<const double> v);

// Plug-in covariance of two equally long samples.
double sample_covariance(std::span<const double> a, std::span<const double> b);

}  // namespace guidelab
