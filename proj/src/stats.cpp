#include "guidelab/stats.hpp"

#include <cmath>

#include "guidelab/common.hpp"

namespace guidelab {

void CompensatedSum::add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
        comp_ += (sum_ - t) + x;
    else
        comp_ += (x - t) + sum_;
    sum_ = t;
}

MeanEstimate estimate_mean(std::span<const double> v) {
    MeanEstimate e;
    e.n = v.size();
    if (v.empty()) return e;
    CompensatedSum s;
    for (double x : v) s.add(x);
    e.mean = s.value() / static_cast<double>(v.size());
    if (v.size() < 2) return e;
    CompensatedSum sq;
    for (double x : v) sq.add((x - e.mean) * (x - e.mean));
    e.variance = sq.value() / static_cast<double>(v.size() - 1);
    e.std_error = std::sqrt(e.variance / static_cast<double>(v.size()));
    return e;
}

double sample_covariance(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), ErrorCode::InvalidArgument, "covariance needs equally long samples");
    if (a.size() < 2) return 0.0;
    const double ma = estimate_mean(a).mean;
    const double mb = estimate_mean(b).mean;
    CompensatedSum s;
    for (std::size_t i = 0; i < a.size(); ++i) s.add((a[i] - ma) * (b[i] - mb));
    return s.value() / static_cast<double>(a.size() - 1);
}

}  // namespace guidelab
