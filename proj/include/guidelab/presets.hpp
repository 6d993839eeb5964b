#pragma once

#include <cstdint>

#include "guidelab/models.hpp"
#include "guidelab/reward.hpp"

namespace guidelab::presets {

// Two-class 1-D mixture: class 0 ~ N(0,1), class 1 ~ 1/2 N(-1,1) + 1/2 N(1,1),
// equal priors; the pair targets class 1.
ClassPair two_class_mixture();

// 1/2 N(-1, variance) + 1/2 N(1, variance).
IsotropicGmm symmetric_bimodal(double variance = 1.0);

// r_ext(x) = -(x - 2)^2 in one dimension.
RewardSpec well_at_two(double beta = 1.0);

// 2-D spiral: theta ~ U[1.5 pi, 4.5 pi], point = 0.7 (theta cos theta, theta sin theta)
// plus U(-0.1, 0.1) jitter per axis; uniform weights.
PointCloud generate_swissroll(int n_points, std::uint64_t seed);

// r_ext(x) = height * 1(lo <= x_0 <= hi).
RewardSpec band_on_first_axis(double lo = -5.0, double hi = 6.0, double height = 10.0, double beta = 1.0);

}  // namespace guidelab::presets
