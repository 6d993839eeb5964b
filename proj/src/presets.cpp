#include "guidelab/presets.hpp"

#include <cmath>
#include <numbers>

namespace guidelab::presets {

ClassPair two_class_mixture() {
    const double w3[] = {0.5, 0.25, 0.25};
    const double v3[] = {1.0, 1.0, 1.0};
    auto unconditional = IsotropicGmm::from_weights(w3, {{0.0}, {-1.0}, {1.0}}, v3);
    const double w2[] = {0.5, 0.5};
    const double v2[] = {1.0, 1.0};
    auto conditional = IsotropicGmm::from_weights(w2, {{-1.0}, {1.0}}, v2);
    return ClassPair(std::move(unconditional), std::move(conditional), 0.5, IsotropicGmm::standard_normal(1));
}

IsotropicGmm symmetric_bimodal(double variance) {
    const double w[] = {0.5, 0.5};
    const double v[] = {variance, variance};
    return IsotropicGmm::from_weights(w, {{-1.0}, {1.0}}, v);
}

RewardSpec well_at_two(double beta) { return RewardSpec{QuadraticWell{{2.0}, beta}}; }

PointCloud generate_swissroll(int n_points, std::uint64_t seed) {
    require(n_points >= 10, ErrorCode::InvalidArgument, "swiss roll needs at least 10 points");
    Rng rng(seed, 0, 0x5357u);
    std::vector<Vec> points;
    points.reserve(static_cast<std::size_t>(n_points));
    constexpr double lo = 1.5 * std::numbers::pi;
    constexpr double hi = 4.5 * std::numbers::pi;
    for (int i = 0; i < n_points; ++i) {
        const double theta = lo + (hi - lo) * rng.uniform();
        const double jx = 0.2 * rng.uniform() - 0.1;
        const double jy = 0.2 * rng.uniform() - 0.1;
        points.push_back({0.7 * theta * std::cos(theta) + jx, 0.7 * theta * std::sin(theta) + jy});
    }
    return PointCloud::uniform(points);
}

RewardSpec band_on_first_axis(double lo, double hi, double height, double beta) {
    return RewardSpec{IndicatorBand{0, lo, hi, height, beta}};
}

}  // namespace guidelab::presets
