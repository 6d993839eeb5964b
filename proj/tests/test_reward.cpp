#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <vector>

#include "guidelab/presets.hpp"
#include "guidelab/reward.hpp"
#include "guidelab/stats.hpp"
#include "helpers.hpp"

using namespace guidelab;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class F>
double integrate(F f) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -kInf, kInf, 15, 1e-14);
}

double density(const IsotropicGmm& m, double t, double x) {
    const double xv[] = {x};
    return std::exp(m.noisy_logpdf(t, xv));
}

}  // namespace

TEST_SUITE("reward") {

TEST_CASE("reweighting the bimodal mixture by the well at 2") {
    const auto rw = reweight_gmm(presets::symmetric_bimodal(1.0), QuadraticWell{{2.0}, 1.0});
    const auto& c = rw.components();
    REQUIRE(c.size() == 2);
    CHECK(c[0].variance == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(c[1].variance == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(c[0].mean[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(c[1].mean[0] == doctest::Approx(5.0 / 3.0).epsilon(1e-14));
    CHECK(c[0].log_weight - c[1].log_weight == doctest::Approx(-8.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("general closed-form parameters of the reweighted mixture") {
    for (double var : {0.5, 1.0, 2.0})
        for (double beta : {0.25, 1.0, 3.0}) {
            const auto rw = reweight_gmm(presets::symmetric_bimodal(var), QuadraticWell{{2.0}, beta});
            const double d = 1.0 + 2.0 * beta * var;
            const auto& c = rw.components();
            CHECK(c[0].variance == doctest::Approx(var / d).epsilon(1e-14));
            CHECK(c[0].mean[0] == doctest::Approx((4.0 * beta * var - 1.0) / d).epsilon(1e-13));
            CHECK(c[1].mean[0] == doctest::Approx((4.0 * beta * var + 1.0) / d).epsilon(1e-13));
            CHECK(c[0].log_weight - c[1].log_weight == doctest::Approx(-8.0 * beta / d).epsilon(1e-13));
        }
}

TEST_CASE("a vanishing well leaves the mixture unchanged") {
    const double w[] = {0.2, 0.8};
    const double v[] = {0.7, 1.9};
    const auto m = IsotropicGmm::from_weights(w, {{-1.0, 2.0}, {3.0, 0.5}}, v);
    const auto rw = reweight_gmm(m, QuadraticWell{{1.0, 1.0}, 1e-10});
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(std::abs(rw.components()[k].variance - m.components()[k].variance) <= 1e-8);
        CHECK(std::abs(rw.components()[k].log_weight - m.components()[k].log_weight) <= 1e-8);
        for (std::size_t i = 0; i < 2; ++i)
            CHECK(std::abs(rw.components()[k].mean[i] - m.components()[k].mean[i]) <= 1e-8);
    }
}

TEST_CASE("reweighted density is r p / Z with Z by quadrature") {
    const double w[] = {0.3, 0.45, 0.25};
    const double v[] = {0.4, 1.0, 2.2};
    const auto m = IsotropicGmm::from_weights(w, {{-2.0}, {0.3}, {1.8}}, v);
    const QuadraticWell well{{1.0}, 0.5};
    const auto rw = reweight_gmm(m, well);
    const double z = integrate([&](double x) { return std::exp(-0.5 * (x - 1.0) * (x - 1.0)) * density(m, 1.0, x); });
    for (double x = -5.0; x <= 5.0; x += 0.25) {
        const double want = std::exp(-0.5 * (x - 1.0) * (x - 1.0)) * density(m, 1.0, x) / z;
        REQUIRE(density(rw, 1.0, x) == doctest::Approx(want).epsilon(1e-10));
    }
    const RewardSpec spec{well};
    CHECK(mean_reward(m, spec) == doctest::Approx(z).epsilon(1e-12));
}

TEST_CASE("mean rewards") {
    for (double beta : {0.1, 1.0, 4.0}) {
        const RewardSpec r{QuadraticWell{{0.0}, beta}};
        CHECK(mean_reward(IsotropicGmm::standard_normal(1), r) == doctest::Approx(1.0 / std::sqrt(1.0 + 2.0 * beta)).epsilon(1e-14));
    }

    const RewardSpec band{IndicatorBand{0, 0.0, 1.0, 2.0, 1.0}};
    const auto two = PointCloud::uniform({{0.5}, {3.0}});
    CHECK(mean_reward(two, band) == doctest::Approx((std::exp(2.0) + 1.0) / 2.0).epsilon(1e-14));

    const auto bimodal = presets::symmetric_bimodal(1.0);
    const double z = integrate([&](double x) { return std::exp(-(x - 2.0) * (x - 2.0)) * density(bimodal, 1.0, x); });
    CHECK(std::abs(mean_reward(bimodal, presets::well_at_two(1.0)) - z) <= 1e-8);

    CHECK(testing::thrown_code([&] { mean_reward(bimodal, band); }) == testing::name(ErrorCode::Unsupported));
}

TEST_CASE("reward values") {
    const auto well = presets::well_at_two(1.0);
    const double two[] = {2.0}, zero[] = {0.0};
    CHECK(reward_value(well, two) == 1.0);
    CHECK(reward_value(well, zero) == doctest::Approx(std::exp(-4.0)).epsilon(1e-15));

    const auto pair = presets::two_class_mixture();
    const RewardSpec cost{ReciprocalClassifierCost{pair}, RewardSign::Cost};
    CHECK(reward_value(cost, zero) == doctest::Approx(1.0 / pair.classifier_prob(1.0, zero)).epsilon(1e-14));
    // E[1 / p(c | X_0)] under the conditional law is 1 / p(c).
    const double e = integrate([&](double x) {
        const double xv[] = {x};
        return density(pair.conditional(), 1.0, x) * reward_value(cost, xv);
    });
    CHECK(e == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(mean_reward(pair.conditional(), cost) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("reweighting point clouds") {
    const auto cloud = PointCloud::uniform({{-2.0}, {0.2}, {0.8}, {3.0}});
    const RewardSpec band{IndicatorBand{0, 0.0, 1.0, 10.0, 1.0}};
    const auto rw = reweight_pointcloud(cloud, band);
    const double e10 = std::exp(10.0);
    CHECK(std::exp(rw.log_weight(1)) == doctest::Approx(e10 / (2.0 * e10 + 2.0)).epsilon(1e-14));
    CHECK(std::exp(rw.log_weight(2)) == doctest::Approx(e10 / (2.0 * e10 + 2.0)).epsilon(1e-14));
    CHECK(std::exp(rw.log_weight(0)) == doctest::Approx(1.0 / (2.0 * e10 + 2.0)).epsilon(1e-12));

    const auto same = reweight_pointcloud(cloud, RewardSpec{IndicatorBand{0, 0.0, 1.0, 10.0, 0.0}});
    for (std::size_t i = 0; i < 4; ++i) CHECK(same.log_weight(i) == doctest::Approx(cloud.log_weight(i)).epsilon(1e-15));

    const auto roll = presets::generate_swissroll(1000, 2024);
    const auto tilted = reweight_pointcloud(roll, presets::band_on_first_axis());
    double inside = 0.0;
    int atoms = 0;
    for (std::size_t i = 0; i < roll.size(); ++i)
        if (roll.point(i)[0] >= -5.0 && roll.point(i)[0] <= 6.0) {
            inside += std::exp(tilted.log_weight(i));
            ++atoms;
        }
    REQUIRE(atoms >= 300);
    CHECK(inside >= 0.999);
}

TEST_CASE("reward posterior identities") {
    const auto bimodal = presets::symmetric_bimodal(1.0);
    const auto rm = RewardedModel::make(bimodal, presets::well_at_two(1.0));

    // Approaches r(y) at the clean end.
    for (double y : {-1.0, 0.5, 2.0, 3.0}) {
        const double yv[] = {y};
        CHECK(rm.posterior(1.0 - 1e-6, yv) == doctest::Approx(reward_value(presets::well_at_two(1.0), yv)).epsilon(1e-3));
    }

    // A flat reward gives the mean everywhere.
    const auto flat = RewardedModel::make(bimodal, RewardSpec{QuadraticWell{{2.0}, 0.0}});
    for (double y : {-2.0, 0.0, 1.0}) {
        const double yv[] = {y};
        CHECK(flat.posterior(0.4, yv) == doctest::Approx(flat.mean_reward).epsilon(1e-14));
    }

    // Density-ratio identity on a grid, mixtures and clouds.
    for (double t : {0.1, 0.5, 0.9})
        for (double y = -3.0; y <= 3.0; y += 0.5) {
            const double yv[] = {y};
            const double lhs = noisy_logpdf(rm.reweighted, t, yv) - noisy_logpdf(rm.original, t, yv) -
                               std::log(rm.posterior(t, yv)) + std::log(rm.mean_reward);
            REQUIRE(std::abs(lhs) <= 1e-10);
        }
    const auto roll = RewardedModel::make(presets::generate_swissroll(200, 3), presets::band_on_first_axis());
    for (double t : {0.2, 0.6})
        for (double a = -8.0; a <= 8.0; a += 4.0) {
            const Vec yv = {a, 0.5 * a};
            const double lhs = noisy_logpdf(roll.reweighted, t, yv) - noisy_logpdf(roll.original, t, yv) -
                               std::log(roll.posterior(t, yv)) + std::log(roll.mean_reward);
            REQUIRE(std::abs(lhs) <= 1e-8);
        }
}

TEST_CASE("reward posterior against self-normalized importance sampling") {
    const auto bimodal = presets::symmetric_bimodal(1.0);
    const auto spec = presets::well_at_two(1.0);
    const auto rm = RewardedModel::make(bimodal, spec);
    const double t = 0.5, y = 0.0;
    const std::size_t n = 1000000;
    std::vector<double> wts(n), wr(n);
    Rng rng(31);
    double x0[1];
    for (std::size_t i = 0; i < n; ++i) {
        bimodal.sample(1.0, rng, x0);
        wts[i] = std::exp(-0.5 * (y - std::sqrt(t) * x0[0]) * (y - std::sqrt(t) * x0[0]) / (1 - t));
        wr[i] = wts[i] * reward_value(spec, x0);
    }
    const auto a = estimate_mean(wr), b = estimate_mean(wts);
    const double ratio = a.mean / b.mean;
    std::vector<double> infl(n);
    for (std::size_t i = 0; i < n; ++i) infl[i] = (wr[i] - ratio * wts[i]) / b.mean;
    const double yv[] = {y};
    CHECK(std::abs(rm.posterior(t, yv) - ratio) <= 3.0 * estimate_mean(infl).std_error);
}

TEST_CASE("rescaling the reward leaves the guidance direction unchanged") {
    const auto bimodal = presets::symmetric_bimodal(1.0);
    RewardSpec r = presets::well_at_two(0.7);
    RewardSpec scaled = r;
    scaled.log_scale = std::log(13.0);
    const auto a = std::get<IsotropicGmm>(reweight(bimodal, r));
    const auto b = std::get<IsotropicGmm>(reweight(bimodal, scaled));
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(a.components()[k].log_weight == b.components()[k].log_weight);
        CHECK(a.components()[k].mean == b.components()[k].mean);
        CHECK(a.components()[k].variance == b.components()[k].variance);
    }
    const double x[] = {0.4};
    CHECK(reward_value(scaled, x) == doctest::Approx(13.0 * reward_value(r, x)).epsilon(1e-14));
    CHECK(mean_reward(bimodal, scaled) == doctest::Approx(13.0 * mean_reward(bimodal, r)).epsilon(1e-14));
}

TEST_CASE("cost reweighting the conditional law gives back the unconditional law") {
    const auto pair = presets::two_class_mixture();
    const auto back = cost_reweighted(pair);
    const auto via = std::get<IsotropicGmm>(reweight(pair.conditional(), RewardSpec{ReciprocalClassifierCost{pair}, RewardSign::Cost}));
    for (double t : {0.0, 0.3, 0.8, 1.0})
        for (double x = -4.0; x <= 4.0; x += 0.5) {
            const double xv[] = {x};
            const double ref = pair.unconditional().noisy_logpdf(t, xv);
            REQUIRE(std::abs(back.noisy_logpdf(t, xv) - ref) <= 1e-8);
            REQUIRE(std::abs(via.noisy_logpdf(t, xv) - ref) <= 1e-8);
            // Ratio form: p_c(x) * (1 / p(c | x)) * p(c) = p(x).
            const double ratio = pair.conditional().noisy_logpdf(t, xv) - pair.log_classifier_prob(t, xv) +
                                 std::log(pair.prior());
            REQUIRE(std::abs(ratio - ref) <= 1e-8);
        }
}

TEST_CASE("specification checks") {
    const auto bad = testing::name(ErrorCode::InvalidArgument);
    CHECK(testing::thrown_code([] { RewardSpec{QuadraticWell{{0.0}, -1.0}}.validate(1); }) == bad);
    CHECK(testing::thrown_code([] { RewardSpec{QuadraticWell{{0.0, 1.0}, 1.0}}.validate(1); }) == bad);
    CHECK(testing::thrown_code([] { RewardSpec{IndicatorBand{0, 1.0, 1.0, 1.0, 1.0}}.validate(1); }) == bad);
    CHECK(testing::thrown_code([] { RewardSpec{IndicatorBand{0, 0.0, 1.0, 0.0, 1.0}}.validate(1); }) == bad);
    CHECK(testing::thrown_code([] { RewardSpec{IndicatorBand{2, 0.0, 1.0, 1.0, 1.0}}.validate(2); }) == bad);
    CHECK(testing::thrown_code([] { presets::well_at_two(1.0).validate(1); }) == "none");
    CHECK(testing::thrown_code([] {
              reweight(presets::symmetric_bimodal(1.0), presets::band_on_first_axis());
          }) == testing::name(ErrorCode::Unsupported));
}

}
