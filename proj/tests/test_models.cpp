#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "guidelab/models.hpp"
#include "guidelab/presets.hpp"
#include "guidelab/stats.hpp"
#include "guidelab/theory.hpp"
#include "helpers.hpp"

using namespace guidelab;

namespace {

double log_phi(double x, double mean, double var) {
    return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * (x - mean) * (x - mean) / var;
}

double fd_derivative(const Target& m, double t, Vec x, std::size_t i, double h = 1e-5) {
    const double x_i = x[i];
    x[i] = x_i + h;
    const double up = noisy_logpdf(m, t, x);
    x[i] = x_i - h;
    const double down = noisy_logpdf(m, t, x);
    return (up - down) / (2.0 * h);
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("closed-form scores of the two-class mixture on a 50 x 50 grid") {
    const auto pair = presets::two_class_mixture();
    double worst_cond = 0.0, worst_uncond = 0.0, worst_prob = 0.0;
    for (int i = 0; i < 50; ++i) {
        const double t = (i + 1) / 50.0;
        const double r = std::sqrt(t);
        for (int j = 0; j < 50; ++j) {
            const double x = -4.0 + 8.0 * j / 49.0;
            const double xv[] = {x};
            const double e = std::exp(-2.0 * r * x);
            const double cond = -x + r * (1.0 - e) / (1.0 + e);
            const double uncond = -x + r * (1.0 - e) / (1.0 + e + 2.0 * std::exp(t / 2.0 - r * x));
            const double prob = (1.0 + e) / (1.0 + e + 2.0 * std::exp(t / 2.0 - r * x));
            worst_cond = std::max(worst_cond, std::abs(pair.conditional().noisy_score(t, xv)[0] - cond));
            worst_uncond = std::max(worst_uncond, std::abs(pair.unconditional().noisy_score(t, xv)[0] - uncond));
            worst_prob = std::max(worst_prob, std::abs(pair.classifier_prob(t, xv) - prob));
        }
    }
    CHECK(worst_cond <= 1e-12);
    CHECK(worst_uncond <= 1e-12);
    CHECK(worst_prob <= 1e-12);
}

TEST_CASE("scores agree with finite differences of the log-density") {
    CHECK(check_score_finite_differences(1000, 1) <= 1e-5);

    // Random 2-D mixture at t = 0.37.
    Rng rng(17);
    std::vector<Vec> means;
    std::vector<double> w, v;
    for (int k = 0; k < 3; ++k) {
        means.push_back({2.0 * rng.normal(), 2.0 * rng.normal()});
        w.push_back(0.2 + rng.uniform());
        v.push_back(0.5 + rng.uniform());
    }
    const Target gmm = IsotropicGmm::from_weights(w, means, v);
    for (int c = 0; c < 20; ++c) {
        const Vec x = {2.0 * rng.normal(), 2.0 * rng.normal()};
        const Vec s = noisy_score(gmm, 0.37, x);
        for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(s[i] - fd_derivative(gmm, 0.37, x, i)) <= 1e-6);
    }

    // Random 10-point cloud at t = 0.6.
    std::vector<Vec> pts;
    for (int k = 0; k < 10; ++k) pts.push_back({rng.normal(), rng.normal()});
    const Target cloud = PointCloud::uniform(pts);
    for (int c = 0; c < 20; ++c) {
        const Vec x = {1.5 * rng.normal(), 1.5 * rng.normal()};
        const Vec s = noisy_score(cloud, 0.6, x);
        for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(s[i] - fd_derivative(cloud, 0.6, x, i)) <= 1e-6);
    }
}

TEST_CASE("log-densities") {
    const auto std_normal = IsotropicGmm::standard_normal(1);
    for (double t : {0.0, 0.3, 0.9, 1.0})
        for (double x : {-2.0, 0.0, 1.3}) {
            const double xv[] = {x};
            CHECK(std_normal.noisy_logpdf(t, xv) == doctest::Approx(log_phi(x, 0.0, 1.0)).epsilon(1e-14));
        }

    const auto pair = presets::two_class_mixture();
    const double zero[] = {0.0};
    const double direct = std::log(0.5 * std::exp(log_phi(0, 0, 1)) + 0.25 * std::exp(log_phi(0, -1, 1)) +
                                   0.25 * std::exp(log_phi(0, 1, 1)));
    CHECK(pair.unconditional().noisy_logpdf(1.0, zero) == doctest::Approx(direct).epsilon(1e-14));

    // Component k maps to N(sqrt(t) mu_k, t var_k + 1 - t).
    const double w[] = {0.3, 0.7};
    const double var[] = {0.5, 2.0};
    const auto m = IsotropicGmm::from_weights(w, {{-1.0}, {2.0}}, var);
    const double t = 0.4, x = 0.7, r = std::sqrt(t);
    const double xv[] = {x};
    const double want = std::log(0.3 * std::exp(log_phi(x, -r, t * 0.5 + 1 - t)) +
                                 0.7 * std::exp(log_phi(x, 2 * r, t * 2.0 + 1 - t)));
    CHECK(m.noisy_logpdf(t, xv) == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("log-weights are normalized") {
    const double w[] = {2.0, 5.0, 3.0};
    const double v[] = {1.0, 1.0, 1.0};
    const auto m = IsotropicGmm::from_weights(w, {{0.0}, {1.0}, {2.0}}, v);
    std::vector<double> lw;
    for (const auto& c : m.components()) lw.push_back(c.log_weight);
    CHECK(std::abs(log_sum_exp(lw)) <= 1e-12);
    CHECK(std::exp(lw[1]) == doctest::Approx(0.5));

    const PointCloud cloud(1, {0.0, 1.0}, {3.0, 4.0});
    CHECK(std::abs(log_sum_exp(cloud.log_weights())) <= 1e-12);
}

TEST_CASE("symmetry of the two-class mixture") {
    const auto pair = presets::two_class_mixture();
    for (double t : {0.1, 0.5, 1.0}) {
        const double zero[] = {0.0};
        CHECK(pair.unconditional().noisy_score(t, zero)[0] == 0.0);
        for (double x : {0.3, 1.7, 4.0}) {
            const double p[] = {x}, n[] = {-x};
            CHECK(pair.unconditional().noisy_score(t, p)[0] == doctest::Approx(-pair.unconditional().noisy_score(t, n)[0]));
            CHECK(pair.conditional().noisy_score(t, p)[0] == doctest::Approx(-pair.conditional().noisy_score(t, n)[0]));
            CHECK(pair.classifier_prob(t, p) == doctest::Approx(pair.classifier_prob(t, n)).epsilon(1e-14));
        }
    }
}

TEST_CASE("posterior means") {
    // Single component: Gaussian conjugacy.
    const double w1[] = {1.0};
    const double v1[] = {2.5};
    const auto single = IsotropicGmm::from_weights(w1, {{0.8}}, v1);
    for (double t : {0.1, 0.5, 0.9})
        for (double x : {-1.0, 0.4}) {
            const double xv[] = {x};
            const double want = (0.8 * (1 - t) + std::sqrt(t) * 2.5 * x) / (t * 2.5 + 1 - t);
            CHECK(single.posterior_mean(t, xv)[0] == doctest::Approx(want).epsilon(1e-14));
        }

    // Symmetric bimodal with unit variances.
    const auto bimodal = presets::symmetric_bimodal(1.0);
    for (double t : {0.2, 0.5, 0.8})
        for (double x : {-1.5, 0.0, 0.9}) {
            const double xv[] = {x};
            const double e = std::exp(-2.0 * std::sqrt(t) * x);
            const double p = e / (1.0 + e);
            const double want = std::sqrt(t) * x + (1.0 - t) * (1.0 - 2.0 * p);
            CHECK(bimodal.posterior_mean(t, xv)[0] == doctest::Approx(want).epsilon(1e-13));
        }
}

TEST_CASE("posterior mean against a Monte-Carlo oracle") {
    const double w[] = {0.3, 0.5, 0.2};
    const double v[] = {0.6, 1.0, 1.5};
    const auto m = IsotropicGmm::from_weights(w, {{-2.0}, {0.5}, {2.5}}, v);
    const double t = 0.5, x = 0.8;
    const std::size_t n = 1000000;
    Rng rng(99);
    std::vector<double> wts(n), wx(n);
    double x0[1];
    for (std::size_t i = 0; i < n; ++i) {
        m.sample(1.0, rng, x0);
        const double lw = -0.5 * (x - std::sqrt(t) * x0[0]) * (x - std::sqrt(t) * x0[0]) / (1 - t);
        wts[i] = std::exp(lw);
        wx[i] = wts[i] * x0[0];
    }
    // Self-normalized ratio with a delta-method standard error.
    const auto a = estimate_mean(wx), b = estimate_mean(wts);
    const double ratio = a.mean / b.mean;
    std::vector<double> infl(n);
    for (std::size_t i = 0; i < n; ++i) infl[i] = (wx[i] - ratio * wts[i]) / b.mean;
    const double se = estimate_mean(infl).std_error;
    const double xv[] = {x};
    CHECK(std::abs(m.posterior_mean(t, xv)[0] - ratio) <= 3.0 * se);
}

TEST_CASE("score equals the Tweedie form") {
    for (double var : {0.5, 1.0, 2.0}) {
        const auto m = presets::symmetric_bimodal(var);
        for (double t : {0.05, 0.3, 0.7, 0.95})
            for (double x = -4.0; x <= 4.0; x += 0.5) {
                const double xv[] = {x};
                const double want = (std::sqrt(t) * m.posterior_mean(t, xv)[0] - x) / (1 - t);
                REQUIRE(m.noisy_score(t, xv)[0] == doctest::Approx(want).epsilon(1e-12));
            }
    }
}

TEST_CASE("classifier probabilities") {
    const auto pair = presets::two_class_mixture();
    const double zero[] = {0.0}, far[] = {50.0};
    CHECK(pair.classifier_prob(1.0, zero) == doctest::Approx(1.0 / (1.0 + std::sqrt(std::exp(1.0)))).epsilon(1e-14));
    CHECK(pair.classifier_prob(1.0, zero) == doctest::Approx(0.377541).epsilon(1e-6));
    CHECK(pair.classifier_prob(0.9, far) == doctest::Approx(1.0).epsilon(1e-12));

    const auto g = presets::symmetric_bimodal(1.0);
    const ClassPair same(g, g, 0.5);
    for (double t : {0.0, 0.4, 1.0}) {
        const double x[] = {0.7};
        CHECK(same.classifier_prob(t, x) == doctest::Approx(0.5).epsilon(1e-14));
    }
}

TEST_CASE("class pair validation") {
    const auto g = presets::symmetric_bimodal(1.0);
    const auto bad = testing::name(ErrorCode::InvalidArgument);
    CHECK(testing::thrown_code([&] { ClassPair(g, g, 0.0); }) == bad);
    CHECK(testing::thrown_code([&] { ClassPair(g, g, 1.0); }) == bad);
    CHECK(testing::thrown_code([&] { ClassPair(g, IsotropicGmm::standard_normal(2), 0.5); }) == bad);
    // The complement must close the mixture: here p != 0.5 g + 0.5 N(0, 1).
    CHECK(testing::thrown_code([&] { ClassPair(g, g, 0.5, IsotropicGmm::standard_normal(1)); }) == bad);
    CHECK(testing::thrown_code([] { presets::two_class_mixture(); }) == "none");
}

TEST_CASE("point cloud scores and densities") {
    const Target one = PointCloud::uniform({{1.5, -0.5}});
    for (double t : {0.2, 0.7}) {
        const Vec x = {0.3, 0.9};
        const Vec s = noisy_score(one, t, x);
        CHECK(s[0] == doctest::Approx((std::sqrt(t) * 1.5 - 0.3) / (1 - t)).epsilon(1e-13));
        CHECK(s[1] == doctest::Approx((std::sqrt(t) * -0.5 - 0.9) / (1 - t)).epsilon(1e-13));
    }

    const Target pm = PointCloud::uniform({{2.0}, {-2.0}});
    const Vec zero = {0.0};
    CHECK(noisy_score(pm, 0.4, zero)[0] == doctest::Approx(0.0));

    const Target origin = PointCloud::uniform({{0.0}});
    const Vec x = {0.6};
    CHECK(noisy_logpdf(origin, 0.3, x) == doctest::Approx(log_phi(0.6, 0.0, 0.7)).epsilon(1e-14));

    const Target two = PointCloud::uniform({{1.0}, {-1.0}});
    const double r = std::sqrt(0.5);
    const double want = std::log(0.5 * std::exp(log_phi(0, r, 0.5)) + 0.5 * std::exp(log_phi(0, -r, 0.5)));
    CHECK(noisy_logpdf(two, 0.5, zero) == doctest::Approx(want).epsilon(1e-14));

    // Near the clean end the density concentrates on the atoms.
    const PointCloud weighted(2, {0.0, 0.0, 5.0, 5.0}, {std::log(0.25), std::log(0.75)});
    const double t = 1.0 - 1e-6;
    const Vec at = {5.0 * std::sqrt(t), 5.0 * std::sqrt(t)};
    const double asym = -std::log(2.0 * std::numbers::pi * (1.0 - t)) + std::log(0.75);
    CHECK(weighted.noisy_logpdf(t, at) == doctest::Approx(asym).epsilon(1e-12));
}

TEST_CASE("point clouds reject the degenerate ends") {
    const auto cloud = PointCloud::uniform({{0.0}, {1.0}});
    const double x[] = {0.2};
    const auto code = testing::name(ErrorCode::DegenerateTime);
    CHECK(testing::thrown_code([&] { cloud.noisy_score(1.0, x); }) == code);
    CHECK(testing::thrown_code([&] { cloud.noisy_logpdf(0.0, x); }) == code);
    CHECK(testing::thrown_code([&] { presets::symmetric_bimodal(1.0).noisy_score(1.5, x); }) == code);
}

TEST_CASE("sampling is exact at the endpoints") {
    Rng rng(4);
    const auto cloud = PointCloud::uniform({{1.0}, {-1.0}});
    int plus = 0;
    double y[1];
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        cloud.sample(1.0, rng, y);
        REQUIRE((y[0] == 1.0 || y[0] == -1.0));
        plus += y[0] > 0;
    }
    CHECK(std::abs(plus / double(n) - 0.5) < 0.01);
}

TEST_CASE("swiss roll generator") {
    const auto cloud = presets::generate_swissroll(1000, 2024);
    CHECK(cloud.size() == 1000);
    CHECK(cloud.dim() == 2);
    double lo0 = 1e9, hi0 = -1e9, lo1 = 1e9, hi1 = -1e9;
    int inside = 0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto p = cloud.point(i);
        lo0 = std::min(lo0, p[0]);
        hi0 = std::max(hi0, p[0]);
        lo1 = std::min(lo1, p[1]);
        hi1 = std::max(hi1, p[1]);
        inside += p[0] >= -5.0 && p[0] <= 6.0;
        CHECK(cloud.log_weight(i) == doctest::Approx(std::log(1e-3)).epsilon(1e-14));
    }
    CHECK(lo0 > -10.5);
    CHECK(hi0 < 12.5);
    CHECK(lo1 > -8.5);
    CHECK(hi1 < 14.5);
    // Regression value of the shipped generator and seed.
    CHECK(inside == 677);

    const auto small = presets::generate_swissroll(10, 1);
    CHECK(small.size() == 10);
    for (std::size_t i = 0; i < 10; ++i)
        for (std::size_t j = i + 1; j < 10; ++j) CHECK(squared_distance(small.point(i), small.point(j)) > 0.0);
    const auto other = presets::generate_swissroll(10, 2);
    CHECK(squared_distance(small.point(0), other.point(0)) > 0.0);
    CHECK(presets::generate_swissroll(1000, 2024).point(17)[0] == cloud.point(17)[0]);
}

}
