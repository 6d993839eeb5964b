#include <doctest.h>

#include <cmath>
#include <vector>

#include "guidelab/rng.hpp"
#include "guidelab/stats.hpp"

using namespace guidelab;

TEST_SUITE("rng") {

// Reference outputs of Philox4x32-10 published with the Random123 library.
TEST_CASE("philox known answers") {
    using C = Philox4x32::Counter;
    using K = Philox4x32::Key;
    CHECK(Philox4x32::apply(C{0, 0, 0, 0}, K{0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox4x32::apply(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}) ==
          C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox4x32::apply(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}) ==
          C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("draws are pure functions of key and address") {
    const RandomStream a(42, 7, 0), b(42, 7, 0);
    CHECK(a.normal(RandomStream::kStepNoise, 123) == b.normal(RandomStream::kStepNoise, 123));
    CHECK(a.uniform(RandomStream::kInit, 5, 2) == b.uniform(RandomStream::kInit, 5, 2));

    // Reading addresses in a different order changes nothing.
    const double late = a.normal(RandomStream::kStepNoise, 999);
    const double early = a.normal(RandomStream::kStepNoise, 1);
    CHECK(late == b.normal(RandomStream::kStepNoise, 999));
    CHECK(early == b.normal(RandomStream::kStepNoise, 1));
}

TEST_CASE("trial, arm, seed and domain all separate the streams") {
    const double base = RandomStream(1, 0, 0).normal(RandomStream::kStepNoise, 0);
    CHECK(RandomStream(1, 1, 0).normal(RandomStream::kStepNoise, 0) != base);
    CHECK(RandomStream(1, 0, 1).normal(RandomStream::kStepNoise, 0) != base);
    CHECK(RandomStream(2, 0, 0).normal(RandomStream::kStepNoise, 0) != base);
    CHECK(RandomStream(1, 0, 0).normal(RandomStream::kInit, 0) != base);
    CHECK(RandomStream(1, 0, 0).normal(RandomStream::kStepNoise, 1) != base);
}

TEST_CASE("uniforms lie in the open unit interval and normals have unit moments") {
    const RandomStream s(2024);
    std::vector<double> z(200000);
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double u = s.uniform(RandomStream::kSequential, i);
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        z[i] = s.normal(RandomStream::kStepNoise, i);
    }
    const auto m = estimate_mean(z);
    CHECK(std::abs(m.mean) < 0.01);
    CHECK(std::abs(m.variance - 1.0) < 0.015);

    // Fourth moment of a standard normal is 3.
    double m4 = 0.0;
    for (double v : z) m4 += v * v * v * v;
    CHECK(m4 / static_cast<double>(z.size()) == doctest::Approx(3.0).epsilon(0.03));
}

TEST_CASE("vector draws fill every lane and are reproducible") {
    const RandomStream s(9, 3, 1);
    std::vector<double> a(7), b(7);
    s.normals(RandomStream::kInit, 0, a);
    s.normals(RandomStream::kInit, 0, b);
    CHECK(a == b);
    for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i] != a[i - 1]);
}

TEST_CASE("sequential generator replays from the same stream") {
    Rng r1(5, 2, 0), r2(5, 2, 0);
    for (int i = 0; i < 100; ++i) {
        CHECK(r1.normal() == r2.normal());
        CHECK(r1.uniform() == r2.uniform());
    }
}

}
