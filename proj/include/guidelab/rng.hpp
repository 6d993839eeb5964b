#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace guidelab {

// Philox4x32-10 counter-based block cipher (Salmon et al., SC'11).
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter apply(Counter ctr, Key key);
};

std::uint64_t splitmix64(std::uint64_t x);

// Counter-based stream keyed by (master seed, trial, arm). Every draw is a pure
// function of the key and a (domain, index) address, so results do not depend on
// the order in which trials or steps are evaluated.
class RandomStream {
public:
    enum Domain : std::uint32_t {
        kInit = 0,
        kStepNoise = 1,
        kSequential = 2,
        kBrownianPath = 3,
    };

    explicit RandomStream(std::uint64_t master_seed, std::uint64_t trial = 0, std::uint64_t arm = 0);

    void normals(std::uint32_t domain, std::uint64_t index, std::span<double> out) const;
    double normal(std::uint32_t domain, std::uint64_t index) const;
    // Uniform on the open interval (0, 1).
    double uniform(std::uint32_t domain, std::uint64_t index, std::uint32_t lane = 0) const;

    Philox4x32::Key key() const { return key_; }

private:
    Philox4x32::Key key_;
};

// Sequential draws layered on a RandomStream (domain kSequential unless given).
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t trial = 0, std::uint64_t arm = 0)
        : stream_(seed, trial, arm) {}
    explicit Rng(const RandomStream& stream, std::uint32_t domain = RandomStream::kSequential)
        : stream_(stream), domain_(domain) {}

    double uniform();
    double normal();
    void normals(std::span<double> out);

private:
    RandomStream stream_;
    std::uint32_t domain_ = RandomStream::kSequential;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace guidelab
