#include "guidelab/rng.hpp"

#include <cmath>
#include <numbers>

namespace guidelab {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

// 53-bit uniform strictly inside (0, 1).
inline double to_open_unit(std::uint32_t a, std::uint32_t b) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(a >> 5) << 26) | (b >> 6);
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

inline void box_muller(double u1, double u2, double& z0, double& z1) {
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    z0 = r * std::cos(theta);
    z1 = r * std::sin(theta);
}

inline Philox4x32::Counter address(std::uint32_t domain, std::uint64_t index, std::uint32_t block) {
    return {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), block, domain};
}

}  // namespace

Philox4x32::Counter Philox4x32::apply(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

RandomStream::RandomStream(std::uint64_t master_seed, std::uint64_t trial, std::uint64_t arm) {
    std::uint64_t k = splitmix64(master_seed);
    k = splitmix64(k ^ trial);
    k = splitmix64(k ^ (arm * 0xD1B54A32D192ED03ull));
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

void RandomStream::normals(std::uint32_t domain, std::uint64_t index, std::span<double> out) const {
    std::size_t i = 0;
    for (std::uint32_t block = 0; i < out.size(); ++block) {
        const auto w = Philox4x32::apply(address(domain, index, block), key_);
        double z0, z1;
        box_muller(to_open_unit(w[0], w[1]), to_open_unit(w[2], w[3]), z0, z1);
        out[i++] = z0;
        if (i < out.size()) out[i++] = z1;
    }
}

double RandomStream::normal(std::uint32_t domain, std::uint64_t index) const {
    double z;
    normals(domain, index, std::span<double>(&z, 1));
    return z;
}

double RandomStream::uniform(std::uint32_t domain, std::uint64_t index, std::uint32_t lane) const {
    const auto w = Philox4x32::apply(address(domain, index, lane), key_);
    return to_open_unit(w[0], w[1]);
}

double Rng::uniform() { return stream_.uniform(domain_, counter_++); }

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double z[2];
    stream_.normals(domain_, counter_++, z);
    spare_ = z[1];
    has_spare_ = true;
    return z[0];
}

void Rng::normals(std::span<double> out) {
    for (double& z : out) z = normal();
}

}  // namespace guidelab
