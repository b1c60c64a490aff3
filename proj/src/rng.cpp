#include "efi/rng.hpp"

#include <cmath>
#include <numbers>

namespace efi {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;  // golden ratio
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;  // sqrt(3) - 1

inline void mulhilo(std::uint32_t a, std::uint32_t b,
                    std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace

void philox4x32_10(const std::uint32_t ctr[4], const std::uint32_t key[2],
                   std::uint32_t out[4]) {
    std::uint32_t c0 = ctr[0], c1 = ctr[1], c2 = ctr[2], c3 = ctr[3];
    std::uint32_t k0 = key[0], k1 = key[1];
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, c0, hi0, lo0);
        mulhilo(kPhiloxM1, c2, hi1, lo1);
        const std::uint32_t n0 = hi1 ^ c1 ^ k0;
        const std::uint32_t n1 = lo1;
        const std::uint32_t n2 = hi0 ^ c3 ^ k1;
        const std::uint32_t n3 = lo0;
        c0 = n0; c1 = n1; c2 = n2; c3 = n3;
        k0 += kPhiloxW0;
        k1 += kPhiloxW1;
    }
    out[0] = c0; out[1] = c1; out[2] = c2; out[3] = c3;
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : stream_(stream) {
    key_[0] = static_cast<std::uint32_t>(seed);
    key_[1] = static_cast<std::uint32_t>(seed >> 32);
}

CounterRng CounterRng::stream(std::uint64_t substream) const {
    CounterRng r;
    r.key_[0] = key_[0];
    r.key_[1] = key_[1];
    r.stream_ = substream;
    return r;
}

std::uint64_t CounterRng::derive_seed(std::uint64_t seed, std::uint64_t index) {
    const std::uint32_t key[2] = {static_cast<std::uint32_t>(seed),
                                  static_cast<std::uint32_t>(seed >> 32)};
    const std::uint32_t ctr[4] = {static_cast<std::uint32_t>(index),
                                  static_cast<std::uint32_t>(index >> 32),
                                  0x5EED5EEDu, 0xDECAFBADu};
    std::uint32_t out[4];
    philox4x32_10(ctr, key, out);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

void CounterRng::refill() {
    const std::uint32_t ctr[4] = {static_cast<std::uint32_t>(pos_),
                                  static_cast<std::uint32_t>(pos_ >> 32),
                                  static_cast<std::uint32_t>(stream_),
                                  static_cast<std::uint32_t>(stream_ >> 32)};
    philox4x32_10(ctr, key_, buf_);
    ++pos_;
    buf_left_ = 4;
}

std::uint32_t CounterRng::next_u32() {
    if (buf_left_ == 0) refill();
    return buf_[4 - buf_left_--];
}

std::uint64_t CounterRng::next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
}

double CounterRng::uniform01() {
    // 53 uniformly distributed bits in [0, 1).
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::uniform_open() {
    // (0, 1): shift the 53-bit lattice by half a step.
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    cached_normal_ = r * std::sin(t);
    has_cached_normal_ = true;
    return r * std::cos(t);
}

double CounterRng::logistic() {
    const double u = uniform_open();
    return std::log(u / (1.0 - u));
}

double CounterRng::gamma(double shape) {
    // Marsaglia & Tsang (2000).  For shape < 1 use the boosting identity
    // Gamma(a) = Gamma(a+1) * U^(1/a).
    if (shape < 1.0) {
        const double u = uniform_open();
        return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform_open();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double CounterRng::chi_square(double df) { return 2.0 * gamma(0.5 * df); }

double CounterRng::student_t(double df) {
    const double z = normal();
    const double c = chi_square(df);
    return z / std::sqrt(c / df);
}

std::uint64_t CounterRng::uniform_below(std::uint64_t n) {
    // Rejection from the top of the 64-bit range keeps the draw unbiased.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    for (;;) {
        const std::uint64_t v = next_u64();
        if (v < limit) return v % n;
    }
}

}  // namespace efi
