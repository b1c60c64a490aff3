#ifndef EFI_RNG_HPP
#define EFI_RNG_HPP

#include <cstdint>

namespace efi {

// Counter-based random number generation built on the Philox4x32-10 block
// cipher (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
//
// A generator is identified by (seed, stream).  The seed selects the cipher
// key, the stream occupies the upper half of the 128-bit counter, and the
// draw position occupies the lower half.  Streams derived from the same seed
// are therefore statistically independent and can be consumed in any order,
// which is what makes the chains reproducible: the latent-error noise, the
// minibatch selection, and the data simulation each own a stream, so turning
// one consumer on or off never perturbs the others.

// One Philox4x32-10 invocation: 4 output words from a 128-bit counter and a
// 64-bit key.  Exposed separately so known-answer tests can pin the cipher.
void philox4x32_10(const std::uint32_t ctr[4], const std::uint32_t key[2],
                   std::uint32_t out[4]);

class CounterRng {
public:
    CounterRng() = default;
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

    // Independent generator with the same seed but a different stream id.
    CounterRng stream(std::uint64_t substream) const;

    // Stateless hash of (seed, index) to a fresh 64-bit seed; used to give
    // every replicate of a simulation study its own seed.
    static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    double uniform01();      // [0, 1), 53-bit resolution
    double uniform_open();   // (0, 1)
    double normal();         // N(0,1) via Box-Muller; second deviate cached
    double logistic();       // Logistic(0,1) via inverse CDF
    double gamma(double shape);      // Gamma(shape, 1), Marsaglia-Tsang
    double chi_square(double df);    // = 2 * Gamma(df/2, 1)
    double student_t(double df);
    std::uint64_t uniform_below(std::uint64_t n);  // [0, n), unbiased

private:
    std::uint32_t key_[2] = {0, 0};
    std::uint64_t stream_ = 0;
    std::uint64_t pos_ = 0;
    std::uint32_t buf_[4] = {0, 0, 0, 0};
    int buf_left_ = 0;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;

    void refill();
};

}  // namespace efi

#endif  // EFI_RNG_HPP
