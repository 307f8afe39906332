#ifndef GFRS_RNG_HPP
#define GFRS_RNG_HPP

#include <cstdint>

namespace gfrs {

/// Counter-based random generator (SplitMix64 output stream).
///
/// The i-th output of a stream with key `k` is mix64(k + (i+1)*GAMMA),
/// where mix64 is the SplitMix64 finalizer. Streams are splittable:
/// `substream(tag)` derives an independent key, so per-point noise can
/// be generated in any order and still be reproducible.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    /// Independent stream derived from (key, tag).
    CounterRng substream(std::uint64_t tag) const;

    std::uint64_t next_u64();

    /// Uniform in [0, 1).
    double uniform();
    /// Uniform in [lo, hi).
    double uniform(double lo, double hi);
    /// Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n);
    /// Standard normal via Box-Muller (consumes two uniforms per pair).
    double gaussian();
    /// Zero-mean Laplace with scale b (inverse-CDF method).
    double laplace(double b);

    static std::uint64_t mix64(std::uint64_t z);

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace gfrs

#endif
