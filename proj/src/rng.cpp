#include "gfrs/rng.hpp"

#include <cmath>

namespace gfrs {

namespace {
constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t CounterRng::mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

CounterRng CounterRng::substream(std::uint64_t tag) const {
    return CounterRng(mix64(key_ ^ mix64(tag + kGamma)));
}

std::uint64_t CounterRng::next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * kGamma);
}

double CounterRng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

std::uint64_t CounterRng::uniform_index(std::uint64_t n) {
    // Modulo bias is negligible for n << 2^64.
    return next_u64() % n;
}

double CounterRng::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    spare_ = mag * std::sin(2.0 * M_PI * u2);
    has_spare_ = true;
    return mag * std::cos(2.0 * M_PI * u2);
}

double CounterRng::laplace(double b) {
    const double u = uniform() - 0.5;
    const double a = std::abs(u);
    const double mag = -b * std::log(1.0 - 2.0 * a);
    return u < 0.0 ? -mag : mag;
}

} // namespace gfrs
