#pragma once

#include <cstdint>
#include <random>

#include "vec3.hpp"

namespace rvetherm {

// splitmix64 finalizer; used to decorrelate per-run seed streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Thin wrapper around mt19937_64 with a fixed bits->double mapping, so that
// streams are reproducible byte-for-byte across standard library versions
// (uniform_real_distribution is implementation-defined).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t next_u64() { return engine_(); }

    // index in [0, n)
    std::size_t index(std::size_t n) {
        // modulo bias is negligible for n << 2^64 but reject anyway
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return static_cast<std::size_t>(v % n);
    }

    Vec3 point_in_cell() { return {uniform(), uniform(), uniform()}; }

    // uniform direction on the unit sphere
    Vec3 unit_vector() {
        const double z = uniform(-1.0, 1.0);
        const double phi = uniform(0.0, 6.283185307179586476925286766559);
        const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        return {s * std::cos(phi), s * std::sin(phi), z};
    }

  private:
    std::mt19937_64 engine_;
};

} // namespace rvetherm
