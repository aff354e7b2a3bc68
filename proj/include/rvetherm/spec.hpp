#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"

namespace rvetherm {

/// Full parameter set of one RVE family.
///
/// Volume fractions are relative to the unit cell. `contrast` is the
/// inclusion/matrix conductivity ratio with the matrix normalized to 1.
struct MorphologySpec {
    int n_sp = 20;              // number of spheres
    int n_cyl = 20;             // number of cylinders
    double f_sp = 0.0;          // sphere volume fraction
    double f_cyl = 0.0;         // cylinder volume fraction
    double aspect_ratio = 5.0;  // cylinder length / diameter
    double wave = 0.0;          // relative corrugation amplitude
    int corrugation_periods = 3;
    double f_def = 0.0;         // target defect volume fraction
    int n_def = 30;             // number of defect pieces
    double contrast = 1.0;      // inclusion/matrix conductivity ratio
    int resolution = 192;       // voxels per edge
    std::uint64_t seed = 0;
    int runs = 10;
};

// Hard feasibility violations throw; soft documented-range violations are
// returned as warnings.
inline std::vector<std::string> validate(const MorphologySpec& s) {
    if (s.f_sp < 0.0 || s.f_cyl < 0.0)
        throw DomainError("volume fractions must be non-negative");
    if (s.f_sp + s.f_cyl > 0.30 + 1e-12) // tolerance: 0.15 + 0.15 must pass
        throw DomainError("f_sp + f_cyl > 0.30 exceeds the RSA packing limit");
    if (s.aspect_ratio < 1.0 || s.aspect_ratio > 16.0)
        throw DomainError("aspect_ratio outside [1, 16] is not RSA-feasible");
    if (s.resolution < 8 || s.resolution % 2 != 0)
        throw DomainError("resolution must be even and >= 8");
    if (s.contrast <= 0.0)
        throw DomainError("contrast must be positive");
    if (s.f_sp > 0.0 && s.n_sp < 1)
        throw DomainError("f_sp > 0 requires n_sp >= 1");
    if (s.f_cyl > 0.0 && s.n_cyl < 1)
        throw DomainError("f_cyl > 0 requires n_cyl >= 1");
    if (s.f_def < 0.0)
        throw DomainError("f_def must be non-negative");
    if (s.f_def > 0.0 && s.n_def < 1)
        throw DomainError("f_def > 0 requires n_def >= 1");
    if (s.wave < 0.0 || s.wave >= 1.0)
        throw DomainError("wave must lie in [0, 1)");
    if (s.corrugation_periods < 1)
        throw DomainError("corrugation_periods must be >= 1");
    if (s.runs < 1)
        throw DomainError("runs must be >= 1");

    std::vector<std::string> warnings;
    if (s.wave > 0.3)
        warnings.push_back("wave > 0.3 is outside the documented range [0, 0.3]");
    if (s.f_def > 0.27)
        warnings.push_back("f_def > 0.27 is outside the documented range [0, 0.27]");
    if (s.contrast < 0.0625 || s.contrast > 2048.0)
        warnings.push_back("contrast outside the documented range [2^-4, 2^11]");
    return warnings;
}

} // namespace rvetherm
