#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "geometry.hpp"

namespace rvetherm {

/// Discretized RVE: N^3 voxel labels, 0 = matrix, 1 = inclusion.
/// x-fastest storage: label(i,j,k) = labels[i + N*(j + N*k)].
struct PhaseGrid {
    int resolution = 0;
    std::vector<std::uint8_t> labels;
    double defect_fraction_measured = 0.0;

    std::size_t size() const { return labels.size(); }
    std::uint8_t& at(int i, int j, int k) {
        return labels[std::size_t(i) + std::size_t(resolution) * (std::size_t(j) + std::size_t(resolution) * k)];
    }
    std::uint8_t at(int i, int j, int k) const {
        return labels[std::size_t(i) + std::size_t(resolution) * (std::size_t(j) + std::size_t(resolution) * k)];
    }

    double inclusion_fraction() const {
        std::size_t n = 0;
        for (auto v : labels) n += v;
        return static_cast<double>(n) / static_cast<double>(labels.size());
    }
    double matrix_fraction() const { return 1.0 - inclusion_fraction(); }
};

// ---- corrugation -------------------------------------------------------

/// r_eff = r (1 + wave * sin(2 pi periods p1)), p1 in [0,1].
inline double corrugated_radius(double r, double wave, double p1, int periods) {
    return r * (1.0 + wave * std::sin(2.0 * kPi * periods * p1));
}

namespace detail {

// Sphere corrugation phase: polar angle of the displacement over pi, in a
// fixed frame attached to the sphere.
inline double sphere_phase(const Vec3& d, double dist) {
    const double cz = std::clamp(d.z / dist, -1.0, 1.0);
    return std::acos(cz) / kPi;
}

// Membership against one explicit image (no wrapping).
inline bool contains_image(const Sphere& s, const Vec3& shift, const Vec3& p, double wave,
                           int periods) {
    const Vec3 d = p - (s.center + shift);
    const double dist2 = d.norm2();
    if (dist2 == 0.0) return true;
    const double dist = std::sqrt(dist2);
    if (wave == 0.0) return dist < s.radius;
    return dist < corrugated_radius(s.radius, wave, sphere_phase(d, dist), periods);
}

inline bool contains_image(const Cylinder& c, const Vec3& shift, const Vec3& p, double wave,
                           int periods) {
    const Vec3 q = p - (c.base + shift);
    const double t = q.dot(c.axis);
    if (t < 0.0 || t > c.length) return false;
    const double rad2 = q.norm2() - t * t;
    const double reff = wave == 0.0 ? c.radius
                                    : corrugated_radius(c.radius, wave, t / c.length, periods);
    return rad2 < reff * reff;
}

} // namespace detail

// ---- membership --------------------------------------------------------

inline bool contains(const Sphere& s, const Vec3& p, double wave = 0.0, int periods = 3) {
    const Vec3 d = periodic_delta(p, s.center);
    const double dist2 = d.norm2();
    if (dist2 == 0.0) return true;
    const double dist = std::sqrt(dist2);
    if (wave == 0.0) return dist < s.radius;
    return dist < corrugated_radius(s.radius, wave, detail::sphere_phase(d, dist), periods);
}

inline bool contains(const Cylinder& c, const Vec3& p, double wave = 0.0, int periods = 3) {
    // the segment can span more than half the cell, so enumerate images of
    // the cylinder that could reach p
    const auto cbox = detail::bounding_box(c, wave * c.radius);
    const detail::Box pbox{p, p};
    const auto range = detail::shift_range(pbox, cbox);
    for (int mx = range.lo[0]; mx <= range.hi[0]; ++mx)
        for (int my = range.lo[1]; my <= range.hi[1]; ++my)
            for (int mz = range.lo[2]; mz <= range.hi[2]; ++mz)
                if (detail::contains_image(c, Vec3{double(mx), double(my), double(mz)}, p, wave,
                                           periods))
                    return true;
    return false;
}

inline bool contains(const Inclusion& inc, const Vec3& p, double wave = 0.0, int periods = 3) {
    return std::visit([&](const auto& x) { return contains(x, p, wave, periods); }, inc);
}

// ---- voxelization ------------------------------------------------------

namespace detail {

// Rasterize one inclusion image: scan the voxel centers inside its bounding
// box and set labels where the membership test passes.
template <class Shape>
void rasterize(PhaseGrid& grid, const Shape& shape, double wave, int periods) {
    const int N = grid.resolution;
    const Box box = bounding_box(shape, wave * shape.radius);
    const Box cell{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}};
    const auto images = shift_range(cell, box);
    for (int mx = images.lo[0]; mx <= images.hi[0]; ++mx)
        for (int my = images.lo[1]; my <= images.hi[1]; ++my)
            for (int mz = images.lo[2]; mz <= images.hi[2]; ++mz) {
                const Vec3 shift{double(mx), double(my), double(mz)};
                const double lo[3] = {box.lo.x + mx, box.lo.y + my, box.lo.z + mz};
                const double hi[3] = {box.hi.x + mx, box.hi.y + my, box.hi.z + mz};
                int ilo[3], ihi[3];
                for (int d = 0; d < 3; ++d) {
                    ilo[d] = std::max(0, static_cast<int>(std::ceil(lo[d] * N - 0.5)));
                    ihi[d] = std::min(N - 1, static_cast<int>(std::floor(hi[d] * N - 0.5)));
                }
                for (int k = ilo[2]; k <= ihi[2]; ++k)
                    for (int j = ilo[1]; j <= ihi[1]; ++j)
                        for (int i = ilo[0]; i <= ihi[0]; ++i) {
                            const Vec3 p{(i + 0.5) / N, (j + 0.5) / N, (k + 0.5) / N};
                            if (contains_image(shape, shift, p, wave, periods))
                                grid.at(i, j, k) = 1;
                        }
            }
}

} // namespace detail

/// Label voxel (i,j,k) as inclusion iff its center is inside any inclusion.
inline PhaseGrid voxelize(const Geometry& geometry, int N, double wave = 0.0, int periods = 3) {
    PhaseGrid grid;
    grid.resolution = N;
    grid.labels.assign(std::size_t(N) * N * N, 0);
    for (const auto& s : geometry.spheres) detail::rasterize(grid, s, wave, periods);
    for (const auto& c : geometry.cylinders) detail::rasterize(grid, c, wave, periods);
    return grid;
}

// ---- defect carving ----------------------------------------------------

/// Carve n_def spherical defects (common radius, centers uniform over
/// inclusion voxels) so the removed fraction lands in f_def +- 0.005.
/// Only flips labels 1 -> 0. Deterministic per seed.
inline PhaseGrid carve_defects(const PhaseGrid& grid, double f_def, int n_def, std::uint64_t seed,
                               double window = 0.005, int max_bisect = 60) {
    PhaseGrid out = grid;
    if (f_def == 0.0) return out;
    const int N = grid.resolution;
    const std::size_t total = grid.labels.size();

    std::vector<std::uint32_t> inclusion_voxels;
    for (std::size_t idx = 0; idx < total; ++idx)
        if (grid.labels[idx]) inclusion_voxels.push_back(static_cast<std::uint32_t>(idx));
    const double incl_fraction = static_cast<double>(inclusion_voxels.size()) / total;
    if (f_def > incl_fraction)
        throw DomainError("carve_defects: f_def exceeds the inclusion fraction");

    Rng rng(seed);
    struct Center { int i, j, k; };
    std::vector<Center> centers;
    centers.reserve(n_def);
    for (int d = 0; d < n_def; ++d) {
        const std::uint32_t idx = inclusion_voxels[rng.index(inclusion_voxels.size())];
        centers.push_back({int(idx % N), int((idx / N) % N), int(idx / (std::size_t(N) * N))});
    }

    // removed voxel count for ball radius rho; index-space arithmetic keeps
    // the periodic distances exact
    std::vector<std::uint8_t> mask(total);
    auto carved_count = [&](double rho) -> std::size_t {
        std::memset(mask.data(), 0, total);
        const double rho_vox = rho * N;
        const int span = static_cast<int>(std::floor(rho_vox));
        const double rv2 = rho_vox * rho_vox;
        for (const auto& c : centers)
            for (int dk = -span; dk <= span; ++dk)
                for (int dj = -span; dj <= span; ++dj)
                    for (int di = -span; di <= span; ++di) {
                        if (double(di) * di + double(dj) * dj + double(dk) * dk >= rv2) continue;
                        const int i = ((c.i + di) % N + N) % N;
                        const int j = ((c.j + dj) % N + N) % N;
                        const int k = ((c.k + dk) % N + N) % N;
                        mask[std::size_t(i) + std::size_t(N) * (std::size_t(j) + std::size_t(N) * k)] = 1;
                    }
        std::size_t count = 0;
        for (std::size_t idx = 0; idx < total; ++idx)
            if (mask[idx] && grid.labels[idx]) ++count;
        return count;
    };

    const double target_lo = f_def - window;
    const double target_hi = f_def + window;
    double lo = 0.0, hi = 0.9; // a ball of radius 0.9 covers the whole cell
    for (int iter = 0; iter < max_bisect; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double measured = static_cast<double>(carved_count(mid)) / total;
        if (measured >= target_lo && measured <= target_hi) {
            std::size_t flipped = 0;
            for (std::size_t idx = 0; idx < total; ++idx)
                if (mask[idx] && out.labels[idx]) {
                    out.labels[idx] = 0;
                    ++flipped;
                }
            out.defect_fraction_measured = static_cast<double>(flipped) / total;
            return out;
        }
        if (measured < target_lo)
            lo = mid;
        else
            hi = mid;
    }
    throw CalibrationFailed("carve_defects: bisection did not reach the target window " +
                            std::to_string(target_lo) + " .. " + std::to_string(target_hi));
}

// ---- binary grid format ------------------------------------------------
//
// 16-byte header: magic "RVEG", version u32, N u32, phase-count u32
// (little-endian), then N^3 label bytes in x-fastest order.

inline void write_grid(const PhaseGrid& grid, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open " + path + " for writing");
    const char magic[4] = {'R', 'V', 'E', 'G'};
    const std::uint32_t header[3] = {1u, static_cast<std::uint32_t>(grid.resolution), 2u};
    out.write(magic, 4);
    out.write(reinterpret_cast<const char*>(header), 12);
    out.write(reinterpret_cast<const char*>(grid.labels.data()),
              static_cast<std::streamsize>(grid.labels.size()));
    if (!out) throw FormatError("short write to " + path);
}

inline PhaseGrid read_grid(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    char magic[4];
    std::uint32_t header[3];
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(header), 12);
    if (!in || std::memcmp(magic, "RVEG", 4) != 0)
        throw FormatError(path + ": bad magic (not a phase-grid file)");
    if (header[0] != 1u) throw FormatError(path + ": unsupported version " + std::to_string(header[0]));
    PhaseGrid grid;
    grid.resolution = static_cast<int>(header[1]);
    const std::size_t n = std::size_t(grid.resolution) * grid.resolution * grid.resolution;
    grid.labels.resize(n);
    in.read(reinterpret_cast<char*>(grid.labels.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) throw FormatError(path + ": truncated file");
    return grid;
}

inline void write_fractions_csv(const PhaseGrid& grid, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open " + path + " for writing");
    char buf[160];
    std::snprintf(buf, sizeof buf, "inclusion_fraction,matrix_fraction,defect_fraction_measured\n%.17g,%.17g,%.17g\n",
                  grid.inclusion_fraction(), grid.matrix_fraction(), grid.defect_fraction_measured);
    out << buf;
}

} // namespace rvetherm
