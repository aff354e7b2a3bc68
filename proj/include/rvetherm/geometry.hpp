#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"
#include "spec.hpp"
#include "vec3.hpp"

namespace rvetherm {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

struct Sphere {
    Vec3 center; // in [0,1)^3
    double radius = 0.0;
};

struct Cylinder {
    Vec3 base;   // axis segment start, in [0,1)^3
    Vec3 axis;   // unit vector
    double radius = 0.0;
    double length = 0.0; // = 2 * aspect_ratio * radius

    Vec3 end() const { return base + axis * length; }
};

using Inclusion = std::variant<Sphere, Cylinder>;

/// Analytic packing of one realization; inclusions are pairwise
/// non-intersecting under the periodic metric.
struct Geometry {
    std::vector<Sphere> spheres;
    std::vector<Cylinder> cylinders;
    MorphologySpec spec;
};

// ---- radii from target volume fractions --------------------------------

inline double sphere_radius(int n_sp, double f_sp) {
    if (n_sp < 1 || f_sp <= 0.0)
        throw DomainError("sphere_radius: need n_sp >= 1 and f_sp > 0");
    return std::cbrt(3.0 * f_sp / (4.0 * kPi * n_sp));
}

inline double cylinder_radius(int n_cyl, double f_cyl, double aspect_ratio) {
    if (n_cyl < 1 || f_cyl <= 0.0 || aspect_ratio <= 0.0)
        throw DomainError("cylinder_radius: need n_cyl >= 1, f_cyl > 0, aspect_ratio > 0");
    // volume of one cylinder: pi r^2 L with L = 2 a r
    return std::cbrt(f_cyl / (2.0 * kPi * aspect_ratio * n_cyl));
}

// ---- periodic metric ---------------------------------------------------

// Minimal-image displacement p - q, each component in [-0.5, 0.5).
inline Vec3 periodic_delta(const Vec3& p, const Vec3& q) {
    auto wrap = [](double d) { return d - std::floor(d + 0.5); };
    return {wrap(p.x - q.x), wrap(p.y - q.y), wrap(p.z - q.z)};
}

namespace detail {

struct Box {
    Vec3 lo, hi;
};

inline Box bounding_box(const Sphere& s, double inflate) {
    const double r = s.radius + inflate;
    return {{s.center.x - r, s.center.y - r, s.center.z - r},
            {s.center.x + r, s.center.y + r, s.center.z + r}};
}

inline Box bounding_box(const Cylinder& c, double inflate) {
    const Vec3 e = c.end();
    const double r = c.radius + inflate;
    return {{std::min(c.base.x, e.x) - r, std::min(c.base.y, e.y) - r, std::min(c.base.z, e.z) - r},
            {std::max(c.base.x, e.x) + r, std::max(c.base.y, e.y) + r, std::max(c.base.z, e.z) + r}};
}

// Integer lattice shifts m such that b+m can touch a. Long cylinders can
// span more than a full cell, so the range is derived from the boxes rather
// than fixed at 27 images.
struct ShiftRange {
    int lo[3], hi[3];
};

inline ShiftRange shift_range(const Box& a, const Box& b) {
    ShiftRange r;
    const double alo[3] = {a.lo.x, a.lo.y, a.lo.z}, ahi[3] = {a.hi.x, a.hi.y, a.hi.z};
    const double blo[3] = {b.lo.x, b.lo.y, b.lo.z}, bhi[3] = {b.hi.x, b.hi.y, b.hi.z};
    for (int i = 0; i < 3; ++i) {
        r.lo[i] = static_cast<int>(std::ceil(alo[i] - bhi[i] - 1e-12));
        r.hi[i] = static_cast<int>(std::floor(ahi[i] - blo[i] + 1e-12));
    }
    return r;
}

inline Vec3 closest_on_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const double denom = ab.norm2();
    double t = denom > 0.0 ? (p - a).dot(ab) / denom : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return a + ab * t;
}

inline double point_segment_dist2(const Vec3& p, const Vec3& a, const Vec3& b) {
    return (p - closest_on_segment(p, a, b)).norm2();
}

struct SegmentClosest {
    double dist2;
    Vec3 c1, c2; // closest points on the first and second segment
};

// Closest points between segments [p1,q1] and [p2,q2] (clamped
// closest-point computation).
inline SegmentClosest segment_segment_closest(const Vec3& p1, const Vec3& q1, const Vec3& p2,
                                              const Vec3& q2) {
    const Vec3 d1 = q1 - p1;
    const Vec3 d2 = q2 - p2;
    const Vec3 r = p1 - p2;
    const double a = d1.norm2();
    const double e = d2.norm2();
    const double f = d2.dot(r);
    double s, t;

    if (a <= 1e-30 && e <= 1e-30) {
        return {r.norm2(), p1, p2};
    }
    if (a <= 1e-30) {
        s = 0.0;
        t = std::clamp(f / e, 0.0, 1.0);
    } else {
        const double c = d1.dot(r);
        if (e <= 1e-30) {
            t = 0.0;
            s = std::clamp(-c / a, 0.0, 1.0);
        } else {
            const double b = d1.dot(d2);
            const double denom = a * e - b * b;
            s = denom > 0.0 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
            t = (b * s + f) / e;
            if (t < 0.0) {
                t = 0.0;
                s = std::clamp(-c / a, 0.0, 1.0);
            } else if (t > 1.0) {
                t = 1.0;
                s = std::clamp((b - c) / a, 0.0, 1.0);
            }
        }
    }
    const Vec3 c1 = p1 + d1 * s;
    const Vec3 c2 = p2 + d2 * t;
    return {(c1 - c2).norm2(), c1, c2};
}

inline double segment_segment_dist2(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2) {
    return segment_segment_closest(p1, q1, p2, q2).dist2;
}

} // namespace detail

// ---- overlap tests on the torus ----------------------------------------

// `tol` is an extra separation added to the radius sum (contact tolerance).

inline bool intersects(const Sphere& a, const Sphere& b, double tol = 0.0) {
    const double rsum = a.radius + b.radius + tol;
    return periodic_delta(a.center, b.center).norm2() < rsum * rsum;
}

inline bool intersects(const Sphere& s, const Cylinder& c, double tol = 0.0) {
    const double rsum = s.radius + c.radius + tol;
    const auto abox = detail::bounding_box(s, tol);
    const auto cbox = detail::bounding_box(c, 0.0);
    const auto range = detail::shift_range(abox, cbox);
    const Vec3 e = c.end();
    for (int mx = range.lo[0]; mx <= range.hi[0]; ++mx)
        for (int my = range.lo[1]; my <= range.hi[1]; ++my)
            for (int mz = range.lo[2]; mz <= range.hi[2]; ++mz) {
                const Vec3 m{double(mx), double(my), double(mz)};
                if (detail::point_segment_dist2(s.center, c.base + m, e + m) < rsum * rsum)
                    return true;
            }
    return false;
}

inline bool intersects(const Cylinder& c, const Sphere& s, double tol = 0.0) {
    return intersects(s, c, tol);
}

inline bool intersects(const Cylinder& a, const Cylinder& b, double tol = 0.0) {
    const double rsum = a.radius + b.radius + tol;
    const auto abox = detail::bounding_box(a, tol);
    const auto bbox = detail::bounding_box(b, 0.0);
    const auto range = detail::shift_range(abox, bbox);
    const Vec3 ae = a.end();
    const Vec3 be = b.end();
    for (int mx = range.lo[0]; mx <= range.hi[0]; ++mx)
        for (int my = range.lo[1]; my <= range.hi[1]; ++my)
            for (int mz = range.lo[2]; mz <= range.hi[2]; ++mz) {
                const Vec3 m{double(mx), double(my), double(mz)};
                if (detail::segment_segment_dist2(a.base, ae, b.base + m, be + m) < rsum * rsum)
                    return true;
            }
    return false;
}

inline bool intersects(const Inclusion& a, const Inclusion& b, double tol = 0.0) {
    return std::visit([tol](const auto& x, const auto& y) { return intersects(x, y, tol); }, a, b);
}

namespace detail {

// Signed overlap between two bodies on the torus: depth > 0 means the pair
// violates the contact tolerance by that much; dir is the unit direction in
// which the second body must move away from the first (zero when the
// closest points coincide and the direction is undefined).
struct Gap {
    double depth = 0.0;
    Vec3 dir{};
};

inline Gap gap(const Sphere& a, const Sphere& b, double tol) {
    const Vec3 d = periodic_delta(b.center, a.center);
    const double dist = d.norm();
    return {a.radius + b.radius + tol - dist, dist > 1e-12 ? d * (1.0 / dist) : Vec3{}};
}

inline Gap gap(const Sphere& s, const Cylinder& c, double tol) {
    const double needed = s.radius + c.radius + tol;
    const auto range = shift_range(bounding_box(s, tol), bounding_box(c, 0.0));
    const Vec3 e = c.end();
    double best = std::numeric_limits<double>::infinity();
    Vec3 best_q{};
    for (int mx = range.lo[0]; mx <= range.hi[0]; ++mx)
        for (int my = range.lo[1]; my <= range.hi[1]; ++my)
            for (int mz = range.lo[2]; mz <= range.hi[2]; ++mz) {
                const Vec3 m{double(mx), double(my), double(mz)};
                const Vec3 q = closest_on_segment(s.center, c.base + m, e + m);
                const double d2 = (s.center - q).norm2();
                if (d2 < best) {
                    best = d2;
                    best_q = q;
                }
            }
    if (!std::isfinite(best)) return {needed - 1.0, {}}; // no image in reach
    const double dist = std::sqrt(best);
    const Vec3 d = best_q - s.center;
    return {needed - dist, dist > 1e-12 ? d * (1.0 / dist) : Vec3{}};
}

inline Gap gap(const Cylinder& c, const Sphere& s, double tol) {
    Gap g = gap(s, c, tol);
    g.dir = g.dir * -1.0;
    return g;
}

inline Gap gap(const Cylinder& a, const Cylinder& b, double tol) {
    const double needed = a.radius + b.radius + tol;
    const auto range = shift_range(bounding_box(a, tol), bounding_box(b, 0.0));
    const Vec3 ae = a.end();
    const Vec3 be = b.end();
    SegmentClosest best{std::numeric_limits<double>::infinity(), {}, {}};
    for (int mx = range.lo[0]; mx <= range.hi[0]; ++mx)
        for (int my = range.lo[1]; my <= range.hi[1]; ++my)
            for (int mz = range.lo[2]; mz <= range.hi[2]; ++mz) {
                const Vec3 m{double(mx), double(my), double(mz)};
                const SegmentClosest sc = segment_segment_closest(a.base, ae, b.base + m, be + m);
                if (sc.dist2 < best.dist2) best = sc;
            }
    if (!std::isfinite(best.dist2)) return {needed - 1.0, {}};
    const double dist = std::sqrt(best.dist2);
    const Vec3 d = best.c2 - best.c1;
    return {needed - dist, dist > 1e-12 ? d * (1.0 / dist) : Vec3{}};
}

inline Gap gap(const Inclusion& a, const Inclusion& b, double tol) {
    return std::visit([tol](const auto& x, const auto& y) { return gap(x, y, tol); }, a, b);
}

inline Vec3 wrap_to_cell(const Vec3& p) {
    return {p.x - std::floor(p.x), p.y - std::floor(p.y), p.z - std::floor(p.z)};
}

inline void translate(Inclusion& body, const Vec3& d) {
    if (auto* s = std::get_if<Sphere>(&body))
        s->center = wrap_to_cell(s->center + d);
    else {
        auto& c = std::get<Cylinder>(body);
        c.base = wrap_to_cell(c.base + d);
    }
}

// Resolve residual contacts by pushing every violating pair apart along its
// closest-approach direction (Gauss-Seidel sweeps with a slight overshoot).
// Returns false if the configuration fails to separate within max_sweeps.
inline bool relax(std::vector<Inclusion>& bodies, double tol, Rng& rng, int max_sweeps = 3000) {
    const double target = tol + 1e-9; // strict margin over the contact tolerance
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool moved = false;
        for (std::size_t i = 0; i < bodies.size(); ++i)
            for (std::size_t j = i + 1; j < bodies.size(); ++j) {
                const Gap g = gap(bodies[i], bodies[j], target);
                // depths at roundoff scale are unreachable by finite position
                // updates and already well inside the 1e-9 slack over tol
                if (g.depth <= 1e-12) continue;
                moved = true;
                Vec3 dir = g.dir;
                if (dir.norm2() < 1e-24) dir = rng.unit_vector();
                const double step = 0.55 * g.depth;
                translate(bodies[i], dir * -step);
                translate(bodies[j], dir * step);
            }
        if (!moved) return true;
    }
    return false;
}

} // namespace detail

// ---- Random Sequential Adsorption --------------------------------------

inline constexpr int kDefaultAttemptBudget = 100000;

/// Sequentially place cylinders then spheres, rejecting any proposal that
/// intersects an already-placed inclusion. Dense packings near the 0.30 cap
/// jam under pure sequential rejection, so when the attempt budget runs out
/// the body is seeded at its least-overlapping proposal and the residual
/// contacts are resolved by pushing violating pairs apart (deterministic,
/// same seeded stream). Deterministic for a fixed seed either way.
inline Geometry generate_rsa(const MorphologySpec& spec, std::uint64_t seed,
                             int attempt_budget = kDefaultAttemptBudget) {
    validate(spec);
    Geometry geo;
    geo.spec = spec;
    geo.spec.seed = seed;
    Rng rng(seed);

    // half a voxel of clearance so voxelization cannot merge inclusions
    const double tol = 0.5 / spec.resolution;

    const int n_cyl = spec.f_cyl > 0.0 ? spec.n_cyl : 0;
    const int n_sp = spec.f_sp > 0.0 ? spec.n_sp : 0;

    auto clashes = [&](const auto& candidate) {
        for (const auto& c : geo.cylinders)
            if (intersects(candidate, c, tol)) return true;
        for (const auto& s : geo.spheres)
            if (intersects(candidate, s, tol)) return true;
        return false;
    };

    auto all_bodies = [&]() {
        std::vector<Inclusion> v;
        for (const auto& c : geo.cylinders) v.emplace_back(c);
        for (const auto& s : geo.spheres) v.emplace_back(s);
        return v;
    };
    auto write_back = [&](const std::vector<Inclusion>& v) {
        geo.cylinders.clear();
        geo.spheres.clear();
        for (const auto& b : v) {
            if (const auto* s = std::get_if<Sphere>(&b))
                geo.spheres.push_back(*s);
            else
                geo.cylinders.push_back(std::get<Cylinder>(b));
        }
    };

    // place one body: RSA first, relaxation fallback when the budget runs out
    auto place = [&](auto make, const char* kind, int index, int total) {
        for (int attempt = 0; attempt < attempt_budget; ++attempt) {
            // re-draw position (and orientation) together on rejection
            const auto cand = make();
            if (!clashes(cand)) {
                if constexpr (std::is_same_v<std::decay_t<decltype(cand)>, Sphere>)
                    geo.spheres.push_back(cand);
                else
                    geo.cylinders.push_back(cand);
                return;
            }
        }
        std::vector<Inclusion> bodies = all_bodies();
        Inclusion best = make();
        double best_depth = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 200; ++k) {
            const Inclusion cand = k == 0 ? best : Inclusion(make());
            double depth = 0.0;
            for (const auto& b : bodies) {
                const detail::Gap g = detail::gap(cand, b, tol);
                if (g.depth > 0.0) depth += g.depth;
            }
            if (depth < best_depth) {
                best_depth = depth;
                best = cand;
            }
        }
        bodies.push_back(best);
        if (!detail::relax(bodies, tol, rng))
            throw PlacementExhausted(std::string("RSA: could not place ") + kind + " " +
                                     std::to_string(index + 1) + " of " + std::to_string(total) +
                                     " within " + std::to_string(attempt_budget) +
                                     " attempts, and contact relaxation did not converge");
        write_back(bodies);
    };

    // cylinders first: elongated bodies are the binding constraint
    if (n_cyl > 0) {
        const double r = cylinder_radius(n_cyl, spec.f_cyl, spec.aspect_ratio);
        const double len = 2.0 * spec.aspect_ratio * r;
        for (int i = 0; i < n_cyl; ++i)
            place([&] { return Cylinder{rng.point_in_cell(), rng.unit_vector(), r, len}; },
                  "cylinder", i, n_cyl);
    }

    if (n_sp > 0) {
        const double r = sphere_radius(n_sp, spec.f_sp);
        for (int i = 0; i < n_sp; ++i)
            place([&] { return Sphere{rng.point_in_cell(), r}; }, "sphere", i, n_sp);
    }
    return geo;
}

/// Total analytic inclusion volume, ignoring the (excluded) overlaps.
inline double analytic_fraction(const Geometry& g) {
    double v = 0.0;
    for (const auto& s : g.spheres) v += 4.0 / 3.0 * kPi * s.radius * s.radius * s.radius;
    for (const auto& c : g.cylinders) v += kPi * c.radius * c.radius * c.length;
    return v;
}

// ---- text serialization ------------------------------------------------
//
// Line-oriented: header `RVE v1 n_sp n_cyl`, then `S cx cy cz r` per sphere
// and `C bx by bz ax ay az r L` per cylinder, 17 significant digits.

namespace detail {
inline void append_g17(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, " %.17g", v);
    out += buf;
}
} // namespace detail

inline std::string to_text(const Geometry& g) {
    std::string out = "RVE v1 " + std::to_string(g.spheres.size()) + " " +
                      std::to_string(g.cylinders.size()) + "\n";
    for (const auto& s : g.spheres) {
        out += "S";
        detail::append_g17(out, s.center.x);
        detail::append_g17(out, s.center.y);
        detail::append_g17(out, s.center.z);
        detail::append_g17(out, s.radius);
        out += "\n";
    }
    for (const auto& c : g.cylinders) {
        out += "C";
        detail::append_g17(out, c.base.x);
        detail::append_g17(out, c.base.y);
        detail::append_g17(out, c.base.z);
        detail::append_g17(out, c.axis.x);
        detail::append_g17(out, c.axis.y);
        detail::append_g17(out, c.axis.z);
        detail::append_g17(out, c.radius);
        detail::append_g17(out, c.length);
        out += "\n";
    }
    return out;
}

inline Geometry geometry_from_text(const std::string& text) {
    std::istringstream in(text);
    std::string magic, version;
    std::size_t n_sp = 0, n_cyl = 0;
    if (!(in >> magic >> version >> n_sp >> n_cyl) || magic != "RVE" || version != "v1")
        throw FormatError("geometry: bad header (expected `RVE v1 n_sp n_cyl`)");
    Geometry g;
    g.spec.n_sp = static_cast<int>(n_sp);
    g.spec.n_cyl = static_cast<int>(n_cyl);
    for (std::size_t i = 0; i < n_sp; ++i) {
        std::string tag;
        Sphere s;
        if (!(in >> tag >> s.center.x >> s.center.y >> s.center.z >> s.radius) || tag != "S")
            throw FormatError("geometry: bad sphere record " + std::to_string(i));
        g.spheres.push_back(s);
    }
    for (std::size_t i = 0; i < n_cyl; ++i) {
        std::string tag;
        Cylinder c;
        if (!(in >> tag >> c.base.x >> c.base.y >> c.base.z >> c.axis.x >> c.axis.y >> c.axis.z >>
              c.radius >> c.length) ||
            tag != "C")
            throw FormatError("geometry: bad cylinder record " + std::to_string(i));
        g.cylinders.push_back(c);
    }
    return g;
}

} // namespace rvetherm
