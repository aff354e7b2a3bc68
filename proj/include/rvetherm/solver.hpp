#pragma once

#include <fftw3.h>

#include <array>
#include <chrono>
#include <complex>
#include <cstdlib>
#include <limits>
#include <map>
#include <mutex>
#include <new>
#include <vector>

#include "errors.hpp"
#include "morphology.hpp"
#include "vec3.hpp"

namespace rvetherm {

// ---- conductivity field ------------------------------------------------

/// Per-voxel scalar conductivity, matrix normalized to 1, inclusion = c.
struct ConductivityField {
    int resolution = 0;
    double contrast = 1.0;
    std::vector<std::uint8_t> labels;

    ConductivityField() = default;
    ConductivityField(const PhaseGrid& grid, double c)
        : resolution(grid.resolution), contrast(c), labels(grid.labels) {
        if (c <= 0.0) throw DomainError("contrast must be positive");
    }

    double conductivity(std::size_t idx) const { return labels[idx] ? contrast : 1.0; }
    double inclusion_fraction() const {
        std::size_t n = 0;
        for (auto v : labels) n += v;
        return static_cast<double>(n) / static_cast<double>(labels.size());
    }
};

/// Reference conductivity of the comparison medium: -sqrt(min * max) over
/// the two phase values {1, c}.
inline double reference_tensor(double c) {
    if (c <= 0.0) throw DomainError("reference_tensor: contrast must be positive");
    return -std::sqrt(std::min(1.0, c) * std::max(1.0, c));
}

// ---- Green operator ----------------------------------------------------

/// Gamma^0 applied to one Fourier coefficient: xi (xi . tau) / (lambda0 |xi|^2).
/// Must not be called with xi = 0; the zero coefficient is pinned by the
/// scheme to the macroscopic gradient.
template <class Scalar>
inline std::array<Scalar, 3> green_apply(const std::array<Scalar, 3>& tau_hat, const Vec3& xi,
                                         double lambda0) {
    const Scalar s = tau_hat[0] * xi.x + tau_hat[1] * xi.y + tau_hat[2] * xi.z;
    const double inv = 1.0 / (lambda0 * xi.norm2());
    return {s * (xi.x * inv), s * (xi.y * inv), s * (xi.z * inv)};
}

// ---- FFT plumbing ------------------------------------------------------

namespace detail {

template <class T>
struct AlignedAlloc {
    using value_type = T;
    AlignedAlloc() = default;
    template <class U>
    AlignedAlloc(const AlignedAlloc<U>&) {}
    T* allocate(std::size_t n) {
        void* p = nullptr;
        if (posix_memalign(&p, 64, n * sizeof(T)) != 0) throw std::bad_alloc();
        return static_cast<T*>(p);
    }
    void deallocate(T* p, std::size_t) { std::free(p); }
    template <class U>
    bool operator==(const AlignedAlloc<U>&) const { return true; }
};

using RealField = std::vector<double, AlignedAlloc<double>>;
using ComplexField = std::vector<std::complex<double>, AlignedAlloc<std::complex<double>>>;

// Cached r2c/c2r plans per grid size. FFTW_ESTIMATE keeps planning
// deterministic, which the reproducibility contract needs. The planner is
// not thread-safe; execution via the new-array interface is.
struct FftPlans {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
};

inline FftPlans fft_plans(int n) {
    static std::mutex mutex;
    static std::map<int, FftPlans> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    const std::size_t nreal = std::size_t(n) * n * n;
    const std::size_t ncplx = std::size_t(n) * n * (n / 2 + 1);
    RealField real(nreal);
    ComplexField cplx(ncplx);
    FftPlans plans;
    plans.forward = fftw_plan_dft_r2c_3d(n, n, n, real.data(),
                                         reinterpret_cast<fftw_complex*>(cplx.data()), FFTW_ESTIMATE);
    plans.backward = fftw_plan_dft_c2r_3d(n, n, n, reinterpret_cast<fftw_complex*>(cplx.data()),
                                          real.data(), FFTW_ESTIMATE);
    cache[n] = plans;
    return plans;
}

inline void fft_forward(const FftPlans& plans, double* in, std::complex<double>* out) {
    fftw_execute_dft_r2c(plans.forward, in, reinterpret_cast<fftw_complex*>(out));
}

inline void fft_backward(const FftPlans& plans, std::complex<double>* in, double* out) {
    fftw_execute_dft_c2r(plans.backward, reinterpret_cast<fftw_complex*>(in), out);
}

inline int signed_frequency(int i, int n) { return i <= n / 2 ? i : i - n; }

} // namespace detail

// ---- accelerated scheme ------------------------------------------------

struct GradientField {
    int resolution = 0;
    Vec3 imposed_gradient;                // the macroscopic gradient
    std::array<detail::RealField, 3> comps; // local gradient components
    Vec3 mean_flux;                       // <phi> at convergence
    int iterations = 0;                   // update steps performed
    int equilibrium_tests = 0;
    double eps_eq = 0.0;
    double eps_comp = 0.0;
    std::vector<double> residual_history; // eps_comp per iteration
};

inline constexpr double kDefaultAcc = 1e-6;
inline constexpr int kDefaultMaxIter = 5000;

/// Lippmann-Schwinger fixed point with the Eyre-Milton update. Returns the
/// converged gradient field; both residuals are below `acc` on exit.
inline GradientField accelerated_scheme(const ConductivityField& field, const Vec3& grad_theta,
                                        double acc = kDefaultAcc, int max_iter = kDefaultMaxIter) {
    if (acc <= 0.0) throw DomainError("acc must be positive");
    const int n = field.resolution;
    const std::size_t nreal = std::size_t(n) * n * n;
    const std::size_t ncplx = std::size_t(n) * n * (n / 2 + 1);
    const double c = field.contrast;
    const double lambda0 = reference_tensor(c);
    const double sqrt_c = -lambda0;

    // per-phase coefficients
    // polarization: tau = -(k + lambda0) grad = (sqrt_c - k) grad
    // update:       grad += 2 sqrt_c / (k + sqrt_c) (grad_comp - grad)
    const double tau_coef[2] = {sqrt_c - 1.0, sqrt_c - c};
    const double alpha[2] = {2.0 * sqrt_c / (1.0 + sqrt_c), 2.0 * sqrt_c / (c + sqrt_c)};
    const double kneg[2] = {-1.0, -c};

    const auto plans = detail::fft_plans(n);

    GradientField out;
    out.resolution = n;
    out.imposed_gradient = grad_theta;
    for (auto& comp : out.comps) comp.assign(nreal, 0.0);
    // initialize with the macroscopic gradient
    const double g0[3] = {grad_theta.x, grad_theta.y, grad_theta.z};
    for (int d = 0; d < 3; ++d)
        for (std::size_t idx = 0; idx < nreal; ++idx) out.comps[d][idx] = g0[d];

    std::array<detail::RealField, 3> scratch;
    std::array<detail::ComplexField, 3> spectral;
    for (auto& s : scratch) s.assign(nreal, 0.0);
    for (auto& s : spectral) s.assign(ncplx, {0.0, 0.0});

    const double grad_norm = std::max(grad_theta.norm(), 1e-300);
    const double inv_nreal = 1.0 / static_cast<double>(nreal);
    const double two_pi = 2.0 * kPi;

    double eps_comp = std::numeric_limits<double>::infinity();
    bool converged = false;

    for (int iter = 0; iter < max_iter && !converged; ++iter) {
        // step 1: equilibrium test, gated on the compatibility residual.
        // The first iteration has no eps_comp yet and tests unconditionally,
        // so a homogeneous medium converges without any update step.
        if (iter == 0 || eps_comp < acc) {
            for (int d = 0; d < 3; ++d) {
                const double* g = out.comps[d].data();
                double* phi = scratch[d].data();
                const std::uint8_t* lab = field.labels.data();
                for (std::size_t idx = 0; idx < nreal; ++idx) phi[idx] = kneg[lab[idx]] * g[idx];
                detail::fft_forward(plans, scratch[d].data(), spectral[d].data());
            }
            ++out.equilibrium_tests;
            double accum = 0.0;
            std::size_t pos = 0;
            for (int kz = 0; kz < n; ++kz) {
                const int sz = detail::signed_frequency(kz, n);
                const double fz = two_pi * sz;
                for (int ky = 0; ky < n; ++ky) {
                    const int sy = detail::signed_frequency(ky, n);
                    const double fy = two_pi * sy;
                    for (int kx = 0; kx <= n / 2; ++kx, ++pos) {
                        // Nyquist-bearing modes are outside the range of the
                        // discrete Green operator (see step 4); they carry no
                        // equilibrium information and are excluded here too.
                        if (2 * kx == n || 2 * sy == n || 2 * sz == n) continue;
                        const double fx = two_pi * kx;
                        const std::complex<double> s = fx * spectral[0][pos] +
                                                       fy * spectral[1][pos] +
                                                       fz * spectral[2][pos];
                        const double w = (kx == 0) ? 1.0 : 2.0;
                        accum += w * std::norm(s);
                    }
                }
            }
            const double flux0 = std::sqrt(std::norm(spectral[0][0]) + std::norm(spectral[1][0]) +
                                           std::norm(spectral[2][0]));
            out.eps_eq = std::sqrt(accum * inv_nreal) / std::max(flux0, 1e-300);
            if (out.eps_eq < acc) {
                converged = true;
                break;
            }
        }

        // steps 2-3: polarization and its transform
        for (int d = 0; d < 3; ++d) {
            const double* g = out.comps[d].data();
            double* tau = scratch[d].data();
            const std::uint8_t* lab = field.labels.data();
            for (std::size_t idx = 0; idx < nreal; ++idx) tau[idx] = tau_coef[lab[idx]] * g[idx];
            detail::fft_forward(plans, scratch[d].data(), spectral[d].data());
        }

        // step 4: grad_comp_hat = -Gamma0 tau_hat for xi != 0, pinned mean at 0.
        // The Green formula is scale-invariant in xi, so raw integer
        // frequencies suffice here. Modes with a Nyquist component are
        // zeroed: the sign of xi = +-n/2 is ambiguous on an even grid, and
        // the projector's odd off-diagonal couplings would break the
        // conjugate symmetry the real transform relies on, leaving a
        // spurious equilibrium-residual floor at the fixed point.
        {
            std::size_t pos = 0;
            const double green_scale = -inv_nreal / lambda0; // folds in the inverse-FFT norm
            for (int kz = 0; kz < n; ++kz) {
                const int sz = detail::signed_frequency(kz, n);
                const double fz = sz;
                for (int ky = 0; ky < n; ++ky) {
                    const int sy = detail::signed_frequency(ky, n);
                    const double fy = sy;
                    for (int kx = 0; kx <= n / 2; ++kx, ++pos) {
                        const double fx = kx;
                        const double xi2 = fx * fx + fy * fy + fz * fz;
                        if (xi2 == 0.0) {
                            spectral[0][pos] = grad_theta.x;
                            spectral[1][pos] = grad_theta.y;
                            spectral[2][pos] = grad_theta.z;
                            continue;
                        }
                        if (2 * kx == n || 2 * sy == n || 2 * sz == n) {
                            spectral[0][pos] = 0.0;
                            spectral[1][pos] = 0.0;
                            spectral[2][pos] = 0.0;
                            continue;
                        }
                        const std::complex<double> s =
                            (fx * spectral[0][pos] + fy * spectral[1][pos] + fz * spectral[2][pos]) *
                            (green_scale / xi2);
                        spectral[0][pos] = fx * s;
                        spectral[1][pos] = fy * s;
                        spectral[2][pos] = fz * s;
                    }
                }
            }
        }

        // step 5: back to real space (spectral is clobbered by c2r)
        for (int d = 0; d < 3; ++d) detail::fft_backward(plans, spectral[d].data(), scratch[d].data());

        // steps 6-7: compatibility residual and Eyre-Milton update
        double accum = 0.0;
        for (int d = 0; d < 3; ++d) {
            double* g = out.comps[d].data();
            const double* gc = scratch[d].data();
            const std::uint8_t* lab = field.labels.data();
            for (std::size_t idx = 0; idx < nreal; ++idx) {
                const double diff = gc[idx] - g[idx];
                accum += diff * diff;
                g[idx] += alpha[lab[idx]] * diff;
            }
        }
        eps_comp = std::sqrt(accum * inv_nreal) / grad_norm;
        out.eps_comp = eps_comp;
        out.residual_history.push_back(eps_comp);
        ++out.iterations;
    }

    if (!converged)
        throw NonConvergence("accelerated scheme: no convergence after " +
                                 std::to_string(max_iter) + " iterations (eps_eq=" +
                                 std::to_string(out.eps_eq) + ", eps_comp=" +
                                 std::to_string(out.eps_comp) + ")",
                             out.eps_eq, out.eps_comp);

    // The update factor varies in space, so the mean of the iterate drifts
    // at the residual level between iterations; pin the zero-frequency
    // coefficient of the returned field and average the flux in real space.
    for (int d = 0; d < 3; ++d) {
        double* g = out.comps[d].data();
        double sum = 0.0;
        for (std::size_t idx = 0; idx < nreal; ++idx) sum += g[idx];
        const double drift = sum * inv_nreal - g0[d];
        for (std::size_t idx = 0; idx < nreal; ++idx) g[idx] -= drift;
    }
    {
        double flux[3] = {0.0, 0.0, 0.0};
        const std::uint8_t* lab = field.labels.data();
        for (int d = 0; d < 3; ++d) {
            const double* g = out.comps[d].data();
            double s = 0.0;
            for (std::size_t idx = 0; idx < nreal; ++idx) s += kneg[lab[idx]] * g[idx];
            flux[d] = s * inv_nreal;
        }
        out.mean_flux = {flux[0], flux[1], flux[2]};
    }
    return out;
}

// ---- homogenized tensor ------------------------------------------------

struct EffectiveTensor {
    double m[3][3] = {};
    int iterations[3] = {};
    double eps_eq[3] = {};
    double seconds = 0.0;

    double trace_mean() const { return (m[0][0] + m[1][1] + m[2][2]) / 3.0; }
};

/// Solve for the three unit macroscopic gradients; column j is -<phi> for
/// grad Theta = e_j.
inline EffectiveTensor homogenize(const ConductivityField& field, double acc = kDefaultAcc,
                                  int max_iter = kDefaultMaxIter) {
    const auto t0 = std::chrono::steady_clock::now();
    EffectiveTensor tensor;
    for (int j = 0; j < 3; ++j) {
        Vec3 e{j == 0 ? 1.0 : 0.0, j == 1 ? 1.0 : 0.0, j == 2 ? 1.0 : 0.0};
        GradientField sol;
        try {
            sol = accelerated_scheme(field, e, acc, max_iter);
        } catch (const NonConvergence& err) {
            throw NonConvergence("direction e" + std::to_string(j + 1) + ": " + err.what(),
                                 err.eps_eq, err.eps_comp);
        }
        tensor.m[0][j] = -sol.mean_flux.x;
        tensor.m[1][j] = -sol.mean_flux.y;
        tensor.m[2][j] = -sol.mean_flux.z;
        tensor.iterations[j] = sol.iterations;
        tensor.eps_eq[j] = sol.eps_eq;
    }
    tensor.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return tensor;
}

inline std::string tensor_csv(const EffectiveTensor& t) {
    std::string out =
        "l11,l12,l13,l21,l22,l23,l31,l32,l33,iter1,iter2,iter3,eps_eq1,eps_eq2,eps_eq3,seconds\n";
    char buf[64];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g,", t.m[i][j]);
            out += buf;
        }
    out += std::to_string(t.iterations[0]) + "," + std::to_string(t.iterations[1]) + "," +
           std::to_string(t.iterations[2]);
    for (int j = 0; j < 3; ++j) {
        std::snprintf(buf, sizeof buf, ",%.17g", t.eps_eq[j]);
        out += buf;
    }
    std::snprintf(buf, sizeof buf, ",%.3f\n", t.seconds);
    out += buf;
    return out;
}

// Wiener bounds on the diagonal of any effective tensor of a two-phase
// mixture at inclusion fraction f.
inline std::pair<double, double> wiener_bounds(double f, double c) {
    const double harmonic = 1.0 / (f / c + (1.0 - f));
    const double arithmetic = f * c + (1.0 - f);
    return {std::min(harmonic, arithmetic), std::max(harmonic, arithmetic)};
}

} // namespace rvetherm
