#pragma once

#include <algorithm>
#include <atomic>
#include <ostream>
#include <thread>

#include "solver.hpp"
#include "stochastic_stats.hpp"

namespace rvetherm {

struct RunRecord {
    std::uint64_t seed = 0;
    EffectiveTensor tensor;
    bool ok = false;
    std::string error;
};

/// Per-realization tensors plus aggregate statistics over the included runs.
struct BatchResult {
    MorphologySpec spec;
    std::vector<RunRecord> runs;
    int excluded = 0;
    bool escalated = false;
    double lambda_app = 0.0;
    double sigma = 0.0;        // sample standard deviation of per-run trace means
    FiveNumber quartiles;
    double offdiag_ratio = 0.0;

    std::vector<double> trace_means() const {
        std::vector<double> t;
        for (const auto& r : runs)
            if (r.ok) t.push_back(r.tensor.trace_mean());
        return t;
    }
};

/// lambda_app = mean over runs of (1/3) Tr(Lambda_hom).
inline double lambda_app(const std::vector<EffectiveTensor>& tensors) {
    if (tensors.empty()) throw DomainError("lambda_app: empty tensor list");
    double sum = 0.0;
    for (const auto& t : tensors) sum += t.trace_mean();
    return sum / static_cast<double>(tensors.size());
}

inline std::pair<double, double> confidence_band(const BatchResult& result) {
    if (result.runs.size() - result.excluded < 2)
        throw DomainError("confidence_band: need at least 2 runs");
    return {result.lambda_app - 2.0 * result.sigma, result.lambda_app + 2.0 * result.sigma};
}

inline FiveNumber boxplot_stats(const BatchResult& result) { return result.quartiles; }

// ---- batch orchestration -----------------------------------------------

struct BatchOptions {
    double acc = kDefaultAcc;
    int max_iter = kDefaultMaxIter;
    int workers = 1;
    int attempt_budget = kDefaultAttemptBudget;
    // re-run with more realizations when sigma / lambda_app exceeds the
    // threshold (the "sometimes 20" rule)
    bool escalate = false;
    double escalate_threshold = 0.05;
    int escalate_to = 20;
};

inline constexpr std::uint64_t kDefectSeedSalt = 0x6465666563747331ULL; // "defects1"

inline std::uint64_t run_seed(std::uint64_t base_seed, int run_index) {
    return splitmix64(base_seed ^ static_cast<std::uint64_t>(run_index));
}

/// One full realization: RSA packing, voxelization, optional defect
/// carving, homogenization.
inline EffectiveTensor run_realization(const MorphologySpec& spec, std::uint64_t seed,
                                       const BatchOptions& opts = {}) {
    const Geometry geo = generate_rsa(spec, seed, opts.attempt_budget);
    PhaseGrid grid = voxelize(geo, spec.resolution, spec.wave, spec.corrugation_periods);
    if (spec.f_def > 0.0)
        grid = carve_defects(grid, spec.f_def, spec.n_def, splitmix64(seed ^ kDefectSeedSalt));
    return homogenize(ConductivityField(grid, spec.contrast), opts.acc, opts.max_iter);
}

namespace detail {

inline void execute_runs(const MorphologySpec& spec, std::uint64_t base_seed, int first, int last,
                         std::vector<RunRecord>& records, const BatchOptions& opts) {
    std::atomic<int> next{first};
    auto worker = [&] {
        for (int i = next.fetch_add(1); i < last; i = next.fetch_add(1)) {
            RunRecord& rec = records[i];
            rec.seed = run_seed(base_seed, i);
            try {
                rec.tensor = run_realization(spec, rec.seed, opts);
                rec.ok = true;
            } catch (const std::exception& err) {
                rec.ok = false;
                rec.error = err.what();
            }
        }
    };
    const int nthreads = std::min(opts.workers, last - first);
    if (nthreads <= 1) {
        worker();
        return;
    }
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

inline void aggregate(BatchResult& result) {
    result.excluded = 0;
    std::vector<double> traces;
    double diag_sum = 0.0, offdiag_sum = 0.0;
    std::size_t diag_n = 0, offdiag_n = 0;
    for (const auto& r : result.runs) {
        if (!r.ok) {
            ++result.excluded;
            continue;
        }
        traces.push_back(r.tensor.trace_mean());
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                if (i == j) {
                    diag_sum += r.tensor.m[i][j];
                    ++diag_n;
                } else {
                    offdiag_sum += std::abs(r.tensor.m[i][j]);
                    ++offdiag_n;
                }
            }
    }
    const int n = static_cast<int>(result.runs.size());
    if (result.excluded * 5 > n)
        throw BatchFailed("batch: " + std::to_string(result.excluded) + " of " + std::to_string(n) +
                          " runs excluded (cap is 20%)");
    result.lambda_app = mean(traces);
    result.sigma = sample_stddev(traces);
    result.quartiles = five_number_summary(traces);
    result.offdiag_ratio = diag_n > 0 ? (offdiag_sum / offdiag_n) / (diag_sum / diag_n) : 0.0;
}

} // namespace detail

/// Generate, homogenize and aggregate n seeded realizations. Reproducible
/// per (spec, n, base_seed); failed runs are excluded and reported, the
/// batch fails when more than 20% are excluded.
inline BatchResult run_batch(const MorphologySpec& spec, int n, std::uint64_t base_seed,
                             const BatchOptions& opts = {}) {
    if (n < 1) throw DomainError("run_batch: need n >= 1");
    validate(spec);
    BatchResult result;
    result.spec = spec;
    result.runs.resize(n);
    detail::execute_runs(spec, base_seed, 0, n, result.runs, opts);
    detail::aggregate(result);

    if (opts.escalate && n < opts.escalate_to && result.sigma > opts.escalate_threshold * std::abs(result.lambda_app)) {
        result.runs.resize(opts.escalate_to);
        detail::execute_runs(spec, base_seed, n, opts.escalate_to, result.runs, opts);
        detail::aggregate(result);
        result.escalated = true;
    }
    return result;
}

// ---- CSV ---------------------------------------------------------------

inline void write_batch_csv(const BatchResult& result, std::ostream& out) {
    char buf[64];
    auto g17 = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    out << "# runs\n";
    out << "run,seed,status,l11,l12,l13,l21,l22,l23,l31,l32,l33,trace_mean,"
           "iter1,iter2,iter3,eps_eq1,eps_eq2,eps_eq3\n";
    for (std::size_t i = 0; i < result.runs.size(); ++i) {
        const auto& r = result.runs[i];
        out << i << "," << r.seed << "," << (r.ok ? "ok" : "excluded");
        if (r.ok) {
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) out << "," << g17(r.tensor.m[a][b]);
            out << "," << g17(r.tensor.trace_mean());
            for (int j = 0; j < 3; ++j) out << "," << r.tensor.iterations[j];
            for (int j = 0; j < 3; ++j) out << "," << g17(r.tensor.eps_eq[j]);
            out << "\n";
        } else {
            std::string msg = r.error;
            std::replace(msg.begin(), msg.end(), ',', ';');
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            out << ",,,,,,,,,,,,,,,," << msg << "\n";
        }
    }
    out << "# summary\n";
    out << "lambda_app,sigma,min,q1,median,q3,max,offdiag_ratio,runs,excluded,escalated\n";
    out << g17(result.lambda_app) << "," << g17(result.sigma) << "," << g17(result.quartiles.min)
        << "," << g17(result.quartiles.q1) << "," << g17(result.quartiles.median) << ","
        << g17(result.quartiles.q3) << "," << g17(result.quartiles.max) << ","
        << g17(result.offdiag_ratio) << "," << result.runs.size() << "," << result.excluded << ","
        << (result.escalated ? 1 : 0) << "\n";
}

} // namespace rvetherm
