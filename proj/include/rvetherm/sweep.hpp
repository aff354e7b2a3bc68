#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>

#include <json.hpp>

#include "config.hpp"
#include "stochastic.hpp"

namespace rvetherm {

inline constexpr const char* kVersion = "0.1.0";

namespace detail {

inline std::string format_value(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline std::string point_filename(const SweepConfig& config, std::size_t p) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "point_%04zu", p);
    std::string name = buf;
    for (const auto& [key, value] : point_params(config, p))
        name += "__" + key + "=" + format_value(value);
    return name;
}

} // namespace detail

struct SweepReport {
    int failures = 0;
    std::vector<BatchResult> results; // indexed by flat point id; failed points keep defaults
    std::vector<bool> ok;
};

/// Execute every sweep point, writing per-point batch CSVs, a combined
/// long-format table, per-axis plot data and an execution manifest.
/// Returns 0 on success, 1 if any point hard-failed (partial results are
/// kept next to a FAILED marker).
inline int run_sweep(const SweepConfig& config,
                     const std::function<void(const std::string&)>& log = {},
                     SweepReport* report_out = nullptr) {
    namespace fs = std::filesystem;
    const fs::path dir(config.output_dir);
    fs::create_directories(dir);

    const std::size_t n_points = config.point_count();
    SweepReport report;
    report.results.resize(n_points);
    report.ok.assign(n_points, false);

    BatchOptions opts;
    opts.acc = config.acc;
    opts.workers = config.workers;
    opts.escalate = true;

    nlohmann::json manifest;
    manifest["version"] = kVersion;
    manifest["base_seed"] = config.base.seed;
    manifest["runs"] = config.base.runs;
    manifest["acc"] = config.acc;
    manifest["workers"] = config.workers;
    manifest["started"] = std::chrono::duration_cast<std::chrono::seconds>(
                              std::chrono::system_clock::now().time_since_epoch())
                              .count();
    for (const auto& [name, values] : config.axes) manifest["axes"][name] = values;
    manifest["points"] = nlohmann::json::array();

    for (std::size_t p = 0; p < n_points; ++p) {
        const MorphologySpec spec = spec_for_point(config, p);
        const std::string stem = detail::point_filename(config, p);
        nlohmann::json entry;
        entry["point"] = p;
        for (const auto& [key, value] : point_params(config, p)) entry["params"][key] = value;
        entry["seeds"] = nlohmann::json::array();
        for (int i = 0; i < spec.runs; ++i) entry["seeds"].push_back(run_seed(spec.seed, i));

        const auto t0 = std::chrono::steady_clock::now();
        try {
            if (log) log("point " + std::to_string(p + 1) + "/" + std::to_string(n_points) + " " + stem);
            BatchResult result = run_batch(spec, spec.runs, spec.seed, opts);
            if (result.escalated && log)
                log("point " + std::to_string(p) + ": escalated to " +
                    std::to_string(result.runs.size()) + " runs (sigma/lambda_app > " +
                    std::to_string(opts.escalate_threshold) + ")");
            {
                std::ofstream out(dir / (stem + ".csv"));
                write_batch_csv(result, out);
            }
            if (config.emit_grids) {
                for (std::size_t i = 0; i < result.runs.size(); ++i) {
                    const Geometry geo = generate_rsa(spec, result.runs[i].seed, opts.attempt_budget);
                    PhaseGrid grid = voxelize(geo, spec.resolution, spec.wave, spec.corrugation_periods);
                    if (spec.f_def > 0.0)
                        grid = carve_defects(grid, spec.f_def, spec.n_def,
                                             splitmix64(result.runs[i].seed ^ kDefectSeedSalt));
                    write_grid(grid, (dir / (stem + "_run" + std::to_string(i) + ".rveg")).string());
                    std::ofstream geo_out(dir / (stem + "_run" + std::to_string(i) + ".rve"));
                    geo_out << to_text(geo);
                }
            }
            report.results[p] = std::move(result);
            report.ok[p] = true;
            entry["status"] = "ok";
        } catch (const std::exception& err) {
            ++report.failures;
            entry["status"] = "failed";
            entry["error"] = err.what();
            std::ofstream marker(dir / (stem + ".FAILED"));
            marker << err.what() << "\n";
            if (log) log("point " + std::to_string(p) + " FAILED: " + err.what());
        }
        entry["seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        manifest["points"].push_back(std::move(entry));
    }

    // combined long-format table
    {
        std::ofstream out(dir / "combined.csv");
        out << "point";
        for (const auto& [name, values] : config.axes) out << "," << name;
        out << ",lambda_app,sigma,min,q1,median,q3,max,offdiag_ratio,runs,excluded,status\n";
        char buf[48];
        auto g17 = [&](double v) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return std::string(buf);
        };
        for (std::size_t p = 0; p < n_points; ++p) {
            out << p;
            for (const auto& [key, value] : point_params(config, p))
                out << "," << detail::format_value(value);
            if (report.ok[p]) {
                const auto& r = report.results[p];
                out << "," << g17(r.lambda_app) << "," << g17(r.sigma) << ","
                    << g17(r.quartiles.min) << "," << g17(r.quartiles.q1) << ","
                    << g17(r.quartiles.median) << "," << g17(r.quartiles.q3) << ","
                    << g17(r.quartiles.max) << "," << g17(r.offdiag_ratio) << ","
                    << r.runs.size() << "," << r.excluded << ",ok\n";
            } else {
                out << ",,,,,,,,,,,FAILED\n";
            }
        }
    }

    // plot-ready data: one file per swept axis, y = lambda_app with a
    // +-2 sigma band, the other axes as grouping columns
    for (std::size_t axis = 0; axis < config.axes.size(); ++axis) {
        const auto& [axis_name, axis_values] = config.axes[axis];
        std::ofstream out(dir / ("plot_" + axis_name + ".csv"));
        out << axis_name;
        for (std::size_t k = 0; k < config.axes.size(); ++k)
            if (k != axis) out << "," << config.axes[k].first;
        out << ",lambda_app,lambda_minus_2sigma,lambda_plus_2sigma\n";
        for (std::size_t p = 0; p < n_points; ++p) {
            if (!report.ok[p]) continue;
            const auto params = point_params(config, p);
            const auto& r = report.results[p];
            out << detail::format_value(params[axis].second);
            for (std::size_t k = 0; k < params.size(); ++k)
                if (k != axis) out << "," << detail::format_value(params[k].second);
            char buf[160];
            std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g\n", r.lambda_app,
                          r.lambda_app - 2.0 * r.sigma, r.lambda_app + 2.0 * r.sigma);
            out << buf;
        }
    }

    {
        std::ofstream out(dir / "manifest.json");
        out << manifest.dump(2) << "\n";
    }

    if (report_out) *report_out = std::move(report);
    return report.failures > 0 ? 1 : 0;
}

} // namespace rvetherm
