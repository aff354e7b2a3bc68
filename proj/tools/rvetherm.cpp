// Batch front-end for periodic two-phase RVE generation and FFT thermal
// homogenization.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "rvetherm/rvetherm.hpp"

namespace fs = std::filesystem;
using namespace rvetherm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfigError = 2;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

SweepConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

void print_warnings(const MorphologySpec& spec) {
    for (const auto& w : validate(spec)) std::cerr << "warning: " << w << "\n";
}

struct CommonFlags {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> resolution;
    std::optional<double> acc;
    int workers = 1;
};

void apply_overrides(SweepConfig& config, const CommonFlags& flags) {
    if (flags.seed) config.base.seed = *flags.seed;
    if (flags.resolution) config.base.resolution = *flags.resolution;
    if (flags.acc) config.acc = *flags.acc;
    if (flags.workers > 1) config.workers = flags.workers;
}

int cmd_generate(const CommonFlags& flags) {
    SweepConfig config = flags.config_path.empty() ? SweepConfig{} : load_config(flags.config_path);
    apply_overrides(config, flags);
    if (!config.axes.empty()) throw ConfigError("generate takes a single-point config (no axes)");
    const MorphologySpec& spec = config.base;
    print_warnings(spec);

    fs::create_directories(flags.out_dir);
    const Geometry geo = generate_rsa(spec, spec.seed);
    PhaseGrid grid = voxelize(geo, spec.resolution, spec.wave, spec.corrugation_periods);
    if (spec.f_def > 0.0)
        grid = carve_defects(grid, spec.f_def, spec.n_def, splitmix64(spec.seed ^ kDefectSeedSalt));

    const fs::path dir(flags.out_dir);
    std::ofstream(dir / "geometry.rve") << to_text(geo);
    write_grid(grid, (dir / "grid.rveg").string());
    write_fractions_csv(grid, (dir / "fractions.csv").string());
    std::cout << "wrote " << (dir / "geometry.rve").string() << ", " << (dir / "grid.rveg").string()
              << " (inclusion fraction " << grid.inclusion_fraction() << ")\n";
    return kExitOk;
}

int cmd_solve(const std::string& grid_path, double contrast, const CommonFlags& flags) {
    const PhaseGrid grid = read_grid(grid_path);
    const EffectiveTensor tensor =
        homogenize(ConductivityField(grid, contrast), flags.acc.value_or(kDefaultAcc));
    const std::string csv = tensor_csv(tensor);
    fs::create_directories(flags.out_dir);
    std::ofstream(fs::path(flags.out_dir) / "tensor.csv") << csv;
    std::cout << csv;
    return kExitOk;
}

int cmd_batch(const CommonFlags& flags) {
    SweepConfig config = load_config(flags.config_path);
    apply_overrides(config, flags);
    if (!config.axes.empty()) throw ConfigError("batch takes a single-point config (no axes); use sweep");
    const MorphologySpec& spec = config.base;
    print_warnings(spec);

    BatchOptions opts;
    opts.acc = config.acc;
    opts.workers = config.workers;
    opts.escalate = true;
    opts.escalate_to = std::max(20, spec.runs);
    const BatchResult result = run_batch(spec, spec.runs, spec.seed, opts);
    if (result.escalated)
        std::cerr << "note: escalated to " << result.runs.size()
                  << " runs (sigma/lambda_app above 5%)\n";

    fs::create_directories(flags.out_dir);
    std::ofstream out(fs::path(flags.out_dir) / "batch.csv");
    write_batch_csv(result, out);
    std::cout << "lambda_app " << result.lambda_app << "  sigma " << result.sigma << "  ("
              << result.runs.size() - result.excluded << " runs";
    if (result.excluded > 0) std::cout << ", " << result.excluded << " excluded";
    std::cout << ")\n";
    return kExitOk;
}

int cmd_sweep(const CommonFlags& flags) {
    SweepConfig config = load_config(flags.config_path);
    apply_overrides(config, flags);
    if (flags.out_dir != ".") config.output_dir = flags.out_dir;
    return run_sweep(config, [](const std::string& msg) { std::cerr << msg << "\n"; }) == 0
               ? kExitOk
               : kExitFailure;
}

// Built-in analytic-oracle suite, desk scale.
int cmd_validate(const CommonFlags& flags) {
    int failures = 0;
    auto check = [&](const std::string& name, bool ok, const std::string& detail) {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name;
        if (!detail.empty()) std::cout << " (" << detail << ")";
        std::cout << "\n";
        if (!ok) ++failures;
    };
    const double acc = flags.acc.value_or(kDefaultAcc);

    {
        PhaseGrid grid;
        grid.resolution = 32;
        grid.labels.assign(32 * 32 * 32, 0);
        const EffectiveTensor t = homogenize(ConductivityField(grid, 1.0), acc);
        double err = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) err = std::max(err, std::abs(t.m[i][j] - (i == j ? 1.0 : 0.0)));
        check("homogeneous identity (c=1)", err <= 1e-10, "max error " + std::to_string(err));
    }

    for (double c : {16.0, 2048.0}) {
        PhaseGrid grid;
        const int n = 32;
        grid.resolution = n;
        grid.labels.assign(std::size_t(n) * n * n, 0);
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n / 2; ++i) grid.at(i, j, k) = 1;
        // The tensor error decays linearly with the tolerance (amplified by
        // the contrast), so hitting 1e-6 relative needs a tight stop.
        const EffectiveTensor t = homogenize(ConductivityField(grid, c), std::min(acc, 1e-9));
        const double harmonic = 2.0 * c / (1.0 + c);
        const double arithmetic = (1.0 + c) / 2.0;
        const double err = std::max({std::abs(t.m[0][0] - harmonic) / harmonic,
                                     std::abs(t.m[1][1] - arithmetic) / arithmetic,
                                     std::abs(t.m[2][2] - arithmetic) / arithmetic});
        check("laminate means (c=" + std::to_string(int(c)) + ")", err <= 1e-6,
              "max relative error " + std::to_string(err));
    }

    {
        const double f = 0.05, c = 16.0;
        Geometry geo;
        geo.spheres.push_back({{0.5, 0.5, 0.5}, sphere_radius(1, f)});
        const PhaseGrid grid = voxelize(geo, 64);
        const EffectiveTensor t = homogenize(ConductivityField(grid, c), acc);
        const double mg = 1.0 + 3.0 * f * (c - 1.0) / (c + 2.0 - f * (c - 1.0));
        const double err = std::abs(t.trace_mean() - mg) / mg;
        check("dilute sphere vs Maxwell-Garnett", err <= 0.05, "relative error " + std::to_string(err));
    }

    {
        bool sound = true;
        std::string detail;
        for (int trial = 0; trial < 5 && sound; ++trial) {
            MorphologySpec spec;
            spec.n_sp = spec.n_cyl = 10;
            spec.f_sp = spec.f_cyl = 0.05;
            spec.aspect_ratio = 5.0;
            spec.resolution = 64;
            const Geometry geo = generate_rsa(spec, 1000 + trial);
            std::vector<Inclusion> all;
            for (const auto& s : geo.spheres) all.emplace_back(s);
            for (const auto& cyl : geo.cylinders) all.emplace_back(cyl);
            for (std::size_t i = 0; i < all.size() && sound; ++i)
                for (std::size_t j = i + 1; j < all.size(); ++j)
                    if (intersects(all[i], all[j])) {
                        sound = false;
                        detail = "intersecting pair in trial " + std::to_string(trial);
                        break;
                    }
            if (std::abs(analytic_fraction(geo) - 0.10) > 1e-12) {
                sound = false;
                detail = "analytic fraction off in trial " + std::to_string(trial);
            }
        }
        check("RSA soundness", sound, detail);
    }

    return failures == 0 ? kExitOk : kExitFailure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Periodic two-phase RVE generation and FFT thermal homogenization"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string grid_path;
    double contrast = 1.0;

    auto add_common = [&](CLI::App* cmd, bool with_config) {
        if (with_config) cmd->add_option("--config", flags.config_path, "config file path");
        cmd->add_option("--seed", flags.seed, "override the base RNG seed");
        cmd->add_option("--workers", flags.workers, "concurrent realizations");
        cmd->add_option("--resolution", flags.resolution, "override voxels per edge");
        cmd->add_option("--acc", flags.acc, "solver convergence tolerance");
        cmd->add_option("--out", flags.out_dir, "output directory");
    };

    auto* generate = app.add_subcommand("generate", "generate one geometry and phase grid");
    add_common(generate, true);

    auto* solve = app.add_subcommand("solve", "homogenize a phase-grid file");
    solve->add_option("--grid", grid_path, "phase-grid (.rveg) file")->required();
    solve->add_option("--contrast", contrast, "inclusion/matrix conductivity ratio")->required();
    add_common(solve, false);

    auto* batch = app.add_subcommand("batch", "run n seeded realizations of one spec");
    add_common(batch, true);
    batch->get_option("--config")->required();

    auto* sweep = app.add_subcommand("sweep", "run a parameter sweep from a config");
    add_common(sweep, true);
    sweep->get_option("--config")->required();

    auto* validate_cmd = app.add_subcommand("validate", "run the built-in analytic-oracle suite");
    add_common(validate_cmd, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (generate->parsed()) return cmd_generate(flags);
        if (solve->parsed()) return cmd_solve(grid_path, contrast, flags);
        if (batch->parsed()) return cmd_batch(flags);
        if (sweep->parsed()) return cmd_sweep(flags);
        if (validate_cmd->parsed()) return cmd_validate(flags);
    } catch (const ConfigError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return kExitConfigError;
    } catch (const DomainError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitFailure;
    }
    return kExitConfigError;
}
