#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "rvetherm/rvetherm.hpp"

using namespace rvetherm;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("sweep produces per-point, combined, plot and manifest outputs") {
    const fs::path dir = fs::temp_directory_path() / "rvetherm_sweep_test";
    fs::remove_all(dir);

    SweepConfig config = parse_config(
        "f_sp = 0.04\n"
        "f_cyl = 0.04\n"
        "n_sp = 4\n"
        "n_cyl = 4\n"
        "resolution = 16\n"
        "contrast = {4, 16}\n"
        "runs = 2\n"
        "seed = 21\n"
        "acc = 1e-5\n"
        "emit_grids = true\n");
    config.output_dir = dir.string();

    SweepReport report;
    std::vector<std::string> log;
    const int rc = run_sweep(config, [&](const std::string& m) { log.push_back(m); }, &report);
    CHECK(rc == 0);
    CHECK(report.failures == 0);
    REQUIRE(report.results.size() == 2);
    CHECK(report.ok[0]);
    CHECK(report.ok[1]);
    CHECK_FALSE(log.empty());

    // per-point batch CSVs named by their axis values
    CHECK(fs::exists(dir / "point_0000__contrast=4.csv"));
    CHECK(fs::exists(dir / "point_0001__contrast=16.csv"));

    // emit_grids regenerates grid + geometry per run
    CHECK(fs::exists(dir / "point_0000__contrast=4_run0.rveg"));
    CHECK(fs::exists(dir / "point_0000__contrast=4_run1.rve"));
    const PhaseGrid grid = read_grid((dir / "point_0000__contrast=4_run0.rveg").string());
    CHECK(grid.resolution == 16);

    // combined long-format table: axis column plus summary stats per point
    const std::string combined = slurp(dir / "combined.csv");
    CHECK(combined.rfind("point,contrast,lambda_app,", 0) == 0);
    CHECK(combined.find("\n0,4,") != std::string::npos);
    CHECK(combined.find("\n1,16,") != std::string::npos);
    CHECK(combined.find("FAILED") == std::string::npos);

    // plot table carries the +-2 sigma band, consistent with the report
    const std::string plot = slurp(dir / "plot_contrast.csv");
    CHECK(plot.rfind("contrast,lambda_app,lambda_minus_2sigma,lambda_plus_2sigma", 0) == 0);
    const auto& r0 = report.results[0];
    char expect[64];
    std::snprintf(expect, sizeof expect, "%.17g", r0.lambda_app);
    CHECK(plot.find(expect) != std::string::npos);

    // manifest records version, axes, per-point params and seeds
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest["version"] == kVersion);
    CHECK(manifest["base_seed"] == 21);
    CHECK(manifest["axes"]["contrast"].size() == 2);
    REQUIRE(manifest["points"].size() == 2);
    CHECK(manifest["points"][0]["status"] == "ok");
    CHECK(manifest["points"][0]["params"]["contrast"] == 4.0);
    CHECK(manifest["points"][0]["seeds"].size() == 2);
    CHECK(manifest["points"][0]["seeds"][0] == run_seed(21, 0));

    // effective conductivity grows with contrast for the same geometry
    CHECK(report.results[1].lambda_app > report.results[0].lambda_app);

    fs::remove_all(dir);
}
