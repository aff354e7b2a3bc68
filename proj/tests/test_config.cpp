#include <catch2/catch_amalgamated.hpp>

#include "rvetherm/rvetherm.hpp"

using namespace rvetherm;

TEST_CASE("minimal config keeps documented defaults") {
    const SweepConfig c = parse_config("f_sp = 0.1\n");
    CHECK(c.base.f_sp == 0.1);
    CHECK(c.base.f_cyl == 0.0);
    CHECK(c.base.n_sp == 20);
    CHECK(c.base.n_cyl == 20);
    CHECK(c.base.aspect_ratio == 5.0);
    CHECK(c.base.resolution == 192);
    CHECK(c.base.corrugation_periods == 3);
    CHECK(c.base.runs == 10);
    CHECK(c.acc == 1e-6);
    CHECK(c.workers == 1);
    CHECK(c.max_points == 10000);
    CHECK(c.output_dir == "out");
    CHECK_FALSE(c.emit_grids);
    CHECK(c.axes.empty());
    CHECK(c.point_count() == 1);
}

TEST_CASE("comments, blank lines and scalar keys parse") {
    const SweepConfig c = parse_config(
        "# a comment\n"
        "\n"
        "f_sp = 0.05   # trailing comment\n"
        "f_cyl = 0.05\n"
        "a = 7.5\n"
        "wave = 0.15\n"
        "periods = 4\n"
        "seed = 99\n"
        "runs = 5\n"
        "resolution = 96\n"
        "contrast = 2^11\n"
        "acc = 1e-7\n"
        "workers = 2\n"
        "out = results\n"
        "emit_grids = true\n");
    CHECK(c.base.aspect_ratio == 7.5);
    CHECK(c.base.wave == 0.15);
    CHECK(c.base.corrugation_periods == 4);
    CHECK(c.base.seed == 99);
    CHECK(c.base.runs == 5);
    CHECK(c.base.resolution == 96);
    CHECK(c.base.contrast == 2048.0);
    CHECK(c.acc == 1e-7);
    CHECK(c.workers == 2);
    CHECK(c.output_dir == "results");
    CHECK(c.emit_grids);
}

TEST_CASE("octave range expands the full contrast ladder") {
    const SweepConfig c = parse_config("f_sp = 0.1\ncontrast = 2^-4 .. 2^11\n");
    REQUIRE(c.axes.size() == 1);
    CHECK(c.axes[0].first == "contrast");
    const auto& v = c.axes[0].second;
    REQUIRE(v.size() == 16);
    CHECK(v.front() == Catch::Approx(0.0625));
    CHECK(v[4] == Catch::Approx(1.0));
    CHECK(v.back() == Catch::Approx(2048.0));
    CHECK(c.point_count() == 16);
}

TEST_CASE("list axes and cartesian products") {
    const SweepConfig c = parse_config(
        "f_sp = 0.1\n"
        "a = {3, 6, 9, 12}\n"
        "wave = {0, 0.15, 0.3}\n");
    REQUIRE(c.axes.size() == 2);
    CHECK(c.axes[0].second == std::vector<double>{3, 6, 9, 12});
    CHECK(c.point_count() == 12);

    // row-major: first axis slowest
    const auto p0 = point_params(c, 0);
    CHECK(p0[0].second == 3.0);
    CHECK(p0[1].second == 0.0);
    const auto p5 = point_params(c, 5);
    CHECK(p5[0].second == 6.0);
    CHECK(p5[1].second == 0.3);

    const MorphologySpec s5 = spec_for_point(c, 5);
    CHECK(s5.aspect_ratio == 6.0);
    CHECK(s5.wave == 0.3);
    CHECK(s5.f_sp == 0.1); // base untouched
}

TEST_CASE("config errors carry line positions") {
    try {
        parse_config("f_sp = 0.1\nnot a line\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line == 2);
    }
    try {
        parse_config("f_sp = {}\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line == 1);
        CHECK(e.column > 1);
    }
    CHECK_THROWS_AS(parse_config("mystery = 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("f_sp = banana\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("f_sp =\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("= 0.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("n_sp = 2.5\n"), ConfigError);       // integer key
    CHECK_THROWS_AS(parse_config("n_sp = {2, 2.5}\n"), ConfigError);  // integer axis
    CHECK_THROWS_AS(parse_config("emit_grids = maybe\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("a = {3,6}\na = {9,12}\n"), ConfigError); // duplicate axis
    CHECK_THROWS_AS(parse_config("contrast = 3 .. 7\n"), ConfigError);    // not a power of 2 apart
    CHECK_THROWS_AS(parse_config("contrast = 8 .. 2\n"), ConfigError);    // descending
    CHECK_THROWS_AS(parse_config("runs = {5, 10}\n"), ConfigError);       // scalar-only key
}

TEST_CASE("range violations surface at parse time per sweep point") {
    // the second f_cyl value pushes f_sp + f_cyl over the packing limit
    CHECK_THROWS_AS(parse_config("f_sp = 0.2\nf_cyl = {0.05, 0.15}\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("f_sp = 0.1\na = 0.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("f_sp = 0.1\nresolution = 33\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("f_sp = 0.1\nwave = 1.5\n"), ConfigError);
    // soft documented-range violations are warnings, not config errors
    CHECK_NOTHROW(parse_config("f_sp = 0.1\nwave = 0.32\n"));
}

TEST_CASE("the point cap rejects oversized sweeps") {
    CHECK_THROWS_AS(parse_config("f_sp = 0.1\nmax_points = 4\na = {1, 2, 3, 4, 5}\n"), ConfigError);
    CHECK_NOTHROW(parse_config("f_sp = 0.1\nmax_points = 5\na = {1, 2, 3, 4, 5}\n"));
}
