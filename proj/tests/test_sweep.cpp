#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"
#include "powershave/error.hpp"
#include "powershave/sweep.hpp"

using namespace powershave;
using testing_support::make_trace;

TEST_CASE("axis ranges") {
    auto th = default_threshold_axis();
    auto bu = default_burst_axis();
    CHECK(th.size() == 10);
    CHECK(bu.size() == 11);
    CHECK(th[1] == 0.55);
    CHECK(th.back() == 0.95);
    CHECK(bu[3] == 0.06);
    CHECK(bu.back() == 0.2);
    CHECK(axis_range(1.0, 1.0, 0.5) == std::vector<double>{1.0});
    CHECK_THROWS_AS(axis_range(0.0, 1.0, 0.0), Error);
    CHECK_THROWS_AS(axis_range(1.0, 0.0, 0.1), Error);
}

TEST_CASE("1x1 grid equals the direct call") {
    auto t = make_trace({1000, 7950, 7950, 7950, 1000}, 0.01, 10000.0);
    auto g = sweep_gpus_saved(t, {0.5}, {0.02}, 700.0);
    REQUIRE(g.values.size() == 1);
    CHECK(g.values[0][0] == gpus_saved(t, 0.5, 0.02, 700.0));
}

TEST_CASE("flat trace below every threshold gives an all-zero grid") {
    auto t = make_trace(std::vector<double>(500, 400.0), 0.01, 1000.0);
    auto g = sweep_gpus_saved(t, default_threshold_axis(), default_burst_axis(), 700.0);
    for (const auto& row : g.values)
        for (auto v : row) CHECK(v == 0);
}

TEST_CASE("invalid axes are rejected") {
    auto t = make_trace({1, 2, 3}, 0.01, 10.0);
    CHECK_THROWS_AS(sweep_gpus_saved(t, {}, {0.0}, 700.0), Error);
    CHECK_THROWS_AS(sweep_gpus_saved(t, {0.6, 0.5}, {0.0}, 700.0), Error);
    CHECK_THROWS_AS(sweep_gpus_saved(t, {0.5}, {-0.1}, 700.0), Error);
    CHECK_THROWS_AS(sweep_gpus_saved(t, {1.5}, {0.0}, 700.0), Error);
}

TEST_CASE("grid export round trips in both formats") {
    SweepGrid g{{0.5, 0.75}, {0.0, 0.02, 0.04}, {{7, 3, 1}, {2, 0, 0}}, "lab"};
    for (auto f : {GridFormat::csv, GridFormat::json}) CHECK(import_grid(export_grid(g, f), f) == g);
    g.trace_label.clear();
    const std::string csv = export_grid(g, GridFormat::csv);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    CHECK(csv.substr(0, csv.find('\n')) == "threshold_frac,0,0.02,0.04");
    CHECK(import_grid(csv, GridFormat::csv) == g);
}

TEST_CASE("grid import errors") {
    CHECK_THROWS_AS(import_grid("nonsense", GridFormat::json), Error);
    CHECK_THROWS_AS(import_grid("threshold_frac,0\n0.5,x\n", GridFormat::csv), Error);
    CHECK_THROWS_AS(import_grid("threshold_frac,0,1\n0.5,1\n", GridFormat::csv), Error);
    CHECK_THROWS_AS(import_grid("0.5,1\n", GridFormat::csv), Error);
    CHECK_THROWS_AS(grid_format_from_string("xml"), Error);
    CHECK(grid_format_from_string("json") == GridFormat::json);
}

TEST_CASE("compare orders rows as given and measures gain against no device") {
    auto t = make_trace({300, 900, 300, 900, 300}, 0.01, 1000.0);
    SimConfig c;
    c.threshold = ThresholdSpec::watts(600);
    c.grid_ramp_limit_w_per_s = 1e12;
    c.derate_slope_per_c = 0.0;
    auto rows = compare_strategies(t, {Strategy::ideal(), Strategy::none()}, c);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].strategy_name == "ideal");
    CHECK(rows[1].strategy_name == "none");
    CHECK(rows[1].computational_gain_pct == 0.0);
    CHECK(rows[0].computational_gain_pct > 0.0);
    CHECK(rows[0].total_unserved_energy_j == 0.0);
}

TEST_CASE("compare rejects duplicate names and annotates failures") {
    auto t = make_trace({300, 900}, 0.01, 1000.0);
    SimConfig c;
    CHECK_THROWS_AS(compare_strategies(t, {Strategy::ideal(), Strategy::ideal()}, c), Error);
    CHECK_THROWS_AS(compare_strategies(t, {}, c), Error);
    DeviceSpec bad = capacitor_preset();
    bad.max_discharge_w = -1.0;
    try {
        compare_strategies(t, {Strategy::device(bad, "broken")}, c);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("broken") != std::string::npos);
    }
}

TEST_CASE("comparison csv header") {
    const std::string csv = comparison_to_csv({ComparisonRow{"x", 1, 2, 3, 4, 5}});
    CHECK(csv == "strategy_name,computational_gain_pct,dummy_energy_j,total_unserved_energy_j,device_energy_throughput_j,"
                 "peak_grid_w\nx,1,2,3,4,5\n");
}
