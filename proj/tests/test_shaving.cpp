#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "powershave/error.hpp"
#include "powershave/shaving.hpp"

using namespace powershave;
using testing_support::make_trace;

namespace {

SimConfig loose(double threshold_w) {
    SimConfig c;
    c.threshold = ThresholdSpec::watts(threshold_w);
    c.grid_ramp_limit_w_per_s = 1e12;
    c.restart_penalty_s = 0.0;
    return c;
}

}  // namespace

TEST_CASE("no device: deficit above the threshold is curtailed") {
    auto t = make_trace({300, 900, 300}, 0.01, 1000.0);
    SimConfig c = loose(600);
    c.grid_ramp_limit_w_per_s.reset();
    auto r = simulate_shaving(t, Strategy::none(), c);
    CHECK(r.curtailed_w == std::vector<double>{0, 300, 0});
    CHECK(r.curtailed_gpu_seconds == doctest::Approx(1 * 0.01));
    CHECK(r.unserved_spike_count == 1);
    CHECK(r.total_unserved_energy_j == doctest::Approx(3.0));
}

TEST_CASE("curtailed units stay off for the restart penalty") {
    auto t = make_trace({300, 900, 300, 500, 500, 500, 500}, 0.01, 1000.0);
    SimConfig c = loose(600);
    c.restart_penalty_s = 0.025;
    auto r = simulate_shaving(t, Strategy::none(), c);
    // one 700 W unit is locked from step 2 until t = 0.02 + 0.025
    CHECK(r.p_comp_served[2] == 0.0);
    CHECK(r.p_comp_served[3] == 0.0);
    CHECK(r.p_comp_served[4] == 0.0);
    CHECK(r.p_comp_served[5] == 500.0);
    CHECK(r.curtailed_w[3] == 500.0);
    CHECK(r.curtailed_gpu_seconds == doctest::Approx(4 * 0.01));
}

TEST_CASE("ideal device with a free ramp draws min(demand, threshold) from the grid") {
    auto t = make_trace({100, 700, 950, 400, 999, 0}, 0.01, 1000.0);
    SimConfig c = loose(600);
    c.p_infra_w = 50.0;
    auto r = simulate_shaving(t, Strategy::ideal(), c);
    for (std::size_t i = 0; i < t.samples.size(); ++i) {
        CHECK(r.p_grid[i] == doctest::Approx(std::min(t.samples[i], 600.0) + 50.0));
        CHECK(r.curtailed_w[i] == 0.0);
    }
    CHECK(r.total_unserved_energy_j == 0.0);
}

TEST_CASE("ideal device absorbs the mandated ramp-down instead of dummy load") {
    auto t = make_trace({600, 0, 0, 0}, 1.0, 1000.0);
    SimConfig c;
    c.threshold = ThresholdSpec::watts(600);
    c.grid_ramp_limit_w_per_s = 100.0;
    auto r = simulate_shaving(t, Strategy::ideal(), c);
    CHECK(r.p_grid == std::vector<double>{600, 500, 400, 300});
    CHECK(r.p_ext_charge == std::vector<double>{0, 500, 400, 300});
    CHECK(r.total_dummy_energy_j == 0.0);
    CHECK(r.ramp_violation_steps == 0);
}

TEST_CASE("no device under a tight ramp limit fills valleys with dummy load") {
    auto t = make_trace({600, 0, 0, 600}, 1.0, 1000.0);
    SimConfig c;
    c.threshold = ThresholdSpec::watts(600);
    c.grid_ramp_limit_w_per_s = 100.0;
    auto r = simulate_shaving(t, Strategy::none(), c);
    CHECK(r.p_dummy == std::vector<double>{0, 500, 400, 0});
    CHECK(r.total_dummy_energy_j == doctest::Approx(900.0));
    CHECK(r.ramp_violation_steps == 1);
    CHECK(r.first_violation_step == 3);
}

TEST_CASE("capping dummy load surfaces a ramp violation") {
    auto t = make_trace({600, 0, 0}, 1.0, 1000.0);
    SimConfig c;
    c.threshold = ThresholdSpec::watts(600);
    c.grid_ramp_limit_w_per_s = 100.0;
    c.max_dummy_w = 100.0;
    auto r = simulate_shaving(t, Strategy::none(), c);
    CHECK(r.p_dummy[1] == 100.0);
    CHECK(r.ramp_violation_steps == 1);
    CHECK(r.first_violation_step == 1);
}

TEST_CASE("balance, grid cap and device bookkeeping on the calibrated trace") {
    SynthConfig sc;
    sc.duration_s = 120.0;
    const PowerTrace t = synthesize_trace(sc);
    SimConfig c;
    c.p_infra_w = 5000.0;
    for (const auto& s : {Strategy::none(), Strategy::ideal(), Strategy::device(capacitor_preset(), "capacitor"),
                          Strategy::device(supercap_preset(), "supercap"), Strategy::device(battery_preset(), "battery")}) {
        CAPTURE(s.name);
        auto r = simulate_shaving(t, s, c);
        CHECK(r.size() == t.samples.size());
        CHECK(r.max_balance_residual_w <= 1e-6 * t.rack_max_w);
        CHECK(r.peak_grid_w <= r.threshold_w + c.p_infra_w + 1e-9);
        for (std::size_t i = 0; i < r.size(); ++i) {
            CHECK(r.curtailed_w[i] == r.p_comp_demand[i] - r.p_comp_served[i]);
            CHECK(r.p_dummy[i] >= 0.0);
            CHECK(r.p_ext_charge[i] >= 0.0);
            CHECK(r.p_ext_discharge[i] >= 0.0);
        }
        if (s.kind == Strategy::Kind::device)
            CHECK(r.final_stored_j - r.initial_stored_j ==
                  doctest::Approx(r.stored_gain_j).epsilon(1e-9).scale(r.device_energy_throughput_j));
    }
}

TEST_CASE("battery loses fewer spikes than the capacitor on the calibrated trace") {
    const PowerTrace t = synthesize_trace(SynthConfig{});
    const SimConfig c;
    auto bat = simulate_shaving(t, Strategy::device(battery_preset(), "battery"), c);
    auto cap = simulate_shaving(t, Strategy::device(capacitor_preset(), "capacitor"), c);
    CHECK(bat.unserved_spike_count < cap.unserved_spike_count);
}

TEST_CASE("explicit initial state overrides the full start") {
    auto t = make_trace({100, 100}, 0.01, 1000.0);
    Strategy s = Strategy::device(capacitor_preset(), "cap");
    DeviceState st = init_state(s.spec);
    st.stored_j = 10.0;
    s.initial_state = st;
    auto r = simulate_shaving(t, s, loose(600));
    CHECK(r.initial_stored_j == 10.0);
}

TEST_CASE("gpus_saved worked example and zero cases") {
    auto t = make_trace({1000, 7950, 7950, 7950, 1000}, 0.01, 10000.0);
    CHECK(gpus_saved(t, 0.5, 0.02, 700.0) == 5);
    CHECK(gpus_saved(t, 0.5, 0.5, 700.0) == 0);
    CHECK(gpus_saved(t, 0.8, 0.0, 700.0) == 0);
    CHECK_THROWS_AS(gpus_saved(t, 0.0, 0.0, 700.0), Error);
    CHECK_THROWS_AS(gpus_saved(t, 0.5, -1.0, 700.0), Error);
    CHECK_THROWS_AS(gpus_saved(t, 0.5, 0.0, 0.0), Error);
}

TEST_CASE("thermal step fixed point, monotonicity and steady state") {
    SimConfig c;
    const double rack = 1000.0;
    CHECK(thermal_step(c.t_ambient_c, 0.0, c, 0.1, rack) == c.t_ambient_c);
    CHECK(thermal_step(40.0, 800.0, c, 0.1, rack) > thermal_step(40.0, 700.0, c, 0.1, rack));
    double T = c.t_ambient_c;
    for (int i = 0; i < 60000; ++i) T = thermal_step(T, c.heat_factor * rack, c, 0.01, rack);
    CHECK(T == doctest::Approx(c.t_max_c).epsilon(0.01));
}

TEST_CASE("derate factor") {
    SimConfig c;
    CHECK(derate_factor(50.0, c) == 1.0);
    CHECK(derate_factor(c.t_derate_c + 10.0, c) == doctest::Approx(1.0 - 10.0 * c.derate_slope_per_c));
    CHECK(derate_factor(1000.0, c) == 0.0);
}

TEST_CASE("computational gain of serving what the baseline curtails") {
    auto t = make_trace(std::vector<double>(50, 1000.0), 0.01, 1000.0);
    SimConfig c = loose(500);
    c.derate_slope_per_c = 0.0;
    auto base = simulate_shaving(t, Strategy::none(), c);
    auto ideal = simulate_shaving(t, Strategy::ideal(), c);
    CHECK(computational_gain(base, base, c) == 0.0);
    CHECK(computational_gain(ideal, base, c) == doctest::Approx(100.0));
    auto shorter = simulate_shaving(make_trace({1000.0}, 0.01, 1000.0), Strategy::none(), c);
    CHECK_THROWS_AS(computational_gain(shorter, base, c), Error);
}

TEST_CASE("sim config json") {
    SimConfig c;
    c.grid_ramp_limit_w_per_s = 500.0;
    c.max_dummy_w = 10.0;
    SimConfig back = sim_config_from_json(sim_config_to_json(c));
    CHECK(back.grid_ramp_limit_w_per_s == 500.0);
    CHECK(back.max_dummy_w == 10.0);
    CHECK(back.threshold.fraction_of_max == 0.7);
    CHECK_THROWS_AS(sim_config_from_json(Json{{"threshold_w", 1.0}, {"threshold_frac", 0.5}}), Error);
    CHECK_THROWS_AS(sim_config_from_json(Json{{"unknown", 1.0}}), Error);
    CHECK_THROWS_AS(sim_config_from_json(Json{{"gpu_unit_w", -1.0}}), Error);
    CHECK(sim_config_from_json(Json{{"threshold_w", 1.0}}).threshold.absolute_w == 1.0);
}

TEST_CASE("invalid inputs are rejected") {
    auto t = make_trace({1, 2}, 0.01, 1000.0);
    SimConfig c;
    c.thermal_tau_s = 0.0;
    CHECK_THROWS_AS(simulate_shaving(t, Strategy::none(), c), Error);
    CHECK_THROWS_AS(simulate_shaving(make_trace({}, 0.01), Strategy::none(), SimConfig{}), Error);
    CHECK_THROWS_AS(thermal_step(20.0, 0.0, SimConfig{}, 0.0, 1000.0), Error);
}

TEST_CASE("result csv and summary") {
    auto r = simulate_shaving(make_trace({100, 900}, 0.01, 1000.0), Strategy::none(), loose(600));
    const std::string csv = result_to_csv(r);
    CHECK(csv.rfind("p_comp_demand,p_comp_served,p_grid,p_ext_discharge,p_ext_charge,p_dummy,curtailed_w,stored_j,"
                    "temperature_c\n",
                    0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    Json j = result_summary_json(r);
    for (const auto& [k, v] : j.items()) CHECK_FALSE(v.is_array());
    CHECK(j["total_unserved_energy_j"].get<double>() == doctest::Approx(3.0));
}
