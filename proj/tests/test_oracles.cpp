// Independent oracles and frozen reference values.
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "helpers.hpp"
#include "powershave/devices.hpp"
#include "powershave/shaving.hpp"
#include "powershave/spikes.hpp"
#include "powershave/sweep.hpp"

using namespace powershave;
using namespace testing_support;

TEST_CASE("detector matches the edge-mask scan on random traces") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> frac(0.05, 0.99);
    for (int k = 0; k < 200; ++k) {
        PowerTrace t = random_trace(rng, 3000);
        const double theta = frac(rng) * t.rack_max_w;
        auto fast = detect_spikes_at(t, theta);
        auto ref = naive_spikes(t.samples, theta);
        REQUIRE(fast.size() == ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i) {
            CHECK(fast[i].start_index == ref[i].start);
            CHECK(fast[i].length == ref[i].len);
            CHECK(fast[i].peak_excess_w == ref[i].peak - theta);
            CHECK(fast[i].energy_above_j == doctest::Approx(ref[i].excess_sum * t.dt_s).epsilon(1e-12));
        }
    }
}

TEST_CASE("nearest rank agrees with the integer rank formula") {
    std::mt19937_64 rng(11);
    for (int k = 0; k < 300; ++k) {
        std::vector<double> v(1 + rng() % 97);
        for (auto& x : v) x = static_cast<double>(rng() % 1000);
        std::vector<double> sorted = v;
        std::sort(sorted.begin(), sorted.end());
        for (int p : {1, 5, 50, 85, 90, 95, 99, 100}) {
            // smallest rank r with 100 * r >= p * n
            std::size_t r = 1;
            while (100 * r < static_cast<std::size_t>(p) * v.size()) ++r;
            CHECK(nearest_rank(v, p) == sorted[r - 1]);
        }
    }
}

TEST_CASE("passive step response follows R(1 - exp(-t/tau))") {
    for (double tau : {0.002, 0.05, 0.3}) {
        DeviceSpec s = capacitor_preset();
        s.energy_capacity_j = 1e9;
        s.max_discharge_w = 1e9;
        s.response_tau_s = tau;
        DeviceState st = init_state(s);
        const double dt = tau / 10.0, R = 5000.0;
        for (int k = 1; k <= 80; ++k) {
            auto r = device_step(s, st, R, 0.0, dt);
            st = r.state;
            CHECK(r.delivered_w == doctest::Approx(R * (1.0 - std::exp(-k * dt / tau))).epsilon(1e-9));
        }
    }
}

TEST_CASE("thermal response tracks the closed-form first-order solution") {
    SimConfig c;
    const double rack = 140000.0, heat = 0.6 * rack * c.heat_factor, dt = 0.005;
    const double t_inf = c.t_ambient_c + heat * thermal_k_scale(c, rack);
    double T = c.t_ambient_c;
    for (int k = 1; k <= 60000; ++k) {
        T = thermal_step(T, heat, c, dt, rack);
        if (k % 6000 == 0) {
            const double exact = t_inf + (c.t_ambient_c - t_inf) * std::exp(-k * dt / c.thermal_tau_s);
            CHECK(T == doctest::Approx(exact).epsilon(0.01));
        }
    }
    CHECK(t_inf == doctest::Approx(c.t_ambient_c + 0.6 * (c.t_max_c - c.t_ambient_c)));
}

TEST_CASE("hand-evaluated shaving example") {
    SimConfig c;
    c.threshold = ThresholdSpec::watts(600);
    c.restart_penalty_s = 0.0;
    auto r = simulate_shaving(make_trace({300, 900, 300}, 0.01, 1000.0), Strategy::none(), c);
    CHECK(r.curtailed_w == std::vector<double>{0, 300, 0});
    CHECK(static_cast<int>(std::ceil(r.curtailed_w[1] / c.gpu_unit_w)) == 1);
}

TEST_CASE("gpus saved reference arithmetic") {
    auto t = make_trace({0, 7950, 7950, 0}, 0.01, 10000.0);
    CHECK(gpus_saved(t, 0.5, 0.0, 700.0) == 5);  // ceil(2950 / 700)
}

TEST_CASE("default sweep axes have 10 x 11 cells") {
    CHECK(default_threshold_axis().size() * default_burst_axis().size() == 110);
}

TEST_CASE("calibrated trace lies inside the reported spike bands") {
    const PowerTrace t = synthesize_trace(SynthConfig{});
    const auto spikes = detect_spikes(t, ThresholdSpec::fraction(0.7));
    const SpikeStats s = spike_statistics(spikes, default_energy_bins());
    std::size_t in_e = 0, in_p = 0;
    for (const auto& sp : spikes) {
        in_e += sp.energy_above_j >= 5.0 && sp.energy_above_j <= 100.0;
        const double d = sp.peak_frac - 0.7;
        in_p += d >= 0.01 && d <= 0.05;
    }
    const double n = static_cast<double>(spikes.size());
    CHECK(s.frac_leq_100ms >= 0.85);
    CHECK(s.frac_leq_100ms <= 0.95);
    CHECK(s.energy_mean_j >= 40.0);
    CHECK(s.energy_mean_j <= 60.0);
    CHECK(in_e / n >= 0.90);
    CHECK(in_p / n >= 0.85);
}

TEST_CASE("frozen calibrated-trace reference values") {
    // Recorded from the default generator; guards against silent changes to the synthetic workload.
    const PowerTrace t = synthesize_trace(SynthConfig{});
    const auto spikes = detect_spikes(t, ThresholdSpec::fraction(0.7));
    const SpikeStats s = spike_statistics(spikes, default_energy_bins());
    CHECK(t.samples.size() == 120000);
    CHECK(spikes.size() == 8548);
    CHECK(s.frac_leq_100ms == doctest::Approx(0.942).epsilon(0.001));
    CHECK(s.energy_mean_j == doctest::Approx(53.2).epsilon(0.002));
    CHECK(gpus_saved(t, 0.7, 0.02, 700.0) == 19);
}
