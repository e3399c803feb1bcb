#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "powershave/devices.hpp"
#include "powershave/json.hpp"
#include "powershave/spikes.hpp"
#include "powershave/trace.hpp"

namespace powershave {

struct SimConfig {
    ThresholdSpec threshold = ThresholdSpec::fraction(0.7);
    double p_infra_w = 0.0;
    std::optional<double> grid_ramp_limit_w_per_s;  // default: 10% of rack_max per second
    double restart_penalty_s = 60.0;
    double gpu_unit_w = 700.0;
    double heat_factor = 1.3;
    double thermal_tau_s = 60.0;
    double t_ambient_c = 25.0;
    double t_max_c = 85.0;  // steady state at full rack heat
    double t_derate_c = 75.0;
    double derate_slope_per_c = 0.02;
    std::optional<double> max_dummy_w;  // unlimited when unset

    // Reserve dispatch used for active (battery) devices.
    bool active_dispatch = true;
    double active_reserve_frac = 0.03;   // grid held this far (fraction of rack_max) below the demand floor
    double active_window_s = 10.0;       // trailing window for the demand floor
    double active_soc_knee = 0.1;        // below this usable charge the grid target relaxes toward demand

    double ramp_limit(double rack_max_w) const {
        return grid_ramp_limit_w_per_s.value_or(0.1 * rack_max_w);
    }
    void validate() const;
};

SimConfig sim_config_from_json(const Json& j);
Json sim_config_to_json(const SimConfig& c);

struct Strategy {
    enum class Kind { none, ideal, device };
    Kind kind = Kind::none;
    DeviceSpec spec;
    std::string name = "none";
    std::optional<DeviceState> initial_state;  // overrides init_state when set

    static Strategy none() { return {}; }
    static Strategy ideal() { return {Kind::ideal, {}, "ideal", std::nullopt}; }
    static Strategy device(const DeviceSpec& s, std::string name) { return {Kind::device, s, std::move(name), std::nullopt}; }
};

struct ShavingResult {
    std::string strategy;
    double dt_s = 0.0;
    double rack_max_w = 0.0;
    double threshold_w = 0.0;
    double p_infra_w = 0.0;

    std::vector<double> p_comp_demand;
    std::vector<double> p_comp_served;
    std::vector<double> p_grid;
    std::vector<double> p_ext_discharge;
    std::vector<double> p_ext_charge;
    std::vector<double> p_dummy;
    std::vector<double> curtailed_w;
    std::vector<double> stored_j;
    std::vector<double> temperature_c;

    double total_dummy_energy_j = 0.0;
    double total_unserved_energy_j = 0.0;
    double curtailed_gpu_seconds = 0.0;
    std::size_t unserved_spike_count = 0;

    double initial_stored_j = 0.0;
    double final_stored_j = 0.0;
    double discharged_j = 0.0;         // sum delivered * dt
    double charged_j = 0.0;            // sum absorbed * dt (grid side)
    double stored_gain_j = 0.0;        // sum absorbed * dt * efficiency
    double device_energy_throughput_j = 0.0;
    double peak_grid_w = 0.0;
    std::size_t ramp_violation_steps = 0;
    long long first_violation_step = -1;
    double max_balance_residual_w = 0.0;

    std::size_t size() const { return p_comp_demand.size(); }
};

ShavingResult simulate_shaving(const PowerTrace& trace, const Strategy& strategy, const SimConfig& config);

std::size_t gpus_saved(const PowerTrace& trace, double threshold_frac, double min_burst_s, double gpu_unit_w);

double thermal_k_scale(const SimConfig& config, double rack_max_w);
double thermal_step(double temp_c, double heat_input_w, const SimConfig& config, double dt_s, double rack_max_w);
double derate_factor(double temp_c, const SimConfig& config);

double useful_energy_j(const ShavingResult& r, const SimConfig& config);
double computational_gain(const ShavingResult& result, const ShavingResult& baseline, const SimConfig& config);

std::string result_to_csv(const ShavingResult& r);
Json result_summary_json(const ShavingResult& r);

}  // namespace powershave
