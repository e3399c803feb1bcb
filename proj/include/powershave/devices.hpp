#pragma once

#include <string>

#include "powershave/json.hpp"

namespace powershave {

enum class DeviceKind { capacitor, supercapacitor, battery };

const char* to_string(DeviceKind k);
DeviceKind device_kind_from_string(const std::string& s);

struct DeviceSpec {
    DeviceKind kind = DeviceKind::capacitor;
    double energy_capacity_j = 0.0;
    double max_discharge_w = 0.0;
    double max_charge_w = 0.0;
    double response_tau_s = 0.0;
    double switch_latency_s = 0.0;
    double round_trip_efficiency = 1.0;
    double soc_min_frac = 0.0;
    double soc_max_frac = 1.0;

    bool passive() const { return kind != DeviceKind::battery; }
    double min_energy_j() const { return soc_min_frac * energy_capacity_j; }
    double max_energy_j() const { return soc_max_frac * energy_capacity_j; }
    void validate() const;
};

DeviceSpec device_spec_from_json(const Json& j);
Json device_spec_to_json(const DeviceSpec& s);

// Shipped presets, sized for the default 140 kW rack.
DeviceSpec capacitor_preset();
DeviceSpec supercap_preset();
DeviceSpec battery_preset();

enum class Mode { idle, charging, discharging, switching };

const char* to_string(Mode m);

struct DeviceState {
    double stored_j = 0.0;
    Mode mode = Mode::idle;
    Mode switch_target = Mode::idle;  // meaningful while mode == switching
    double switch_remaining_s = 0.0;
    double last_output_w = 0.0;
    double last_absorbed_w = 0.0;  // lag state on the charging side (passive kinds)
};

struct StepResult {
    double delivered_w = 0.0;
    double absorbed_w = 0.0;
    DeviceState state;
};

double capacitor_energy(double capacitance_f, double v_max, double v_min);

DeviceState init_state(const DeviceSpec& spec);

StepResult device_step(const DeviceSpec& spec, const DeviceState& state, double requested_discharge_w,
                       double available_charge_w, double dt_s);

}  // namespace powershave
