#include "powershave/devices.hpp"

#include <algorithm>
#include <cmath>

#include "powershave/error.hpp"

namespace powershave {

const char* to_string(DeviceKind k) {
    switch (k) {
        case DeviceKind::capacitor: return "capacitor";
        case DeviceKind::supercapacitor: return "supercapacitor";
        case DeviceKind::battery: return "battery";
    }
    return "?";
}

DeviceKind device_kind_from_string(const std::string& s) {
    if (s == "capacitor") return DeviceKind::capacitor;
    if (s == "supercapacitor" || s == "supercap") return DeviceKind::supercapacitor;
    if (s == "battery") return DeviceKind::battery;
    fail(ErrorKind::invalid_argument, "unknown device kind '" + s + "' (capacitor, supercapacitor, battery)");
}

const char* to_string(Mode m) {
    switch (m) {
        case Mode::idle: return "idle";
        case Mode::charging: return "charging";
        case Mode::discharging: return "discharging";
        case Mode::switching: return "switching";
    }
    return "?";
}

void DeviceSpec::validate() const {
    auto bad = [](const std::string& m) { fail(ErrorKind::invalid_argument, "device spec: " + m); };
    if (!(energy_capacity_j > 0.0)) bad("energy_capacity_j must be positive");
    if (!(max_discharge_w > 0.0)) bad("max_discharge_w must be positive");
    if (!(max_charge_w >= 0.0)) bad("max_charge_w must be non-negative");
    if (!(response_tau_s >= 0.0) || !std::isfinite(response_tau_s)) bad("response_tau_s must be non-negative");
    if (!(switch_latency_s >= 0.0) || !std::isfinite(switch_latency_s)) bad("switch_latency_s must be non-negative");
    if (!(round_trip_efficiency > 0.0 && round_trip_efficiency <= 1.0)) bad("round_trip_efficiency must lie in (0, 1]");
    if (passive() && round_trip_efficiency != 1.0) bad("passive devices have round_trip_efficiency 1.0");
    if (!(soc_min_frac >= 0.0 && soc_min_frac < soc_max_frac && soc_max_frac <= 1.0))
        bad("need 0 <= soc_min_frac < soc_max_frac <= 1");
}

DeviceSpec device_spec_from_json(const Json& j) {
    if (!j.is_object()) fail(ErrorKind::invalid_argument, "device spec: expected a JSON object");
    static const char* known[] = {"kind",           "energy_capacity_j",    "max_discharge_w",
                                  "max_charge_w",   "response_tau_s",       "switch_latency_s",
                                  "round_trip_efficiency", "soc_min_frac", "soc_max_frac"};
    for (const auto& [k, v] : j.items()) {
        if (std::none_of(std::begin(known), std::end(known), [&](const char* s) { return k == s; }))
            fail(ErrorKind::invalid_argument, "device spec: unknown field '" + k + "'");
    }
    for (const char* req : {"kind", "energy_capacity_j", "max_discharge_w", "max_charge_w"})
        if (!j.contains(req)) fail(ErrorKind::invalid_argument, std::string("device spec: missing field '") + req + "'");
    auto num = [&](const char* key, double dflt) {
        if (!j.contains(key)) return dflt;
        if (!j.at(key).is_number())
            fail(ErrorKind::invalid_argument, std::string("device spec: field '") + key + "' must be a number");
        return j.at(key).get<double>();
    };
    if (!j.at("kind").is_string()) fail(ErrorKind::invalid_argument, "device spec: field 'kind' must be a string");
    DeviceSpec s;
    s.kind = device_kind_from_string(j.at("kind").get<std::string>());
    s.energy_capacity_j = num("energy_capacity_j", 0.0);
    s.max_discharge_w = num("max_discharge_w", 0.0);
    s.max_charge_w = num("max_charge_w", 0.0);
    s.response_tau_s = num("response_tau_s", 0.0);
    s.switch_latency_s = num("switch_latency_s", 0.0);
    s.round_trip_efficiency = num("round_trip_efficiency", 1.0);
    s.soc_min_frac = num("soc_min_frac", 0.0);
    s.soc_max_frac = num("soc_max_frac", 1.0);
    s.validate();
    return s;
}

Json device_spec_to_json(const DeviceSpec& s) {
    Json j;
    j["kind"] = to_string(s.kind);
    j["energy_capacity_j"] = s.energy_capacity_j;
    j["max_discharge_w"] = s.max_discharge_w;
    j["max_charge_w"] = s.max_charge_w;
    j["response_tau_s"] = s.response_tau_s;
    j["switch_latency_s"] = s.switch_latency_s;
    j["round_trip_efficiency"] = s.round_trip_efficiency;
    j["soc_min_frac"] = s.soc_min_frac;
    j["soc_max_frac"] = s.soc_max_frac;
    return j;
}

DeviceSpec capacitor_preset() {
    DeviceSpec s;
    s.kind = DeviceKind::capacitor;
    s.energy_capacity_j = 50.0;
    s.max_discharge_w = 20000.0;
    s.max_charge_w = 20000.0;
    s.response_tau_s = 0.002;
    return s;
}

DeviceSpec supercap_preset() {
    DeviceSpec s;
    s.kind = DeviceKind::supercapacitor;
    s.energy_capacity_j = 5000.0;
    s.max_discharge_w = 20000.0;
    s.max_charge_w = 20000.0;
    s.response_tau_s = 0.05;
    return s;
}

DeviceSpec battery_preset() {
    DeviceSpec s;
    s.kind = DeviceKind::battery;
    s.energy_capacity_j = 7.2e6;
    s.max_discharge_w = 35000.0;  // 25% of 140 kW
    s.max_charge_w = 35000.0;
    s.switch_latency_s = 0.01;
    s.round_trip_efficiency = 0.92;
    s.soc_min_frac = 0.1;
    s.soc_max_frac = 0.9;
    return s;
}

double capacitor_energy(double c, double v_max, double v_min) {
    if (!(c > 0.0)) fail(ErrorKind::invalid_argument, "capacitance must be positive");
    if (!(v_min >= 0.0) || v_max < v_min) fail(ErrorKind::invalid_argument, "need v_max >= v_min >= 0");
    return 0.5 * c * (v_max * v_max - v_min * v_min);
}

DeviceState init_state(const DeviceSpec& spec) {
    spec.validate();
    DeviceState s;
    s.stored_j = spec.max_energy_j();
    return s;
}

namespace {

double lag(double last, double target, double tau, double dt) {
    if (tau <= 0.0) return target;
    return last + (target - last) * -std::expm1(-dt / tau);
}

void passive_step(const DeviceSpec& spec, StepResult& r, double req, double avail, double dt) {
    DeviceState& st = r.state;
    const double lo = spec.min_energy_j(), hi = spec.max_energy_j();
    if (req > 0.0) {
        const double target = std::min({req, spec.max_discharge_w, std::max(0.0, st.stored_j - lo) / dt});
        r.delivered_w = std::clamp(lag(st.last_output_w, target, spec.response_tau_s, dt), 0.0, target);
        st.stored_j = std::max(lo, st.stored_j - r.delivered_w * dt);
        st.last_output_w = r.delivered_w;
        st.last_absorbed_w = 0.0;
        st.mode = r.delivered_w > 0.0 ? Mode::discharging : Mode::idle;
    } else {
        const double target = std::min({avail, spec.max_charge_w, std::max(0.0, hi - st.stored_j) / dt});
        r.absorbed_w = std::clamp(lag(st.last_absorbed_w, target, spec.response_tau_s, dt), 0.0, target);
        st.stored_j = std::min(hi, st.stored_j + r.absorbed_w * dt);
        st.last_absorbed_w = r.absorbed_w;
        st.last_output_w = 0.0;
        st.mode = r.absorbed_w > 0.0 ? Mode::charging : Mode::idle;
    }
}

void battery_step(const DeviceSpec& spec, StepResult& r, double req, double avail, double dt) {
    DeviceState& st = r.state;
    const double eps = 1e-9 * dt;
    const Mode want = req > 0.0 ? Mode::discharging : avail > 0.0 ? Mode::charging : Mode::idle;

    if (st.mode == Mode::switching) {
        if (want != Mode::idle && want != st.switch_target) {
            st.switch_target = want;
            st.switch_remaining_s = spec.switch_latency_s;
        }
        st.switch_remaining_s -= dt;
        if (st.switch_remaining_s <= eps) {
            st.mode = st.switch_target;
            st.switch_remaining_s = 0.0;
        }
        st.last_output_w = 0.0;
        return;
    }
    if (want == Mode::idle) {
        st.last_output_w = 0.0;
        return;
    }
    if (st.mode != want) {
        if (spec.switch_latency_s > eps) {
            st.mode = Mode::switching;
            st.switch_target = want;
            st.switch_remaining_s = spec.switch_latency_s - dt;
            if (st.switch_remaining_s <= eps) {
                st.mode = want;
                st.switch_remaining_s = 0.0;
            }
            st.last_output_w = 0.0;
            return;
        }
        st.mode = want;
    }
    const double lo = spec.min_energy_j(), hi = spec.max_energy_j();
    const double eff = spec.round_trip_efficiency;
    if (want == Mode::discharging) {
        r.delivered_w = std::min({req, spec.max_discharge_w, std::max(0.0, st.stored_j - lo) / dt});
        st.stored_j = std::max(lo, st.stored_j - r.delivered_w * dt);
    } else {
        r.absorbed_w = std::min({avail, spec.max_charge_w, std::max(0.0, hi - st.stored_j) / (dt * eff)});
        st.stored_j = std::min(hi, st.stored_j + r.absorbed_w * dt * eff);
    }
    st.last_output_w = r.delivered_w;
}

}  // namespace

StepResult device_step(const DeviceSpec& spec, const DeviceState& state, double req, double avail, double dt) {
    if (!(req >= 0.0) || !(avail >= 0.0)) fail(ErrorKind::invalid_argument, "device_step: negative request or availability");
    if (!(dt > 0.0)) fail(ErrorKind::invalid_argument, "device_step: dt must be positive");
    if (req > 0.0 && avail > 0.0)
        fail(ErrorKind::contract, "device_step: discharge request and charge availability in the same step");
    StepResult r;
    r.state = state;
    if (spec.passive()) passive_step(spec, r, req, avail, dt);
    else battery_step(spec, r, req, avail, dt);
    return r;
}

}  // namespace powershave
