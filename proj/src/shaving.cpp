#include "powershave/shaving.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <utility>

#include "format.hpp"
#include "powershave/error.hpp"

namespace powershave {

void SimConfig::validate() const {
    auto bad = [](const std::string& m) { fail(ErrorKind::invalid_argument, "sim config: " + m); };
    if (threshold.absolute_w.has_value() == threshold.fraction_of_max.has_value())
        bad("exactly one of threshold_w or threshold_frac is required");
    if (!(p_infra_w >= 0.0)) bad("p_infra_w must be non-negative");
    if (grid_ramp_limit_w_per_s && !(*grid_ramp_limit_w_per_s > 0.0)) bad("grid_ramp_limit_w_per_s must be positive");
    if (!(restart_penalty_s >= 0.0)) bad("restart_penalty_s must be non-negative");
    if (!(gpu_unit_w > 0.0)) bad("gpu_unit_w must be positive");
    if (!(heat_factor >= 0.0)) bad("heat_factor must be non-negative");
    if (!(thermal_tau_s > 0.0)) bad("thermal_tau_s must be positive");
    if (!(t_max_c > t_ambient_c)) bad("t_max_c must exceed t_ambient_c");
    if (!(derate_slope_per_c >= 0.0)) bad("derate_slope_per_c must be non-negative");
    if (max_dummy_w && !(*max_dummy_w >= 0.0)) bad("max_dummy_w must be non-negative");
    if (!(active_reserve_frac >= 0.0 && active_reserve_frac < 1.0)) bad("active_reserve_frac must lie in [0, 1)");
    if (!(active_window_s > 0.0)) bad("active_window_s must be positive");
    if (!(active_soc_knee > 0.0 && active_soc_knee <= 1.0)) bad("active_soc_knee must lie in (0, 1]");
}

namespace {

const char* kSimKeys[] = {"threshold_w",        "threshold_frac",      "p_infra_w",           "grid_ramp_limit_w_per_s",
                          "restart_penalty_s",  "gpu_unit_w",          "heat_factor",         "thermal_tau_s",
                          "t_ambient_c",        "t_max_c",             "t_derate_c",          "derate_slope_per_c",
                          "max_dummy_w",        "active_dispatch",     "active_reserve_frac", "active_window_s",
                          "active_soc_knee"};

}  // namespace

SimConfig sim_config_from_json(const Json& j) {
    if (!j.is_object()) fail(ErrorKind::invalid_argument, "sim config: expected a JSON object");
    for (const auto& [k, v] : j.items()) {
        if (std::none_of(std::begin(kSimKeys), std::end(kSimKeys), [&](const char* s) { return k == s; }))
            fail(ErrorKind::invalid_argument, "sim config: unknown field '" + k + "'");
    }
    auto num = [&](const char* key) -> std::optional<double> {
        if (!j.contains(key)) return std::nullopt;
        if (!j.at(key).is_number())
            fail(ErrorKind::invalid_argument, std::string("sim config: field '") + key + "' must be a number");
        return j.at(key).get<double>();
    };
    SimConfig c;
    auto tw = num("threshold_w");
    auto tf = num("threshold_frac");
    if (tw && tf) fail(ErrorKind::invalid_argument, "sim config: threshold_w and threshold_frac are mutually exclusive");
    if (tw) c.threshold = ThresholdSpec::watts(*tw);
    if (tf) c.threshold = ThresholdSpec::fraction(*tf);
    if (auto v = num("p_infra_w")) c.p_infra_w = *v;
    if (auto v = num("grid_ramp_limit_w_per_s")) c.grid_ramp_limit_w_per_s = *v;
    if (auto v = num("restart_penalty_s")) c.restart_penalty_s = *v;
    if (auto v = num("gpu_unit_w")) c.gpu_unit_w = *v;
    if (auto v = num("heat_factor")) c.heat_factor = *v;
    if (auto v = num("thermal_tau_s")) c.thermal_tau_s = *v;
    if (auto v = num("t_ambient_c")) c.t_ambient_c = *v;
    if (auto v = num("t_max_c")) c.t_max_c = *v;
    if (auto v = num("t_derate_c")) c.t_derate_c = *v;
    if (auto v = num("derate_slope_per_c")) c.derate_slope_per_c = *v;
    if (auto v = num("max_dummy_w")) c.max_dummy_w = *v;
    if (j.contains("active_dispatch")) {
        if (!j.at("active_dispatch").is_boolean())
            fail(ErrorKind::invalid_argument, "sim config: field 'active_dispatch' must be a boolean");
        c.active_dispatch = j.at("active_dispatch").get<bool>();
    }
    if (auto v = num("active_reserve_frac")) c.active_reserve_frac = *v;
    if (auto v = num("active_window_s")) c.active_window_s = *v;
    if (auto v = num("active_soc_knee")) c.active_soc_knee = *v;
    c.validate();
    return c;
}

Json sim_config_to_json(const SimConfig& c) {
    Json j;
    if (c.threshold.absolute_w) j["threshold_w"] = *c.threshold.absolute_w;
    if (c.threshold.fraction_of_max) j["threshold_frac"] = *c.threshold.fraction_of_max;
    j["p_infra_w"] = c.p_infra_w;
    if (c.grid_ramp_limit_w_per_s) j["grid_ramp_limit_w_per_s"] = *c.grid_ramp_limit_w_per_s;
    j["restart_penalty_s"] = c.restart_penalty_s;
    j["gpu_unit_w"] = c.gpu_unit_w;
    j["heat_factor"] = c.heat_factor;
    j["thermal_tau_s"] = c.thermal_tau_s;
    j["t_ambient_c"] = c.t_ambient_c;
    j["t_max_c"] = c.t_max_c;
    j["t_derate_c"] = c.t_derate_c;
    j["derate_slope_per_c"] = c.derate_slope_per_c;
    if (c.max_dummy_w) j["max_dummy_w"] = *c.max_dummy_w;
    j["active_dispatch"] = c.active_dispatch;
    j["active_reserve_frac"] = c.active_reserve_frac;
    j["active_window_s"] = c.active_window_s;
    j["active_soc_knee"] = c.active_soc_knee;
    return j;
}

double thermal_k_scale(const SimConfig& c, double rack_max_w) {
    const double full = c.heat_factor * rack_max_w;
    return full > 0.0 ? (c.t_max_c - c.t_ambient_c) / full : 0.0;
}

double thermal_step(double temp_c, double heat_input_w, const SimConfig& c, double dt_s, double rack_max_w) {
    if (!(dt_s > 0.0)) fail(ErrorKind::invalid_argument, "thermal_step: dt must be positive");
    const double k = thermal_k_scale(c, rack_max_w);
    return temp_c + dt_s * (heat_input_w * k - (temp_c - c.t_ambient_c)) / c.thermal_tau_s;
}

double derate_factor(double temp_c, const SimConfig& c) {
    return std::max(0.0, 1.0 - c.derate_slope_per_c * std::max(0.0, temp_c - c.t_derate_c));
}

namespace {

struct Lock {
    std::size_t units;
    double until_s;
};

// Sliding-window minimum over the last n pushed values.
class WindowMin {
public:
    explicit WindowMin(std::size_t n) : n_(n) {}
    void push(std::size_t i, double v) {
        while (!q_.empty() && q_.back().second >= v) q_.pop_back();
        q_.emplace_back(i, v);
        while (q_.front().first + n_ <= i) q_.pop_front();
    }
    double min() const { return q_.front().second; }

private:
    std::size_t n_;
    std::deque<std::pair<std::size_t, double>> q_;
};

}  // namespace

ShavingResult simulate_shaving(const PowerTrace& trace, const Strategy& strat, const SimConfig& cfg) {
    trace.validate();
    cfg.validate();
    const double dt = trace.dt_s;
    const double rack = trace.rack_max_w;
    const double theta = cfg.threshold.resolve(rack);
    const double ramp = cfg.ramp_limit(rack) * dt;
    const double tol = 1e-9 * rack;
    const std::size_t n = trace.samples.size();

    const bool has_device = strat.kind == Strategy::Kind::device;
    const bool ideal = strat.kind == Strategy::Kind::ideal;
    DeviceState st;
    if (has_device) {
        strat.spec.validate();
        st = strat.initial_state.value_or(init_state(strat.spec));
    }
    const bool active = has_device && !strat.spec.passive() && cfg.active_dispatch;
    // Reserve dispatch keeps the battery on one side of the grid draw, so arm it for discharge up front.
    if (active && !strat.initial_state) st.mode = Mode::discharging;
    const double e_lo = has_device ? strat.spec.min_energy_j() : 0.0;
    const double e_hi = has_device ? strat.spec.max_energy_j() : 0.0;

    ShavingResult r;
    r.strategy = strat.name;
    r.dt_s = dt;
    r.rack_max_w = rack;
    r.threshold_w = theta;
    r.p_infra_w = cfg.p_infra_w;
    for (auto* v : {&r.p_comp_demand, &r.p_comp_served, &r.p_grid, &r.p_ext_discharge, &r.p_ext_charge, &r.p_dummy,
                    &r.curtailed_w, &r.stored_j, &r.temperature_c})
        v->reserve(n);
    r.initial_stored_j = has_device ? st.stored_j : 0.0;

    std::vector<Lock> locks;
    WindowMin floor_min(std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.active_window_s / dt))));
    bool in_deficit = false;
    double prev = 0.0;
    double temp = cfg.t_ambient_c;

    auto step_device = [&](double req, double avail, double& delivered, double& absorbed) {
        StepResult sr = device_step(strat.spec, st, req, avail, dt);
        delivered = sr.delivered_w;
        absorbed = sr.absorbed_w;
        st = sr.state;
    };

    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt;
        const bool first = i == 0;
        std::erase_if(locks, [&](const Lock& l) { return l.until_s <= t + 1e-12; });
        std::size_t locked_units = 0;
        for (const auto& l : locks) locked_units += l.units;

        const double demand = trace.samples[i];
        const double locked_w = std::min(demand, static_cast<double>(locked_units) * cfg.gpu_unit_w);
        const double d = demand - locked_w;

        const double g_lo = first ? 0.0 : std::max(0.0, prev - ramp);
        const double g_hi = first ? theta : std::min(theta, prev + ramp);

        double delivered = 0.0, absorbed = 0.0, dummy = 0.0, shortfall = 0.0, g = 0.0;

        if (active) {
            floor_min.push(i, d);
            const double q = std::clamp((st.stored_j - e_lo) / (e_hi - e_lo) / cfg.active_soc_knee, 0.0, 1.0);
            const double top = std::min(theta, d);
            const double floor = std::min(theta, floor_min.min()) - cfg.active_reserve_frac * rack;
            const double target = std::max(0.0, top - (top - floor) * q);
            const double g_pref = std::clamp(target, g_lo, g_hi);
            if (d > g_pref) {
                const double req = d - g_pref;
                step_device(req, 0.0, delivered, absorbed);
                const double rest = req - delivered;
                const double raise = std::min(rest, g_hi - g_pref);
                g = g_pref + raise;
                shortfall = rest - raise;
            } else {
                const double avail = std::max(0.0, g_lo - d);
                step_device(0.0, avail, delivered, absorbed);
                g = d + absorbed;
            }
        } else if (ideal) {
            // unlimited in both directions, so the grid simply follows demand as far as the ramp allows
            g = std::clamp(d, g_lo, g_hi);
            delivered = std::max(0.0, d - g);
            absorbed = std::max(0.0, g - d);
        } else if (d > theta) {
            const double req = d - theta;
            if (has_device) step_device(req, 0.0, delivered, absorbed);
            g = theta;
            shortfall = req - delivered;
        } else {
            const double avail = has_device ? std::max(0.0, g_hi - d) : 0.0;
            if (has_device) step_device(0.0, avail, delivered, absorbed);
            g = d + absorbed;
        }

        if (g < g_lo) {
            dummy = g_lo - g;
            if (cfg.max_dummy_w) dummy = std::min(dummy, *cfg.max_dummy_w);
            g += dummy;
        }
        if (!first && (g > prev + ramp + tol || g < prev - ramp - tol)) {
            if (r.ramp_violation_steps == 0) r.first_violation_step = static_cast<long long>(i);
            ++r.ramp_violation_steps;
        }

        const double served = d - shortfall;
        std::size_t new_units = 0;
        if (shortfall > tol) {
            new_units = static_cast<std::size_t>(std::ceil(shortfall / cfg.gpu_unit_w - 1e-12));
            const double until = t + dt + cfg.restart_penalty_s;
            for (auto& l : locks) l.until_s = std::max(l.until_s, until);
            locks.push_back({new_units, until});
            if (!in_deficit) ++r.unserved_spike_count;
            in_deficit = true;
        } else {
            in_deficit = false;
        }
        r.curtailed_gpu_seconds += static_cast<double>(locked_units + new_units) * dt;

        const double grid_total = g + cfg.p_infra_w;
        const double curtailed = demand - served;
        const double residual = std::abs((grid_total + delivered) - (cfg.p_infra_w + served + dummy + absorbed));
        r.max_balance_residual_w = std::max(r.max_balance_residual_w, residual);

        temp = thermal_step(temp, cfg.heat_factor * (served + dummy), cfg, dt, rack);

        r.p_comp_demand.push_back(demand);
        r.p_comp_served.push_back(served);
        r.p_grid.push_back(grid_total);
        r.p_ext_discharge.push_back(delivered);
        r.p_ext_charge.push_back(absorbed);
        r.p_dummy.push_back(dummy);
        r.curtailed_w.push_back(curtailed);
        r.stored_j.push_back(has_device ? st.stored_j : 0.0);
        r.temperature_c.push_back(temp);

        r.total_dummy_energy_j += dummy * dt;
        r.total_unserved_energy_j += curtailed * dt;
        r.discharged_j += delivered * dt;
        r.charged_j += absorbed * dt;
        if (has_device) r.stored_gain_j += absorbed * dt * strat.spec.round_trip_efficiency - delivered * dt;
        r.peak_grid_w = std::max(r.peak_grid_w, grid_total);
        prev = g;
    }
    r.final_stored_j = has_device ? st.stored_j : 0.0;
    r.device_energy_throughput_j = r.discharged_j + r.charged_j;
    return r;
}

std::size_t gpus_saved(const PowerTrace& trace, double threshold_frac, double min_burst_s, double gpu_unit_w) {
    if (!(threshold_frac > 0.0 && threshold_frac <= 1.0))
        fail(ErrorKind::invalid_argument, "gpus_saved: threshold fraction must lie in (0, 1]");
    if (!(min_burst_s >= 0.0)) fail(ErrorKind::invalid_argument, "gpus_saved: min_burst_s must be non-negative");
    if (!(gpu_unit_w > 0.0)) fail(ErrorKind::invalid_argument, "gpus_saved: gpu_unit_w must be positive");
    double worst = 0.0;
    bool any = false;
    for (const auto& s : detect_spikes_at(trace, threshold_frac * trace.rack_max_w)) {
        if (s.duration_s + 1e-9 < min_burst_s) continue;
        any = true;
        worst = std::max(worst, s.peak_excess_w);
    }
    if (!any) return 0;
    return static_cast<std::size_t>(std::ceil(worst / gpu_unit_w));
}

double useful_energy_j(const ShavingResult& r, const SimConfig& cfg) {
    double u = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) u += r.p_comp_served[i] * derate_factor(r.temperature_c[i], cfg) * r.dt_s;
    return u;
}

double computational_gain(const ShavingResult& result, const ShavingResult& baseline, const SimConfig& cfg) {
    if (result.size() != baseline.size()) fail(ErrorKind::invalid_argument, "computational_gain: trace lengths differ");
    const double base = useful_energy_j(baseline, cfg);
    if (!(base > 0.0)) fail(ErrorKind::invalid_argument, "computational_gain: baseline has no useful energy");
    return 100.0 * (useful_energy_j(result, cfg) - base) / base;
}

std::string result_to_csv(const ShavingResult& r) {
    using detail::fmt;
    std::string out = "p_comp_demand,p_comp_served,p_grid,p_ext_discharge,p_ext_charge,p_dummy,curtailed_w,stored_j,temperature_c\n";
    for (std::size_t i = 0; i < r.size(); ++i) {
        out += fmt(r.p_comp_demand[i]);
        for (double v : {r.p_comp_served[i], r.p_grid[i], r.p_ext_discharge[i], r.p_ext_charge[i], r.p_dummy[i],
                         r.curtailed_w[i], r.stored_j[i], r.temperature_c[i]}) {
            out += ',';
            out += fmt(v);
        }
        out += '\n';
    }
    return out;
}

Json result_summary_json(const ShavingResult& r) {
    Json j;
    j["strategy"] = r.strategy;
    j["steps"] = r.size();
    j["dt_s"] = r.dt_s;
    j["rack_max_w"] = r.rack_max_w;
    j["threshold_w"] = r.threshold_w;
    j["total_dummy_energy_j"] = r.total_dummy_energy_j;
    j["total_unserved_energy_j"] = r.total_unserved_energy_j;
    j["curtailed_gpu_seconds"] = r.curtailed_gpu_seconds;
    j["unserved_spike_count"] = r.unserved_spike_count;
    j["device_energy_throughput_j"] = r.device_energy_throughput_j;
    j["initial_stored_j"] = r.initial_stored_j;
    j["final_stored_j"] = r.final_stored_j;
    j["peak_grid_w"] = r.peak_grid_w;
    j["ramp_violation_steps"] = r.ramp_violation_steps;
    j["first_violation_step"] = r.first_violation_step;
    j["max_balance_residual_w"] = r.max_balance_residual_w;
    return j;
}

}  // namespace powershave
