#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "powershave/cli.hpp"
#include "powershave/devices.hpp"
#include "powershave/error.hpp"
#include "powershave/shaving.hpp"
#include "powershave/spikes.hpp"
#include "powershave/sweep.hpp"
#include "powershave/trace.hpp"

namespace py = pybind11;
using namespace powershave;

namespace {

py::array_t<double> as_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

std::vector<double> from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 1) throw py::value_error("expected a one-dimensional array");
    return {a.data(), a.data() + a.size()};
}

ThresholdSpec threshold_arg(std::optional<double> watts, std::optional<double> frac) {
    if (watts && frac) throw py::value_error("pass only one of threshold_w or threshold_frac");
    if (watts) return ThresholdSpec::watts(*watts);
    return ThresholdSpec::fraction(frac.value_or(0.7));
}

Strategy strategy_arg(const py::object& o) {
    if (py::isinstance<py::str>(o)) {
        const auto s = o.cast<std::string>();
        if (s == "none") return Strategy::none();
        if (s == "ideal") return Strategy::ideal();
        if (s == "capacitor") return Strategy::device(capacitor_preset(), s);
        if (s == "supercap" || s == "supercapacitor") return Strategy::device(supercap_preset(), "supercap");
        if (s == "battery") return Strategy::device(battery_preset(), s);
        throw py::value_error("unknown device '" + s + "' (none, ideal, capacitor, supercap, battery)");
    }
    if (py::isinstance<py::tuple>(o)) {
        auto t = o.cast<py::tuple>();
        if (t.size() != 2) throw py::value_error("named device must be a (name, DeviceSpec) pair");
        return Strategy::device(t[1].cast<DeviceSpec>(), t[0].cast<std::string>());
    }
    return Strategy::device(o.cast<DeviceSpec>(), to_string(o.cast<DeviceSpec>().kind));
}

Json json_arg(const py::object& o) { return Json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>()); }
py::object json_out(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Rack power trace analysis and power-shaving simulation";

    // io errors surface as OSError, everything else as PowershaveError (a ValueError)
    static PyObject* base_exc = py::exception<Error>(m, "PowershaveError", PyExc_ValueError).release().ptr();
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            PyErr_SetString(e.kind() == ErrorKind::io ? PyExc_OSError : base_exc, e.what());
        }
    });

    py::class_<PowerTrace>(m, "PowerTrace")
        .def(py::init([](const py::array_t<double, py::array::c_style | py::array::forcecast>& samples, double dt_s,
                         double rack_max_w, std::string label) {
                 PowerTrace t;
                 t.samples = from_array(samples);
                 t.dt_s = dt_s;
                 t.rack_max_w = rack_max_w;
                 t.source_label = std::move(label);
                 t.validate();
                 return t;
             }),
             py::arg("samples"), py::arg("dt_s"), py::arg("rack_max_w"), py::arg("label") = "")
        .def_readonly("dt_s", &PowerTrace::dt_s)
        .def_readonly("rack_max_w", &PowerTrace::rack_max_w)
        .def_readonly("label", &PowerTrace::source_label)
        .def_property_readonly("samples", [](const PowerTrace& t) { return as_array(t.samples); })
        .def_property_readonly("duration_s", &PowerTrace::duration_s)
        .def("__len__", [](const PowerTrace& t) { return t.samples.size(); })
        .def("to_csv", [](const PowerTrace& t) {
            std::ostringstream ss;
            write_trace(ss, t);
            return ss.str();
        });

    py::class_<SynthConfig>(m, "SynthConfig")
        .def(py::init<>())
        .def_readwrite("n_accelerators", &SynthConfig::n_accelerators)
        .def_readwrite("iteration_period_s", &SynthConfig::iteration_period_s)
        .def_readwrite("burst_duration_min_s", &SynthConfig::burst_duration_min_s)
        .def_readwrite("burst_duration_max_s", &SynthConfig::burst_duration_max_s)
        .def_readwrite("burst_power_w", &SynthConfig::burst_power_w)
        .def_readwrite("comm_power_w", &SynthConfig::comm_power_w)
        .def_readwrite("idle_power_w", &SynthConfig::idle_power_w)
        .def_readwrite("jitter_frac", &SynthConfig::jitter_frac)
        .def_readwrite("inference_rate_hz", &SynthConfig::inference_rate_hz)
        .def_readwrite("seed", &SynthConfig::seed)
        .def_readwrite("duration_s", &SynthConfig::duration_s)
        .def_readwrite("dt_s", &SynthConfig::dt_s)
        .def_static("from_dict", [](const py::object& d) { return synth_config_from_json(json_arg(d)); })
        .def("to_dict", [](const SynthConfig& c) { return json_out(synth_config_to_json(c)); });

    m.def("synthesize_trace", &synthesize_trace, py::arg("config") = SynthConfig{});
    m.def("load_trace", [](const std::string& path, std::optional<double> rack_max_w) { return load_trace_file(path, rack_max_w); },
          py::arg("path"), py::arg("rack_max_w") = py::none());
    m.def("write_trace", &write_trace_file, py::arg("path"), py::arg("trace"));
    m.def("resample", &resample, py::arg("trace"), py::arg("dt_s"));

    py::class_<Spike>(m, "Spike")
        .def_readonly("start_s", &Spike::start_s)
        .def_readonly("duration_s", &Spike::duration_s)
        .def_readonly("peak_excess_w", &Spike::peak_excess_w)
        .def_readonly("energy_above_j", &Spike::energy_above_j)
        .def_readonly("peak_frac", &Spike::peak_frac)
        .def_readonly("start_index", &Spike::start_index)
        .def_readonly("length", &Spike::length)
        .def("__repr__", [](const Spike& s) {
            std::ostringstream ss;
            ss << "Spike(start_s=" << s.start_s << ", duration_s=" << s.duration_s << ", energy_above_j=" << s.energy_above_j
               << ")";
            return ss.str();
        });

    m.def(
        "detect_spikes",
        [](const PowerTrace& t, std::optional<double> threshold_w, std::optional<double> threshold_frac) {
            return detect_spikes(t, threshold_arg(threshold_w, threshold_frac));
        },
        py::arg("trace"), py::kw_only(), py::arg("threshold_w") = py::none(), py::arg("threshold_frac") = py::none());
    m.def(
        "spike_statistics",
        [](const std::vector<Spike>& spikes, std::optional<std::vector<double>> bins) {
            return json_out(stats_to_json(spike_statistics(spikes, bins.value_or(default_energy_bins()))));
        },
        py::arg("spikes"), py::arg("bins") = py::none());
    m.def("default_energy_bins", &default_energy_bins);

    py::class_<DeviceSpec>(m, "DeviceSpec")
        .def_static("from_dict", [](const py::object& d) { return device_spec_from_json(json_arg(d)); })
        .def("to_dict", [](const DeviceSpec& s) { return json_out(device_spec_to_json(s)); })
        .def_property_readonly("kind", [](const DeviceSpec& s) { return std::string(to_string(s.kind)); })
        .def_readonly("energy_capacity_j", &DeviceSpec::energy_capacity_j)
        .def_readonly("max_discharge_w", &DeviceSpec::max_discharge_w)
        .def_readonly("response_tau_s", &DeviceSpec::response_tau_s);
    m.def("capacitor_preset", &capacitor_preset);
    m.def("supercap_preset", &supercap_preset);
    m.def("battery_preset", &battery_preset);

    py::class_<SimConfig>(m, "SimConfig")
        .def(py::init<>())
        .def_property(
            "threshold_frac", [](const SimConfig& c) { return c.threshold.fraction_of_max; },
            [](SimConfig& c, double f) { c.threshold = ThresholdSpec::fraction(f); })
        .def_property(
            "threshold_w", [](const SimConfig& c) { return c.threshold.absolute_w; },
            [](SimConfig& c, double w) { c.threshold = ThresholdSpec::watts(w); })
        .def_readwrite("p_infra_w", &SimConfig::p_infra_w)
        .def_readwrite("grid_ramp_limit_w_per_s", &SimConfig::grid_ramp_limit_w_per_s)
        .def_readwrite("restart_penalty_s", &SimConfig::restart_penalty_s)
        .def_readwrite("gpu_unit_w", &SimConfig::gpu_unit_w)
        .def_readwrite("max_dummy_w", &SimConfig::max_dummy_w)
        .def_static("from_dict", [](const py::object& d) { return sim_config_from_json(json_arg(d)); })
        .def("to_dict", [](const SimConfig& c) { return json_out(sim_config_to_json(c)); });

    py::class_<ShavingResult>(m, "ShavingResult")
        .def_readonly("strategy", &ShavingResult::strategy)
        .def_readonly("threshold_w", &ShavingResult::threshold_w)
        .def_readonly("total_dummy_energy_j", &ShavingResult::total_dummy_energy_j)
        .def_readonly("total_unserved_energy_j", &ShavingResult::total_unserved_energy_j)
        .def_readonly("curtailed_gpu_seconds", &ShavingResult::curtailed_gpu_seconds)
        .def_readonly("unserved_spike_count", &ShavingResult::unserved_spike_count)
        .def_readonly("device_energy_throughput_j", &ShavingResult::device_energy_throughput_j)
        .def_readonly("final_stored_j", &ShavingResult::final_stored_j)
        .def_readonly("peak_grid_w", &ShavingResult::peak_grid_w)
        .def_readonly("ramp_violation_steps", &ShavingResult::ramp_violation_steps)
        .def_readonly("max_balance_residual_w", &ShavingResult::max_balance_residual_w)
        .def("series", [](const ShavingResult& r) {
            py::dict d;
            d["p_comp_demand"] = as_array(r.p_comp_demand);
            d["p_comp_served"] = as_array(r.p_comp_served);
            d["p_grid"] = as_array(r.p_grid);
            d["p_ext_discharge"] = as_array(r.p_ext_discharge);
            d["p_ext_charge"] = as_array(r.p_ext_charge);
            d["p_dummy"] = as_array(r.p_dummy);
            d["curtailed_w"] = as_array(r.curtailed_w);
            d["stored_j"] = as_array(r.stored_j);
            d["temperature_c"] = as_array(r.temperature_c);
            return d;
        })
        .def("summary", [](const ShavingResult& r) { return json_out(result_summary_json(r)); });

    m.def(
        "simulate_shaving",
        [](const PowerTrace& t, const py::object& device, const SimConfig& c) {
            return simulate_shaving(t, strategy_arg(device), c);
        },
        py::arg("trace"), py::arg("device"), py::arg("config") = SimConfig{});
    m.def("computational_gain", &computational_gain, py::arg("result"), py::arg("baseline"), py::arg("config") = SimConfig{});
    m.def("gpus_saved", &gpus_saved, py::arg("trace"), py::arg("threshold_frac"), py::arg("min_burst_s"),
          py::arg("gpu_unit_w") = 700.0);

    py::class_<SweepGrid>(m, "SweepGrid")
        .def_readonly("threshold_fracs", &SweepGrid::threshold_fracs)
        .def_readonly("burst_lengths_s", &SweepGrid::burst_lengths_s)
        .def_readonly("values", &SweepGrid::values)
        .def_readonly("trace_label", &SweepGrid::trace_label)
        .def("export", [](const SweepGrid& g, const std::string& f) { return export_grid(g, grid_format_from_string(f)); },
             py::arg("format") = "csv");
    m.def(
        "sweep_gpus_saved",
        [](const PowerTrace& t, std::optional<std::vector<double>> th, std::optional<std::vector<double>> bu, double unit) {
            return sweep_gpus_saved(t, th.value_or(default_threshold_axis()), bu.value_or(default_burst_axis()), unit);
        },
        py::arg("trace"), py::arg("threshold_fracs") = py::none(), py::arg("burst_lengths_s") = py::none(),
        py::arg("gpu_unit_w") = 700.0);

    py::class_<ComparisonRow>(m, "ComparisonRow")
        .def_readonly("strategy_name", &ComparisonRow::strategy_name)
        .def_readonly("computational_gain_pct", &ComparisonRow::computational_gain_pct)
        .def_readonly("dummy_energy_j", &ComparisonRow::dummy_energy_j)
        .def_readonly("total_unserved_energy_j", &ComparisonRow::total_unserved_energy_j)
        .def_readonly("device_energy_throughput_j", &ComparisonRow::device_energy_throughput_j)
        .def_readonly("peak_grid_w", &ComparisonRow::peak_grid_w);
    m.def(
        "compare_strategies",
        [](const PowerTrace& t, const std::vector<py::object>& devices, const SimConfig& c) {
            std::vector<Strategy> s;
            for (const auto& d : devices) s.push_back(strategy_arg(d));
            return compare_strategies(t, s, c);
        },
        py::arg("trace"), py::arg("devices"), py::arg("config") = SimConfig{});

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            const int code = run_cli(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}
