#include "powershave/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "format.hpp"
#include "powershave/devices.hpp"
#include "powershave/error.hpp"
#include "powershave/manifest.hpp"
#include "powershave/shaving.hpp"
#include "powershave/spikes.hpp"
#include "powershave/sweep.hpp"
#include "powershave/trace.hpp"

namespace fs = std::filesystem;

namespace powershave {

namespace {

const char* kBuiltinDevices = "none, ideal, capacitor, supercap, battery";

struct Options {
    std::string out_dir = ".";
    std::string config;
    std::string trace;
    std::optional<double> rack_max_w;
    std::optional<double> threshold_w;
    std::optional<double> threshold_frac;
    std::string bins;
    std::vector<std::string> devices;
    std::optional<std::uint64_t> seed;
    std::string axes_threshold;
    std::string axes_burst;
    double gpu_unit_w = 700.0;
};

Json parse_json_file(const std::string& path) {
    const std::string text = read_file(path);
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::parse, "'" + path + "' is not valid JSON: " + e.what());
    }
}

std::vector<double> parse_list(const std::string& s, const char* what) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto d = detail::parse_double(item);
        if (!d) fail(ErrorKind::invalid_argument, std::string("bad value '") + item + "' in " + what);
        v.push_back(*d);
    }
    if (v.empty()) fail(ErrorKind::invalid_argument, std::string(what) + " is empty");
    return v;
}

std::vector<double> parse_axis(const std::string& s, const char* flag) {
    const auto a = s.find(':');
    const auto b = a == std::string::npos ? a : s.find(':', a + 1);
    if (b == std::string::npos || s.find(':', b + 1) != std::string::npos)
        fail(ErrorKind::invalid_argument, std::string(flag) + " expects start:stop:step");
    auto start = detail::parse_double(s.substr(0, a));
    auto stop = detail::parse_double(s.substr(a + 1, b - a - 1));
    auto step = detail::parse_double(s.substr(b + 1));
    if (!start || !stop || !step) fail(ErrorKind::invalid_argument, std::string(flag) + " expects start:stop:step");
    return axis_range(*start, *stop, *step);
}

std::optional<ThresholdSpec> threshold_from(const Options& o) {
    if (o.threshold_w) return ThresholdSpec::watts(*o.threshold_w);
    if (o.threshold_frac) return ThresholdSpec::fraction(*o.threshold_frac);
    return std::nullopt;
}

Strategy resolve_device(const std::string& arg, RunManifest& m) {
    auto builtin = [&](Strategy s) {
        const Json j = s.kind == Strategy::Kind::device ? device_spec_to_json(s.spec) : Json(s.name);
        m.configs.push_back({"builtin:" + s.name, sha256_hex(j.dump())});
        return s;
    };
    if (arg == "none") return builtin(Strategy::none());
    if (arg == "ideal") return builtin(Strategy::ideal());
    if (arg == "capacitor") return builtin(Strategy::device(capacitor_preset(), "capacitor"));
    if (arg == "supercap" || arg == "supercapacitor") return builtin(Strategy::device(supercap_preset(), "supercap"));
    if (arg == "battery") return builtin(Strategy::device(battery_preset(), "battery"));
    if (!fs::is_regular_file(arg))
        fail(ErrorKind::invalid_argument,
             "unknown device '" + arg + "': not a readable file; builtin devices are " + kBuiltinDevices);
    const DeviceSpec spec = device_spec_from_json(parse_json_file(arg));
    m.configs.push_back(digest_file(arg));
    return Strategy::device(spec, fs::path(arg).stem().string());
}

SimConfig load_sim_config(const Options& o, RunManifest& m) {
    SimConfig c;
    if (!o.config.empty()) {
        c = sim_config_from_json(parse_json_file(o.config));
        m.configs.push_back(digest_file(o.config));
    }
    if (auto t = threshold_from(o)) c.threshold = *t;
    c.validate();
    return c;
}

PowerTrace load_input_trace(const Options& o, RunManifest& m) {
    PowerTrace t = load_trace_file(o.trace, o.rack_max_w);
    m.inputs.push_back(digest_file(o.trace));
    return t;
}

std::string prepare_out(const Options& o) {
    std::error_code ec;
    fs::create_directories(o.out_dir, ec);
    if (ec || !fs::is_directory(o.out_dir)) fail(ErrorKind::io, "cannot create output directory '" + o.out_dir + "'");
    return o.out_dir;
}

void emit(RunManifest& m, const std::string& dir, const std::string& name, const std::string& contents) {
    const std::string path = (fs::path(dir) / name).string();
    write_file_atomic(path, contents);
    m.outputs.push_back({path, sha256_hex(contents)});
}

void finish(RunManifest& m, const std::string& dir) {
    write_manifest((fs::path(dir) / (m.command + "_manifest.json")).string(), m);
}

int cmd_synth(const Options& o, std::ostream& out) {
    RunManifest m;
    m.command = "synth";
    SynthConfig c;
    if (!o.config.empty()) {
        c = synth_config_from_json(parse_json_file(o.config));
        m.configs.push_back(digest_file(o.config));
    }
    if (o.seed) c.seed = *o.seed;
    m.seed = c.seed;
    const PowerTrace t = synthesize_trace(c);
    const std::string dir = prepare_out(o);
    std::ostringstream csv;
    write_trace(csv, t);
    emit(m, dir, "trace.csv", csv.str());
    finish(m, dir);
    out << "wrote " << t.samples.size() << " samples (" << t.duration_s() << " s, rack max " << t.rack_max_w
        << " W) to " << (fs::path(dir) / "trace.csv").string() << "\n";
    return kExitOk;
}

int cmd_analyze(const Options& o, std::ostream& out) {
    RunManifest m;
    m.command = "analyze";
    const PowerTrace t = load_input_trace(o, m);
    const ThresholdSpec th = threshold_from(o).value_or(ThresholdSpec::fraction(0.7));
    const std::vector<double> bins = o.bins.empty() ? default_energy_bins() : parse_list(o.bins, "--bins");
    const auto spikes = detect_spikes(t, th);
    const SpikeStats s = spike_statistics(spikes, bins);
    Json stats = stats_to_json(s);
    stats["threshold_w"] = th.resolve(t.rack_max_w);
    stats["rack_max_w"] = t.rack_max_w;

    const std::string dir = prepare_out(o);
    emit(m, dir, "spikes.csv", spikes_to_csv(spikes));
    emit(m, dir, "stats.json", stats.dump(2) + "\n");
    finish(m, dir);

    char line[160];
    out << "threshold       " << stats["threshold_w"].get<double>() << " W\n";
    out << "spikes          " << s.count << "\n";
    if (!s.empty) {
        for (int p : {50, 85, 95, 99}) {
            std::snprintf(line, sizeof line, "p%-2d duration    %.3f s\n", p, s.duration_percentiles.at(p));
            out << line;
        }
        std::snprintf(line, sizeof line, "frac <= 100 ms  %.4f\nmean energy     %.2f J\n", s.frac_leq_100ms,
                      s.energy_mean_j);
        out << line;
    }
    return kExitOk;
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
    RunManifest m;
    m.command = "simulate";
    if (o.devices.size() != 1) fail(ErrorKind::invalid_argument, "simulate takes exactly one --device");
    const PowerTrace t = load_input_trace(o, m);
    const Strategy s = resolve_device(o.devices.front(), m);
    const SimConfig c = load_sim_config(o, m);
    const ShavingResult r = simulate_shaving(t, s, c);

    Json summary = result_summary_json(r);
    summary["discharged_j"] = r.discharged_j;
    summary["charged_j"] = r.charged_j;
    summary["useful_energy_j"] = useful_energy_j(r, c);

    const std::string dir = prepare_out(o);
    emit(m, dir, "result.csv", result_to_csv(r));
    emit(m, dir, "summary.json", summary.dump(2) + "\n");
    finish(m, dir);

    out << "strategy " << r.strategy << ": unserved " << r.total_unserved_energy_j << " J, dummy "
        << r.total_dummy_energy_j << " J, curtailed " << r.curtailed_gpu_seconds << " GPU-s, peak grid "
        << r.peak_grid_w << " W\n";
    if (r.ramp_violation_steps > 0) {
        err << "grid ramp limit exceeded on " << r.ramp_violation_steps << " steps (first at step "
            << r.first_violation_step << ")\n";
        return kExitRampViolation;
    }
    return kExitOk;
}

int cmd_sweep(const Options& o, std::ostream& out) {
    RunManifest m;
    m.command = "sweep";
    const PowerTrace t = load_input_trace(o, m);
    const auto ths = o.axes_threshold.empty() ? default_threshold_axis() : parse_axis(o.axes_threshold, "--axes-threshold");
    const auto bursts = o.axes_burst.empty() ? default_burst_axis() : parse_axis(o.axes_burst, "--axes-burst");
    const SweepGrid g = sweep_gpus_saved(t, ths, bursts, o.gpu_unit_w);
    const std::string dir = prepare_out(o);
    emit(m, dir, "grid.csv", export_grid(g, GridFormat::csv));
    emit(m, dir, "grid.json", export_grid(g, GridFormat::json));
    finish(m, dir);
    out << "grid " << ths.size() << " x " << bursts.size() << " written to " << dir << "\n";
    return kExitOk;
}

int cmd_compare(const Options& o, std::ostream& out) {
    RunManifest m;
    m.command = "compare";
    const PowerTrace t = load_input_trace(o, m);
    std::vector<std::string> names = o.devices;
    if (names.empty()) names = {"capacitor", "supercap", "battery", "ideal"};
    std::vector<Strategy> strategies;
    for (const auto& n : names) strategies.push_back(resolve_device(n, m));
    const SimConfig c = load_sim_config(o, m);
    const auto rows = compare_strategies(t, strategies, c);
    const std::string dir = prepare_out(o);
    emit(m, dir, "comparison.csv", comparison_to_csv(rows));
    finish(m, dir);
    char line[200];
    std::snprintf(line, sizeof line, "%-12s %10s %14s %14s\n", "strategy", "gain_pct", "dummy_j", "unserved_j");
    out << line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-12s %10.3f %14.1f %14.1f\n", r.strategy_name.c_str(),
                      r.computational_gain_pct, r.dummy_energy_j, r.total_unserved_energy_j);
        out << line;
    }
    return kExitOk;
}

int exit_code_for(ErrorKind k) {
    switch (k) {
        case ErrorKind::io: return kExitIo;
        case ErrorKind::contract: return kExitIo;
        default: return kExitUsage;
    }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Rack power trace analysis and power-shaving simulation", "powershave"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);
    Options o;

    auto add_out = [&](CLI::App* sub) {
        sub->add_option("--out", o.out_dir, "Output directory")->envname("POWERSHAVE_OUT");
    };
    auto add_trace = [&](CLI::App* sub) {
        sub->add_option("trace", o.trace, "Trace CSV")->required();
        sub->add_option("--rack-max-w", o.rack_max_w, "Override the rack maximum power (W)");
    };
    auto add_threshold = [&](CLI::App* sub) {
        auto* w = sub->add_option("--threshold-w", o.threshold_w, "Threshold in watts");
        auto* f = sub->add_option("--threshold-frac", o.threshold_frac, "Threshold as a fraction of rack max");
        w->excludes(f);
    };

    auto* synth = app.add_subcommand("synth", "Generate a synthetic rack power trace");
    synth->add_option("--config", o.config, "SynthConfig JSON");
    synth->add_option("--seed", o.seed, "Override the config seed");
    add_out(synth);

    auto* analyze = app.add_subcommand("analyze", "Detect spikes and summarize them");
    add_trace(analyze);
    add_threshold(analyze);
    analyze->add_option("--bins", o.bins, "Energy histogram edges in J, comma separated");
    add_out(analyze);

    auto* simulate = app.add_subcommand("simulate", "Run power shaving with one device");
    add_trace(simulate);
    simulate->add_option("--device", o.devices, std::string("Device JSON or builtin: ") + kBuiltinDevices)->required()->expected(1)->multi_option_policy(CLI::MultiOptionPolicy::Throw);
    simulate->add_option("--config", o.config, "SimConfig JSON");
    add_threshold(simulate);
    add_out(simulate);

    auto* sweep = app.add_subcommand("sweep", "GPUs saved over threshold and burst length axes");
    add_trace(sweep);
    sweep->add_option("--axes-threshold", o.axes_threshold, "start:stop:step (fraction of rack max)");
    sweep->add_option("--axes-burst", o.axes_burst, "start:stop:step (seconds)");
    sweep->add_option("--gpu-unit-w", o.gpu_unit_w, "Power of one accelerator (W)");
    add_out(sweep);

    auto* compare = app.add_subcommand("compare", "Compare strategies against the device-free baseline");
    add_trace(compare);
    compare->add_option("--device", o.devices, "Repeatable; defaults to the shipped presets and ideal");
    compare->add_option("--config", o.config, "SimConfig JSON");
    add_threshold(compare);
    add_out(compare);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*synth) return cmd_synth(o, out);
        if (*analyze) return cmd_analyze(o, out);
        if (*simulate) return cmd_simulate(o, out, err);
        if (*sweep) return cmd_sweep(o, out);
        if (*compare) return cmd_compare(o, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitUsage;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"powershave"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace powershave
