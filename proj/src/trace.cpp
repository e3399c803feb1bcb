#include "powershave/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "format.hpp"
#include "powershave/error.hpp"

namespace powershave {

using detail::fmt;
using detail::parse_double;

void PowerTrace::validate() const {
    if (!(dt_s > 0.0) || !std::isfinite(dt_s)) fail(ErrorKind::invalid_argument, "trace dt_s must be positive and finite");
    if (!(rack_max_w > 0.0) || !std::isfinite(rack_max_w))
        fail(ErrorKind::invalid_argument, "trace rack_max_w must be positive");
    if (samples.empty()) fail(ErrorKind::no_data, "trace has no samples");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!(samples[i] >= 0.0) || !std::isfinite(samples[i]))
            fail(ErrorKind::corrupt, "sample " + std::to_string(i) + " is negative or not finite");
    }
}

void SynthConfig::validate() const {
    auto bad = [](const std::string& m) { fail(ErrorKind::invalid_argument, "synth config: " + m); };
    if (n_accelerators <= 0) bad("n_accelerators must be positive");
    if (!(iteration_period_s > 0.0)) bad("iteration_period_s must be positive");
    if (!(burst_duration_min_s > 0.0) || burst_duration_max_s < burst_duration_min_s)
        bad("burst_duration_s must be a range [min, max] with 0 < min <= max");
    if (burst_duration_max_s > iteration_period_s) bad("burst_duration_s max exceeds iteration_period_s");
    if (!(idle_power_w >= 0.0) || !(comm_power_w >= idle_power_w) || !(burst_power_w >= comm_power_w))
        bad("powers must satisfy burst_power_w >= comm_power_w >= idle_power_w >= 0");
    if (!(burst_power_w > 0.0)) bad("burst_power_w must be positive");
    if (!(jitter_frac >= 0.0 && jitter_frac < 1.0)) bad("jitter_frac must lie in [0, 1)");
    if (!(inference_rate_hz >= 0.0)) bad("inference_rate_hz must be non-negative");
    if (!(dt_s > 0.0) || !std::isfinite(dt_s)) bad("dt_s must be positive");
    if (!(duration_s >= 10.0 * iteration_period_s)) bad("duration_s must be at least 10 iteration periods");
}

namespace {

const char* kSynthKeys[] = {"n_accelerators", "iteration_period_s", "burst_duration_s", "burst_power_w",
                            "comm_power_w",   "idle_power_w",       "jitter_frac",      "inference_rate_hz",
                            "seed",           "duration_s",         "dt_s"};

double num_field(const Json& j, const char* key) {
    const auto& v = j.at(key);
    if (!v.is_number()) fail(ErrorKind::invalid_argument, std::string("synth config: field '") + key + "' must be a number");
    return v.get<double>();
}

}  // namespace

SynthConfig synth_config_from_json(const Json& j) {
    if (!j.is_object()) fail(ErrorKind::invalid_argument, "synth config: expected a JSON object");
    for (const char* k : kSynthKeys)
        if (!j.contains(k)) fail(ErrorKind::invalid_argument, std::string("synth config: missing field '") + k + "'");
    for (const auto& [k, v] : j.items()) {
        if (std::find_if(std::begin(kSynthKeys), std::end(kSynthKeys), [&](const char* s) { return k == s; }) ==
            std::end(kSynthKeys))
            fail(ErrorKind::invalid_argument, "synth config: unknown field '" + k + "'");
    }
    SynthConfig c;
    const auto& n = j.at("n_accelerators");
    if (!n.is_number_integer()) fail(ErrorKind::invalid_argument, "synth config: field 'n_accelerators' must be an integer");
    c.n_accelerators = n.get<int>();
    c.iteration_period_s = num_field(j, "iteration_period_s");
    const auto& bd = j.at("burst_duration_s");
    if (bd.is_array() && bd.size() == 2 && bd[0].is_number() && bd[1].is_number()) {
        c.burst_duration_min_s = bd[0].get<double>();
        c.burst_duration_max_s = bd[1].get<double>();
    } else if (bd.is_number()) {
        c.burst_duration_min_s = c.burst_duration_max_s = bd.get<double>();
    } else {
        fail(ErrorKind::invalid_argument, "synth config: field 'burst_duration_s' must be [min, max]");
    }
    c.burst_power_w = num_field(j, "burst_power_w");
    c.comm_power_w = num_field(j, "comm_power_w");
    c.idle_power_w = num_field(j, "idle_power_w");
    c.jitter_frac = num_field(j, "jitter_frac");
    c.inference_rate_hz = num_field(j, "inference_rate_hz");
    const auto& s = j.at("seed");
    if (!s.is_number_unsigned()) fail(ErrorKind::invalid_argument, "synth config: field 'seed' must be a non-negative integer");
    c.seed = s.get<std::uint64_t>();
    c.duration_s = num_field(j, "duration_s");
    c.dt_s = num_field(j, "dt_s");
    c.validate();
    return c;
}

Json synth_config_to_json(const SynthConfig& c) {
    Json j;
    j["n_accelerators"] = c.n_accelerators;
    j["iteration_period_s"] = c.iteration_period_s;
    j["burst_duration_s"] = {c.burst_duration_min_s, c.burst_duration_max_s};
    j["burst_power_w"] = c.burst_power_w;
    j["comm_power_w"] = c.comm_power_w;
    j["idle_power_w"] = c.idle_power_w;
    j["jitter_frac"] = c.jitter_frac;
    j["inference_rate_hz"] = c.inference_rate_hz;
    j["seed"] = c.seed;
    j["duration_s"] = c.duration_s;
    j["dt_s"] = c.dt_s;
    return j;
}

// ---- CSV ----

PowerTrace load_trace(std::istream& in, TraceFormat format, std::optional<double> rack_max_override) {
    if (format != TraceFormat::csv) fail(ErrorKind::invalid_argument, "unsupported trace format");
    PowerTrace t;
    std::optional<double> rack_max_hdr;
    std::vector<double> stamps;
    std::string line;
    bool seen_header = false;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string body = line.substr(1);
            auto eq = body.find('=');
            if (eq == std::string::npos) continue;
            std::string key = body.substr(0, eq), val = body.substr(eq + 1);
            key.erase(0, key.find_first_not_of(" \t"));
            key.erase(key.find_last_not_of(" \t") + 1);
            if (key == "rack_max_w") {
                auto v = parse_double(val);
                if (!v) fail(ErrorKind::parse, "header rack_max_w is not a number");
                rack_max_hdr = *v;
            } else if (key == "label") {
                t.source_label = val;
            }
            continue;
        }
        if (!seen_header) {
            if (line != "timestamp_s,power_w") fail(ErrorKind::parse, "expected header 'timestamp_s,power_w'");
            seen_header = true;
            continue;
        }
        ++row;
        auto comma = line.find(',');
        std::optional<double> ts, pw;
        if (comma != std::string::npos && line.find(',', comma + 1) == std::string::npos) {
            ts = parse_double(std::string_view(line).substr(0, comma));
            pw = parse_double(std::string_view(line).substr(comma + 1));
        }
        if (!ts || !pw || !std::isfinite(*ts) || !std::isfinite(*pw))
            fail(ErrorKind::parse, "malformed row " + std::to_string(row));
        if (!stamps.empty() && *ts <= stamps.back())
            fail(ErrorKind::corrupt, "non-monotone timestamp at row " + std::to_string(row));
        if (*pw < 0.0) fail(ErrorKind::corrupt, "negative power at row " + std::to_string(row));
        stamps.push_back(*ts);
        t.samples.push_back(*pw);
    }
    if (!seen_header || t.samples.empty()) fail(ErrorKind::no_data, "trace has no data rows");
    if (t.samples.size() < 2) fail(ErrorKind::no_data, "at least two rows are needed to infer the sample interval");

    std::vector<double> gaps(stamps.size() - 1);
    for (std::size_t i = 1; i < stamps.size(); ++i) gaps[i - 1] = stamps[i] - stamps[i - 1];
    std::vector<double> sorted = gaps;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double median = sorted[sorted.size() / 2];
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        if (std::abs(gaps[i] - median) > 0.005 * median)
            fail(ErrorKind::corrupt, "irregular sampling at row " + std::to_string(i + 2) +
                                         " (gap deviates more than 0.5% from the median interval); resample first");
    }
    // Mean interval rounded to 12 significant digits so printed grids such as 0.005 come back exact.
    const double mean_dt = (stamps.back() - stamps.front()) / static_cast<double>(stamps.size() - 1);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", mean_dt);
    t.dt_s = std::strtod(buf, nullptr);
    t.origin_time_s = stamps.front();

    if (rack_max_override) t.rack_max_w = *rack_max_override;
    else if (rack_max_hdr) t.rack_max_w = *rack_max_hdr;
    else fail(ErrorKind::invalid_argument, "rack_max_w missing from trace header and no override given");
    t.validate();
    return t;
}

void write_trace(std::ostream& out, const PowerTrace& t) {
    out << "#rack_max_w=" << fmt(t.rack_max_w) << '\n';
    if (!t.source_label.empty()) out << "#label=" << t.source_label << '\n';
    out << "timestamp_s,power_w\n";
    std::string buf;
    for (std::size_t i = 0; i < t.samples.size(); ++i) {
        buf.clear();
        buf += fmt(t.origin_time_s + static_cast<double>(i) * t.dt_s);
        buf += ',';
        buf += fmt(t.samples[i]);
        buf += '\n';
        out << buf;
    }
}

PowerTrace load_trace_file(const std::string& path, std::optional<double> rack_max_override) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open trace file '" + path + "'");
    PowerTrace t = load_trace(in, TraceFormat::csv, rack_max_override);
    if (t.source_label.empty()) t.source_label = path;
    return t;
}

void write_trace_file(const std::string& path, const PowerTrace& trace) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot write trace file '" + path + "'");
    write_trace(out, trace);
    if (!out) fail(ErrorKind::io, "write failed for '" + path + "'");
}

PowerTrace resample(const PowerTrace& trace, double dt_new_s) {
    if (!(dt_new_s > 0.0) || !std::isfinite(dt_new_s)) fail(ErrorKind::invalid_argument, "resample interval must be positive");
    PowerTrace out = trace;
    out.dt_s = dt_new_s;
    out.samples.clear();
    const double n_old = static_cast<double>(trace.samples.size());
    const double ratio = dt_new_s / trace.dt_s;
    const auto n_new = static_cast<std::size_t>(std::ceil(n_old / ratio - 1e-9));
    out.samples.reserve(n_new);
    for (std::size_t k = 0; k < n_new; ++k) {
        auto idx = static_cast<std::size_t>(std::floor(static_cast<double>(k) * ratio + 1e-9));
        out.samples.push_back(trace.samples[std::min(idx, trace.samples.size() - 1)]);
    }
    return out;
}

// ---- synthetic generator ----

namespace {

// Inference bursts last between these fractions of the longest compute burst.
constexpr double kInferenceLenLo = 0.3519;
constexpr double kInferenceLenHi = 0.5684;

class Uniform {
public:
    explicit Uniform(std::uint64_t seed) : eng_(seed) {}
    double operator()() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    double operator()(double lo, double hi) { return lo + (hi - lo) * (*this)(); }

private:
    std::mt19937_64 eng_;
};

}  // namespace

PowerTrace synthesize_trace(const SynthConfig& c) {
    c.validate();
    const double dt = c.dt_s;
    const auto n = static_cast<std::size_t>(std::llround(c.duration_s / dt));
    if (n == 0) fail(ErrorKind::invalid_argument, "synth config yields an empty trace");

    std::vector<int> sizes;
    for (int left = c.n_accelerators; left > 0; left -= kSynthNodeSize) sizes.push_back(std::min(kSynthNodeSize, left));
    const std::size_t groups = sizes.size();

    std::vector<std::vector<double>> node(groups);
    auto fill = [&](std::vector<double>& p, double t0, double t1, double w) {
        auto a = static_cast<long long>(std::ceil(t0 / dt - 1e-9));
        auto b = static_cast<long long>(std::ceil(t1 / dt - 1e-9));
        a = std::max(a, 0LL);
        b = std::min(b, static_cast<long long>(n));
        for (long long i = a; i < b; ++i) p[static_cast<std::size_t>(i)] = w;
    };

    Uniform rng(c.seed);
    const double period = c.iteration_period_s;
    const int iters = static_cast<int>(c.duration_s / period) + 3;
    for (std::size_t g = 0; g < groups; ++g) {
        const double k = sizes[g];
        node[g].assign(n, k * c.idle_power_w);
        std::vector<double> starts(static_cast<std::size_t>(iters));
        // iteration -1 runs into t = 0 so the trace opens mid-workload
        for (int j = 0; j < iters; ++j)
            starts[static_cast<std::size_t>(j)] =
                (j - 1 + static_cast<double>(g) / static_cast<double>(groups)) * period + c.jitter_frac * period * rng(-0.5, 0.5);
        for (std::size_t j = 0; j + 1 < starts.size(); ++j) {
            const double s = starts[j], next = starts[j + 1];
            const double d = std::min(rng(c.burst_duration_min_s, c.burst_duration_max_s), next - s);
            fill(node[g], s, s + d, k * c.burst_power_w);
            fill(node[g], s + d, next, k * c.comm_power_w);
        }
    }

    if (c.inference_rate_hz > 0.0) {
        double t = 0.0;
        for (;;) {
            t += -std::log1p(-rng()) / c.inference_rate_hz;
            if (t >= c.duration_s) break;
            auto g = std::min(static_cast<std::size_t>(rng() * static_cast<double>(groups)), groups - 1);
            const double len = c.burst_duration_max_s * rng(kInferenceLenLo, kInferenceLenHi);
            fill(node[g], t, t + len, sizes[g] * c.burst_power_w);
        }
    }

    PowerTrace out;
    out.dt_s = dt;
    out.rack_max_w = c.n_accelerators * c.burst_power_w;
    out.source_label = "synthetic seed=" + std::to_string(c.seed);
    out.samples.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t g = 0; g < groups; ++g) s += node[g][i];
        out.samples[i] = std::min(s, out.rack_max_w);
    }
    return out;
}

}  // namespace powershave
