#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "powershave/json.hpp"

namespace powershave {

struct PowerTrace {
    double dt_s = 0.0;
    std::vector<double> samples;
    double rack_max_w = 0.0;
    std::string source_label;
    double origin_time_s = 0.0;

    double duration_s() const { return dt_s * static_cast<double>(samples.size()); }
    void validate() const;
};

struct SynthConfig {
    int n_accelerators = 200;
    double iteration_period_s = 0.9592;
    double burst_duration_min_s = 0.4954;
    double burst_duration_max_s = 0.5119;
    double burst_power_w = 700.0;
    double comm_power_w = 241.3887;
    double idle_power_w = 100.0;
    double jitter_frac = 0.0159;
    double inference_rate_hz = 2.191;
    std::uint64_t seed = 1;
    double duration_s = 600.0;
    double dt_s = 0.005;

    void validate() const;
};

// JSON keys are exactly the SynthConfig field names; burst_duration_s is [min, max].
SynthConfig synth_config_from_json(const Json& j);
Json synth_config_to_json(const SynthConfig& c);

enum class TraceFormat { csv };

PowerTrace load_trace(std::istream& in, TraceFormat format = TraceFormat::csv,
                      std::optional<double> rack_max_override = std::nullopt);
void write_trace(std::ostream& out, const PowerTrace& trace);

PowerTrace load_trace_file(const std::string& path, std::optional<double> rack_max_override = std::nullopt);
void write_trace_file(const std::string& path, const PowerTrace& trace);

PowerTrace resample(const PowerTrace& trace, double dt_new_s);

PowerTrace synthesize_trace(const SynthConfig& config);

// Accelerators per node in the synthetic generator; nodes switch phase together.
inline constexpr int kSynthNodeSize = 8;

}  // namespace powershave
