#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "powershave/json.hpp"

#include "powershave/trace.hpp"

namespace powershave {

struct Spike {
    double start_s = 0.0;
    double duration_s = 0.0;
    double peak_excess_w = 0.0;
    double energy_above_j = 0.0;
    double peak_frac = 0.0;
    std::size_t start_index = 0;
    std::size_t length = 0;

    bool operator==(const Spike&) const = default;
};

struct ThresholdSpec {
    std::optional<double> absolute_w;
    std::optional<double> fraction_of_max;

    static ThresholdSpec watts(double w) { return {w, std::nullopt}; }
    static ThresholdSpec fraction(double f) { return {std::nullopt, f}; }
    double resolve(double rack_max_w) const;
};

struct SpikeStats {
    std::size_t count = 0;
    bool empty = true;
    std::map<int, double> duration_percentiles;  // percentile -> seconds
    double frac_leq_100ms = 0.0;
    std::vector<double> histogram_edges_j;
    std::vector<std::size_t> histogram_counts;
    double energy_mean_j = 0.0;
    std::map<int, double> peak_frac_quantiles;  // percentile -> peak_frac
};

inline constexpr int kReportedPercentiles[] = {50, 85, 90, 95, 99};

std::vector<double> default_energy_bins();

std::vector<Spike> detect_spikes(const PowerTrace& trace, const ThresholdSpec& threshold);
std::vector<Spike> detect_spikes_at(const PowerTrace& trace, double threshold_w);

// Nearest-rank percentile of an unsorted sample; p in (0, 100].
double nearest_rank(std::vector<double> values, double p);

SpikeStats spike_statistics(const std::vector<Spike>& spikes, const std::vector<double>& histogram_bins);

std::vector<std::pair<double, SpikeStats>> threshold_sweep(const PowerTrace& trace,
                                                           const std::vector<ThresholdSpec>& thresholds,
                                                           const std::vector<double>& histogram_bins);

Json stats_to_json(const SpikeStats& s);
std::string spikes_to_csv(const std::vector<Spike>& spikes);

}  // namespace powershave
