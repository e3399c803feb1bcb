#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "powershave/json.hpp"
#include "powershave/shaving.hpp"
#include "powershave/trace.hpp"

namespace powershave {

struct SweepGrid {
    std::vector<double> threshold_fracs;
    std::vector<double> burst_lengths_s;
    std::vector<std::vector<std::size_t>> values;  // [threshold][burst]
    std::string trace_label;

    void validate() const;
    bool operator==(const SweepGrid&) const = default;
};

// Inclusive arithmetic range; the stop value is kept when it lands on the step within rounding.
std::vector<double> axis_range(double start, double stop, double step);
std::vector<double> default_threshold_axis();  // 0.50 .. 0.95 by 0.05
std::vector<double> default_burst_axis();      // 0 .. 0.2 s by 0.02 s

SweepGrid sweep_gpus_saved(const PowerTrace& trace, const std::vector<double>& threshold_fracs,
                           const std::vector<double>& burst_lengths_s, double gpu_unit_w);

enum class GridFormat { csv, json };
GridFormat grid_format_from_string(const std::string& s);

std::string export_grid(const SweepGrid& grid, GridFormat format);
SweepGrid import_grid(const std::string& data, GridFormat format);

struct ComparisonRow {
    std::string strategy_name;
    double computational_gain_pct = 0.0;
    double dummy_energy_j = 0.0;
    double total_unserved_energy_j = 0.0;
    double device_energy_throughput_j = 0.0;
    double peak_grid_w = 0.0;
};

std::vector<ComparisonRow> compare_strategies(const PowerTrace& trace, const std::vector<Strategy>& strategies,
                                              const SimConfig& config);

std::string comparison_to_csv(const std::vector<ComparisonRow>& rows);

}  // namespace powershave
