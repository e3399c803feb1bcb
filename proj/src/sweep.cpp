#include "powershave/sweep.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "format.hpp"
#include "powershave/error.hpp"

namespace powershave {

namespace {

double snap(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return *detail::parse_double(buf);
}

void check_axis(const std::vector<double>& a, const char* name) {
    if (a.empty()) fail(ErrorKind::invalid_argument, std::string(name) + " axis is empty");
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!std::isfinite(a[i])) fail(ErrorKind::invalid_argument, std::string(name) + " axis has a non-finite value");
        if (i > 0 && !(a[i] > a[i - 1]))
            fail(ErrorKind::invalid_argument, std::string(name) + " axis must be strictly increasing");
    }
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

}  // namespace

void SweepGrid::validate() const {
    check_axis(threshold_fracs, "threshold");
    check_axis(burst_lengths_s, "burst length");
    if (threshold_fracs.front() <= 0.0 || threshold_fracs.back() > 1.0)
        fail(ErrorKind::invalid_argument, "threshold fractions must lie in (0, 1]");
    if (burst_lengths_s.front() < 0.0) fail(ErrorKind::invalid_argument, "burst lengths must be non-negative");
    if (values.size() != threshold_fracs.size())
        fail(ErrorKind::invalid_argument, "grid has the wrong number of threshold rows");
    for (const auto& row : values)
        if (row.size() != burst_lengths_s.size())
            fail(ErrorKind::invalid_argument, "grid row has the wrong number of burst columns");
}

std::vector<double> axis_range(double start, double stop, double step) {
    if (!std::isfinite(start) || !std::isfinite(stop) || !(step > 0.0) || !std::isfinite(step))
        fail(ErrorKind::invalid_argument, "axis range needs finite start/stop and a positive step");
    if (stop < start) fail(ErrorKind::invalid_argument, "axis range stop is below start");
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    if (n > 100000) fail(ErrorKind::invalid_argument, "axis range has too many points");
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(snap(start + static_cast<double>(i) * step));
    return out;
}

std::vector<double> default_threshold_axis() { return axis_range(0.5, 0.95, 0.05); }
std::vector<double> default_burst_axis() { return axis_range(0.0, 0.2, 0.02); }

SweepGrid sweep_gpus_saved(const PowerTrace& trace, const std::vector<double>& threshold_fracs,
                           const std::vector<double>& burst_lengths_s, double gpu_unit_w) {
    trace.validate();
    SweepGrid g;
    g.threshold_fracs = threshold_fracs;
    g.burst_lengths_s = burst_lengths_s;
    g.trace_label = trace.source_label;
    g.values.assign(threshold_fracs.size(), std::vector<std::size_t>(burst_lengths_s.size(), 0));
    g.validate();
    if (!(gpu_unit_w > 0.0)) fail(ErrorKind::invalid_argument, "gpu_unit_w must be positive");
    for (std::size_t i = 0; i < threshold_fracs.size(); ++i)
        for (std::size_t j = 0; j < burst_lengths_s.size(); ++j)
            g.values[i][j] = gpus_saved(trace, threshold_fracs[i], burst_lengths_s[j], gpu_unit_w);
    return g;
}

GridFormat grid_format_from_string(const std::string& s) {
    if (s == "csv") return GridFormat::csv;
    if (s == "json") return GridFormat::json;
    fail(ErrorKind::invalid_argument, "unsupported grid format '" + s + "' (csv, json)");
}

std::string export_grid(const SweepGrid& g, GridFormat format) {
    g.validate();
    if (format == GridFormat::json) {
        Json j;
        j["trace_label"] = g.trace_label;
        j["threshold_fracs"] = g.threshold_fracs;
        j["burst_lengths_s"] = g.burst_lengths_s;
        j["values"] = g.values;
        return j.dump(2) + "\n";
    }
    std::string out;
    if (!g.trace_label.empty()) out += "#label=" + g.trace_label + "\n";
    out += "threshold_frac";
    for (double b : g.burst_lengths_s) out += "," + detail::fmt(b);
    out += "\n";
    for (std::size_t i = 0; i < g.values.size(); ++i) {
        out += detail::fmt(g.threshold_fracs[i]);
        for (std::size_t v : g.values[i]) out += "," + std::to_string(v);
        out += "\n";
    }
    return out;
}

SweepGrid import_grid(const std::string& data, GridFormat format) {
    SweepGrid g;
    if (format == GridFormat::json) {
        Json j;
        try {
            j = Json::parse(data);
            g.trace_label = j.at("trace_label").get<std::string>();
            g.threshold_fracs = j.at("threshold_fracs").get<std::vector<double>>();
            g.burst_lengths_s = j.at("burst_lengths_s").get<std::vector<double>>();
            g.values = j.at("values").get<std::vector<std::vector<std::size_t>>>();
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::parse, std::string("grid JSON: ") + e.what());
        }
        g.validate();
        return g;
    }
    std::istringstream in(data);
    std::string line;
    bool header = false;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.rfind("#label=", 0) == 0) {
            g.trace_label = line.substr(7);
            continue;
        }
        auto cells = split(line, ',');
        if (!header) {
            if (cells.empty() || cells[0] != "threshold_frac") fail(ErrorKind::parse, "grid CSV: missing header");
            for (std::size_t k = 1; k < cells.size(); ++k) {
                auto v = detail::parse_double(cells[k]);
                if (!v) fail(ErrorKind::parse, "grid CSV: bad burst length in header");
                g.burst_lengths_s.push_back(*v);
            }
            header = true;
            continue;
        }
        if (cells.size() != g.burst_lengths_s.size() + 1)
            fail(ErrorKind::parse, "grid CSV: row " + std::to_string(row) + " has the wrong number of cells");
        auto th = detail::parse_double(cells[0]);
        if (!th) fail(ErrorKind::parse, "grid CSV: bad threshold in row " + std::to_string(row));
        g.threshold_fracs.push_back(*th);
        std::vector<std::size_t> vals;
        for (std::size_t k = 1; k < cells.size(); ++k) {
            std::size_t v = 0;
            const auto& c = cells[k];
            auto res = std::from_chars(c.data(), c.data() + c.size(), v);
            if (res.ec != std::errc() || res.ptr != c.data() + c.size())
                fail(ErrorKind::parse, "grid CSV: bad count in row " + std::to_string(row));
            vals.push_back(v);
        }
        g.values.push_back(std::move(vals));
    }
    if (!header) fail(ErrorKind::parse, "grid CSV: missing header");
    g.validate();
    return g;
}

std::vector<ComparisonRow> compare_strategies(const PowerTrace& trace, const std::vector<Strategy>& strategies,
                                              const SimConfig& config) {
    if (strategies.empty()) fail(ErrorKind::invalid_argument, "compare needs at least one strategy");
    std::set<std::string> seen;
    for (const auto& s : strategies)
        if (!seen.insert(s.name).second) fail(ErrorKind::invalid_argument, "duplicate strategy name '" + s.name + "'");

    const ShavingResult base = simulate_shaving(trace, Strategy::none(), config);
    std::vector<ComparisonRow> rows;
    for (const auto& s : strategies) {
        try {
            const ShavingResult r = simulate_shaving(trace, s, config);
            ComparisonRow row;
            row.strategy_name = s.name;
            row.computational_gain_pct = computational_gain(r, base, config);
            row.dummy_energy_j = r.total_dummy_energy_j;
            row.total_unserved_energy_j = r.total_unserved_energy_j;
            row.device_energy_throughput_j = r.device_energy_throughput_j;
            row.peak_grid_w = r.peak_grid_w;
            rows.push_back(row);
        } catch (const Error& e) {
            throw Error(e.kind(), "strategy '" + s.name + "': " + e.what());
        }
    }
    return rows;
}

std::string comparison_to_csv(const std::vector<ComparisonRow>& rows) {
    using detail::fmt;
    std::string out =
        "strategy_name,computational_gain_pct,dummy_energy_j,total_unserved_energy_j,device_energy_throughput_j,peak_grid_w\n";
    for (const auto& r : rows)
        out += r.strategy_name + ',' + fmt(r.computational_gain_pct) + ',' + fmt(r.dummy_energy_j) + ',' +
               fmt(r.total_unserved_energy_j) + ',' + fmt(r.device_energy_throughput_j) + ',' + fmt(r.peak_grid_w) + '\n';
    return out;
}

}  // namespace powershave
