#include "powershave/spikes.hpp"

#include <algorithm>
#include <cmath>

#include "format.hpp"
#include "powershave/error.hpp"

namespace powershave {

double ThresholdSpec::resolve(double rack_max_w) const {
    if (absolute_w.has_value() == fraction_of_max.has_value())
        fail(ErrorKind::invalid_argument, "threshold needs exactly one of absolute watts or fraction of rack max");
    double w = 0.0;
    if (absolute_w) {
        w = *absolute_w;
    } else {
        const double f = *fraction_of_max;
        if (!(f > 0.0 && f <= 1.0)) fail(ErrorKind::invalid_argument, "threshold fraction must lie in (0, 1]");
        w = f * rack_max_w;
    }
    if (!(w > 0.0) || !(w <= rack_max_w))
        fail(ErrorKind::invalid_argument, "resolved threshold must lie in (0, rack_max_w]");
    return w;
}

std::vector<double> default_energy_bins() {
    std::vector<double> e;
    for (int i = 0; i <= 30; ++i) e.push_back(5.0 * i);
    return e;
}

std::vector<Spike> detect_spikes_at(const PowerTrace& trace, double theta) {
    if (!(theta > 0.0) || !std::isfinite(theta)) fail(ErrorKind::invalid_argument, "threshold must be positive");
    std::vector<Spike> out;
    const auto& p = trace.samples;
    const std::size_t n = p.size();
    std::size_t i = 0;
    while (i < n) {
        if (!(p[i] > theta)) {
            ++i;
            continue;
        }
        Spike s;
        s.start_index = i;
        double peak = p[i], excess_sum = 0.0;
        std::size_t j = i;
        for (; j < n && p[j] > theta; ++j) {
            peak = std::max(peak, p[j]);
            excess_sum += p[j] - theta;
        }
        s.length = j - i;
        s.start_s = static_cast<double>(i) * trace.dt_s;
        s.duration_s = static_cast<double>(s.length) * trace.dt_s;
        s.peak_excess_w = peak - theta;
        s.energy_above_j = excess_sum * trace.dt_s;
        s.peak_frac = peak / trace.rack_max_w;
        out.push_back(s);
        i = j;
    }
    return out;
}

std::vector<Spike> detect_spikes(const PowerTrace& trace, const ThresholdSpec& threshold) {
    return detect_spikes_at(trace, threshold.resolve(trace.rack_max_w));
}

double nearest_rank(std::vector<double> v, double p) {
    if (v.empty()) fail(ErrorKind::invalid_argument, "percentile of empty sample");
    if (!(p > 0.0 && p <= 100.0)) fail(ErrorKind::invalid_argument, "percentile must lie in (0, 100]");
    std::sort(v.begin(), v.end());
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(v.size()) - 1e-12));
    rank = std::clamp<std::size_t>(rank, 1, v.size());
    return v[rank - 1];
}

SpikeStats spike_statistics(const std::vector<Spike>& spikes, const std::vector<double>& bins) {
    if (bins.size() < 2) fail(ErrorKind::invalid_argument, "histogram needs at least two bin edges");
    for (std::size_t i = 1; i < bins.size(); ++i)
        if (!(bins[i] > bins[i - 1])) fail(ErrorKind::invalid_argument, "histogram bin edges must be strictly increasing");

    SpikeStats s;
    s.histogram_edges_j = bins;
    s.histogram_counts.assign(bins.size() - 1, 0);
    s.count = spikes.size();
    s.empty = spikes.empty();
    if (s.empty) return s;

    std::vector<double> dur, frac;
    double e_sum = 0.0;
    std::size_t short_count = 0;
    for (const auto& sp : spikes) {
        dur.push_back(sp.duration_s);
        frac.push_back(sp.peak_frac);
        e_sum += sp.energy_above_j;
        if (sp.duration_s <= 0.1 + 1e-12) ++short_count;
        auto it = std::upper_bound(bins.begin(), bins.end(), sp.energy_above_j);
        auto idx = static_cast<std::ptrdiff_t>(it - bins.begin()) - 1;
        idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(s.histogram_counts.size()) - 1);
        ++s.histogram_counts[static_cast<std::size_t>(idx)];
    }
    const double n = static_cast<double>(spikes.size());
    s.energy_mean_j = e_sum / n;
    s.frac_leq_100ms = static_cast<double>(short_count) / n;
    for (int p : kReportedPercentiles) {
        s.duration_percentiles[p] = nearest_rank(dur, p);
        s.peak_frac_quantiles[p] = nearest_rank(frac, p);
    }
    for (int p : {5, 10, 25}) s.peak_frac_quantiles[p] = nearest_rank(frac, p);
    return s;
}

std::vector<std::pair<double, SpikeStats>> threshold_sweep(const PowerTrace& trace,
                                                           const std::vector<ThresholdSpec>& thresholds,
                                                           const std::vector<double>& bins) {
    if (thresholds.empty()) fail(ErrorKind::invalid_argument, "threshold list is empty");
    std::vector<std::pair<double, SpikeStats>> out;
    for (const auto& t : thresholds) {
        const double w = t.resolve(trace.rack_max_w);
        out.emplace_back(w, spike_statistics(detect_spikes_at(trace, w), bins));
    }
    return out;
}

Json stats_to_json(const SpikeStats& s) {
    Json j;
    j["count"] = s.count;
    j["empty"] = s.empty;
    Json dp = Json::object();
    for (const auto& [p, v] : s.duration_percentiles) dp["p" + std::to_string(p)] = v;
    j["duration_percentiles"] = dp;
    j["frac_leq_100ms"] = s.frac_leq_100ms;
    j["energy_histogram"] = {{"edges_j", s.histogram_edges_j}, {"counts", s.histogram_counts}};
    j["energy_mean_j"] = s.energy_mean_j;
    Json pq = Json::object();
    for (const auto& [p, v] : s.peak_frac_quantiles) pq["p" + std::to_string(p)] = v;
    j["peak_frac_quantiles"] = pq;
    return j;
}

std::string spikes_to_csv(const std::vector<Spike>& spikes) {
    using detail::fmt;
    std::string out = "start_s,duration_s,peak_excess_w,energy_above_j,peak_frac\n";
    for (const auto& s : spikes) {
        out += fmt(s.start_s) + ',' + fmt(s.duration_s) + ',' + fmt(s.peak_excess_w) + ',' + fmt(s.energy_above_j) +
               ',' + fmt(s.peak_frac) + '\n';
    }
    return out;
}

}  // namespace powershave
