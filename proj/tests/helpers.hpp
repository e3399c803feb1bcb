#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "powershave/spikes.hpp"
#include "powershave/trace.hpp"

namespace testing_support {

inline powershave::PowerTrace make_trace(std::vector<double> samples, double dt = 0.01, double rack_max = 1000.0) {
    powershave::PowerTrace t;
    t.dt_s = dt;
    t.rack_max_w = rack_max;
    t.samples = std::move(samples);
    t.source_label = "test";
    return t;
}

// Random trace with plateaus, so runs above a threshold have varied lengths.
inline powershave::PowerTrace random_trace(std::mt19937_64& rng, std::size_t max_len = 10000, double rack_max = 1000.0) {
    std::uniform_int_distribution<std::size_t> len_d(1, max_len);
    std::uniform_real_distribution<double> p_d(0.0, rack_max);
    std::uniform_int_distribution<int> hold_d(1, 30);
    std::vector<double> s(len_d(rng));
    for (std::size_t i = 0; i < s.size();) {
        const double v = p_d(rng);
        for (int h = hold_d(rng); h > 0 && i < s.size(); --h) s[i++] = v;
    }
    const double dts[] = {0.001, 0.005, 0.01, 0.1};
    return make_trace(std::move(s), dts[rng() % 4], rack_max);
}

struct NaiveSpike {
    std::size_t start, len;
    double peak, excess_sum;
};

// Independent scan: build an above/below mask, then read off rising and falling edges.
inline std::vector<NaiveSpike> naive_spikes(const std::vector<double>& p, double theta) {
    std::vector<int> mask(p.size() + 2, 0);
    for (std::size_t i = 0; i < p.size(); ++i) mask[i + 1] = p[i] > theta ? 1 : 0;
    std::vector<NaiveSpike> out;
    std::size_t open = 0;
    for (std::size_t k = 1; k < mask.size(); ++k) {
        if (mask[k] == 1 && mask[k - 1] == 0) open = k - 1;
        if (mask[k] == 0 && mask[k - 1] == 1) {
            NaiveSpike s{open, (k - 1) - open, 0.0, 0.0};
            for (std::size_t i = open; i < open + s.len; ++i) {
                if (p[i] > s.peak) s.peak = p[i];
                s.excess_sum += p[i] - theta;
            }
            out.push_back(s);
        }
    }
    return out;
}

}  // namespace testing_support
