#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

#include "thzlab/absorption.hpp"
#include "thzlab/errors.hpp"

namespace thzlab {

struct SpectrumConfig {
    double epsilon_f_hz = 0.0;  // start frequency of the spectrum of interest
    double b_tot_hz = 0.0;
    double b_max_hz = 0.0;
    std::size_t n_s = 0;

    void validate() const {
        if (!(epsilon_f_hz > 0.0)) throw InvalidArgument("SpectrumConfig: epsilon_f must be > 0");
        if (n_s < 1) throw InvalidArgument("SpectrumConfig: need at least one sub-band");
        if (!(b_tot_hz > 0.0 && b_tot_hz <= static_cast<double>(n_s) * b_max_hz))
            throw Infeasible("SpectrumConfig: b_tot must satisfy 0 < b_tot <= n_s * b_max");
    }
};

// A = L - I/2, the bandwidth-to-center-frequency map.
inline std::vector<std::vector<double>> mapping_matrix(std::size_t n_s) {
    if (n_s < 1) throw InvalidArgument("mapping_matrix: n_s must be >= 1");
    std::vector<std::vector<double>> a(n_s, std::vector<double>(n_s, 0.0));
    for (std::size_t r = 0; r < n_s; ++r) {
        for (std::size_t c = 0; c < r; ++c) a[r][c] = 1.0;
        a[r][r] = 0.5;
    }
    return a;
}

// f_s = epsilon_f + sum_{k<s} b_k + b_s/2.
inline std::vector<double> centers(const SpectrumConfig& config, const std::vector<double>& b) {
    if (b.size() != config.n_s)
        throw DimensionMismatch("centers: bandwidth vector length != n_s");
    std::vector<double> f(b.size());
    double prefix = 0.0;
    for (std::size_t s = 0; s < b.size(); ++s) {
        f[s] = config.epsilon_f_hz + prefix + 0.5 * b[s];
        prefix += b[s];
    }
    return f;
}

struct SpectrumPartition {
    std::vector<double> b_hz;
    std::vector<double> f_hz;  // derived via centers()

    SpectrumPartition(const SpectrumConfig& config, std::vector<double> b)
        : b_hz(std::move(b)), f_hz(centers(config, b_hz)) {
        for (double bs : b_hz)
            if (!(bs >= 0.0 && bs <= config.b_max_hz + 1e-9 * config.b_max_hz))
                throw InvalidArgument("SpectrumPartition: b outside [0, b_max]");
    }
};

// DAMC pairing: user i (i-th shortest distance) gets the sub-band with the
// i-th largest mean absorption. assignment[i] = sub-band index for user i.
inline std::vector<std::size_t> damc_pairing(const std::vector<double>& d_sorted,
                                             const AbsorptionModel& model,
                                             const SpectrumPartition& partition) {
    const std::size_t n = d_sorted.size();
    if (partition.b_hz.size() != n)
        throw DimensionMismatch("damc_pairing: partition size != user count");
    std::vector<double> mean_k(n);
    for (std::size_t s = 0; s < n; ++s) {
        double lo = partition.f_hz[s] - 0.5 * partition.b_hz[s];
        double hi = partition.f_hz[s] + 0.5 * partition.b_hz[s];
        mean_k[s] = model.mean_k(lo, hi);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return mean_k[a] > mean_k[b]; });
    return order;
}

}  // namespace thzlab
