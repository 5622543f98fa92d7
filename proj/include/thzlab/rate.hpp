#pragma once

#include <cmath>
#include <vector>

#include "thzlab/errors.hpp"
#include "thzlab/quadrature.hpp"
#include "thzlab/scenario.hpp"
#include "thzlab/spectrum.hpp"

namespace thzlab {

// Floor applied to r before log in the proportional-fair objective; keeps the
// loss finite when a solver emits near-zero allocations.
inline constexpr double kRateFloor = 1.0;  // bit/s

struct RateResult {
    std::vector<double> r_bps;
    double objective_e = 0.0;  // sum log r (floored)
    double r_ag_bps = 0.0;     // sum r
};

namespace detail {

inline double snr_log2_integrand(double f, double d, double p, double b, double rho, double k) {
    double expo = -k * d;
    if (expo < -700.0) expo = -700.0;
    double snr = p * rho * std::exp(expo) / (f * f * d * d * b);
    if (!std::isfinite(snr))
        throw NonFiniteIntegrand("rate integrand overflow at f=" + std::to_string(f));
    return std::log1p(snr) / M_LN2;
}

}  // namespace detail

// Per-sub-band rate by quadrature of log2(1 + p rho e^{-k(f) d} / (f^2 d^2 b)).
inline double rate_subband(const Scenario& sc, const QuadratureSpec& quad, double d_s, double p_s,
                           double b_s, double f_s) {
    if (p_s <= 0.0 || b_s <= 0.0) return 0.0;
    const double lo = f_s - 0.5 * b_s;
    const double hi = f_s + 0.5 * b_s;
    if (lo < sc.absorption.f_lo() || hi > sc.absorption.f_hi())
        throw FrequencyOutOfDomain("rate_subband: sub-band outside absorption domain");
    const double rho = sc.budget.rho;
    auto integrand = [&](double f) {
        return detail::snr_log2_integrand(f, d_s, p_s, b_s, rho, sc.absorption(f));
    };
    return integrate(integrand, lo, hi, quad);
}

// Tractable midpoint form for exponential absorption: r = b log2(1 + SNR(f_s)).
// f_s = epsilon_f + b_prefix + b/2.
inline double rate_closed_form(const Scenario& sc, double d_s, double p_s, double b_s,
                               double b_prefix, const ExponentialAbsorption& eta) {
    if (p_s <= 0.0 || b_s <= 0.0) return 0.0;
    const double f_s = sc.spectrum.epsilon_f_hz + b_prefix + 0.5 * b_s;
    const double k = std::exp(eta.eta1 + eta.eta2 * f_s) + eta.eta3;
    double expo = -d_s * k;
    if (expo < -700.0) expo = -700.0;
    const double snr = p_s * sc.budget.rho * std::exp(expo) / (b_s * d_s * d_s * f_s * f_s);
    return b_s * std::log1p(snr) / M_LN2;
}

inline double objective_from_rates(const std::vector<double>& r) {
    double e = 0.0;
    for (double rs : r) e += std::log(std::max(rs, kRateFloor));
    return e;
}

inline std::vector<double> per_band_rates(const Scenario& sc, const QuadratureSpec& quad,
                                          const std::vector<double>& p,
                                          const std::vector<double>& b) {
    if (p.size() != sc.spectrum.n_s || b.size() != sc.spectrum.n_s)
        throw DimensionMismatch("per_band_rates: len(p), len(b) must equal n_s");
    std::vector<double> f = centers(sc.spectrum, b);
    std::vector<double> r(p.size());
    for (std::size_t s = 0; s < p.size(); ++s)
        r[s] = rate_subband(sc, quad, sc.d_m[s], p[s], b[s], f[s]);
    return r;
}

inline RateResult evaluate(const Scenario& sc, const QuadratureSpec& quad,
                           const std::vector<double>& p, const std::vector<double>& b) {
    RateResult res;
    res.r_bps = per_band_rates(sc, quad, p, b);
    res.objective_e = objective_from_rates(res.r_bps);
    for (double rs : res.r_bps) res.r_ag_bps += rs;
    return res;
}

}  // namespace thzlab
