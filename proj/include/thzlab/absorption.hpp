#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "thzlab/errors.hpp"
#include "thzlab/quadrature.hpp"

namespace thzlab {

enum class RegionTag { NACSR, PACSR, UNTAGGED };

enum class Interpolation { Linear, CubicMonotone };

// Tabulated molecular absorption coefficient k(f), strictly increasing in f.
struct AbsorptionTable {
    std::vector<double> freq_hz;
    std::vector<double> k_per_m;
    RegionTag tag = RegionTag::UNTAGGED;

    AbsorptionTable() = default;
    AbsorptionTable(std::vector<double> f, std::vector<double> k,
                    RegionTag t = RegionTag::UNTAGGED)
        : freq_hz(std::move(f)), k_per_m(std::move(k)), tag(t) {
        validate();
    }

    void validate() const {
        if (freq_hz.size() != k_per_m.size())
            throw DimensionMismatch("AbsorptionTable: frequency/k length mismatch");
        if (freq_hz.size() < 2)
            throw InvalidArgument("AbsorptionTable: need at least 2 entries");
        for (std::size_t i = 1; i < freq_hz.size(); ++i)
            if (!(freq_hz[i] > freq_hz[i - 1]))
                throw InvalidArgument("AbsorptionTable: frequencies must be strictly increasing");
        for (double k : k_per_m)
            if (!(k >= 0.0)) throw InvalidArgument("AbsorptionTable: negative k");
    }

    std::size_t size() const { return freq_hz.size(); }
    double f_lo() const { return freq_hz.front(); }
    double f_hi() const { return freq_hz.back(); }
};

// k(f) = exp(eta1 + eta2*f) + eta3 over a declared domain [f_lo, f_hi].
struct ExponentialAbsorption {
    double eta1 = 0.0;  // dimensionless
    double eta2 = 0.0;  // per Hz
    double eta3 = 0.0;  // per meter
    double f_lo = 0.0;
    double f_hi = 0.0;

    ExponentialAbsorption() = default;
    ExponentialAbsorption(double e1, double e2, double e3, double lo, double hi)
        : eta1(e1), eta2(e2), eta3(e3), f_lo(lo), f_hi(hi) {
        if (!(f_lo < f_hi))
            throw InvalidArgument("ExponentialAbsorption: empty domain");
        // The exp term is monotone in f, so k attains its minimum at an endpoint.
        if (value(f_lo) < 0.0 || value(f_hi) < 0.0)
            throw InvalidArgument("ExponentialAbsorption: k < 0 inside declared domain");
    }

    double value(double f) const { return std::exp(eta1 + eta2 * f) + eta3; }
};

namespace detail {

// Fritsch-Carlson monotone cubic slopes.
inline std::vector<double> monotone_slopes(const std::vector<double>& x,
                                           const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> delta(n - 1), m(n);
    for (std::size_t i = 0; i + 1 < n; ++i)
        delta[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i)
        m[i] = (delta[i - 1] * delta[i] > 0.0) ? 0.5 * (delta[i - 1] + delta[i]) : 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (delta[i] == 0.0) {
            m[i] = m[i + 1] = 0.0;
            continue;
        }
        double a = m[i] / delta[i];
        double b = m[i + 1] / delta[i];
        double s = a * a + b * b;
        if (s > 9.0) {
            double t = 3.0 / std::sqrt(s);
            m[i] = t * a * delta[i];
            m[i + 1] = t * b * delta[i];
        }
    }
    return m;
}

}  // namespace detail

struct SyntheticAbsorption {
    ExponentialAbsorption base;
    double ripple_amplitude = 0.0;  // per meter
    double ripple_period = 1.0;     // Hz
};

// Pointwise k(f) model. Immutable after construction; concurrent reads are safe.
class AbsorptionModel {
  public:
    static AbsorptionModel from_table(AbsorptionTable table,
                                      Interpolation interp = Interpolation::CubicMonotone) {
        AbsorptionModel m;
        m.table_ = std::move(table);
        m.interp_ = interp;
        if (interp == Interpolation::CubicMonotone)
            m.slopes_ = detail::monotone_slopes(m.table_->freq_hz, m.table_->k_per_m);
        m.f_lo_ = m.table_->f_lo();
        m.f_hi_ = m.table_->f_hi();
        m.tag_ = m.table_->tag;
        return m;
    }

    static AbsorptionModel from_exponential(ExponentialAbsorption e,
                                            RegionTag tag = RegionTag::UNTAGGED) {
        AbsorptionModel m;
        m.exp_ = e;
        m.f_lo_ = e.f_lo;
        m.f_hi_ = e.f_hi;
        m.tag_ = tag;
        return m;
    }

    static AbsorptionModel synthetic(ExponentialAbsorption base, double ripple_amplitude,
                                     double ripple_period, RegionTag tag = RegionTag::UNTAGGED) {
        if (!(ripple_period > 0.0))
            throw InvalidArgument("AbsorptionModel: ripple_period must be > 0");
        AbsorptionModel m;
        m.synth_ = SyntheticAbsorption{base, ripple_amplitude, ripple_period};
        m.f_lo_ = base.f_lo;
        m.f_hi_ = base.f_hi;
        m.tag_ = tag;
        return m;
    }

    double f_lo() const { return f_lo_; }
    double f_hi() const { return f_hi_; }
    RegionTag tag() const { return tag_; }
    bool is_exponential() const { return exp_.has_value(); }
    const ExponentialAbsorption& exponential() const {
        if (!exp_) throw InvalidArgument("AbsorptionModel: not exponential");
        return *exp_;
    }
    const AbsorptionTable* table() const { return table_ ? &*table_ : nullptr; }
    const SyntheticAbsorption* synthetic_params() const { return synth_ ? &*synth_ : nullptr; }
    Interpolation interpolation() const { return interp_; }

    // Out-of-domain evaluation is an error, never extrapolation.
    double operator()(double f) const {
        if (!(f >= f_lo_ && f <= f_hi_)) {
            std::ostringstream os;
            os << "frequency " << f << " Hz outside absorption domain [" << f_lo_ << ", "
               << f_hi_ << "]";
            throw FrequencyOutOfDomain(os.str());
        }
        if (exp_) return exp_->value(f);
        if (synth_) {
            double k = synth_->base.value(f) +
                       synth_->ripple_amplitude *
                           std::sin(2.0 * M_PI * f / synth_->ripple_period);
            return std::max(k, 0.0);
        }
        return eval_table(f);
    }

    // Mean of k over [a, b] via quadrature (used by the DAMC ranking).
    double mean_k(double a, double b, int nodes = 33) const {
        if (!(b > a)) return (*this)(a);
        return integrate_gauss_legendre([this](double f) { return (*this)(f); }, a, b, nodes) /
               (b - a);
    }

  private:
    AbsorptionModel() = default;

    double eval_table(double f) const {
        const auto& x = table_->freq_hz;
        const auto& y = table_->k_per_m;
        auto it = std::lower_bound(x.begin(), x.end(), f);
        if (it != x.end() && *it == f) return y[it - x.begin()];  // exact at knots
        std::size_t hi = it - x.begin();
        std::size_t lo = hi - 1;
        double h = x[hi] - x[lo];
        double t = (f - x[lo]) / h;
        if (interp_ == Interpolation::Linear) return y[lo] + t * (y[hi] - y[lo]);
        // Cubic Hermite with Fritsch-Carlson slopes; monotone, no overshoot.
        double t2 = t * t, t3 = t2 * t;
        double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
        double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        return h00 * y[lo] + h10 * h * slopes_[lo] + h01 * y[hi] + h11 * h * slopes_[hi];
    }

    std::optional<AbsorptionTable> table_;
    std::optional<ExponentialAbsorption> exp_;
    std::optional<SyntheticAbsorption> synth_;
    std::vector<double> slopes_;
    Interpolation interp_ = Interpolation::CubicMonotone;
    double f_lo_ = 0.0, f_hi_ = 0.0;
    RegionTag tag_ = RegionTag::UNTAGGED;
};

inline double evaluate(const AbsorptionModel& model, double f) { return model(f); }

// ---------------------------------------------------------------------------
// Exponential least-squares fit: k(f) ~ exp(eta1 + eta2 f) + eta3.
// Nonconvex in eta2; solved by variable projection (linear in (e^eta1, eta3)
// for fixed eta2) with a multi-start 1-D minimization over eta2.
// ---------------------------------------------------------------------------

struct FitResult {
    ExponentialAbsorption model;
    double max_rel_error = 0.0;
};

namespace detail {

struct VarProSolution {
    double amp = 0.0;   // coefficient of e^{eta2 (f - f_mid)}
    double eta3 = 0.0;
    double sse = std::numeric_limits<double>::infinity();
    bool valid = false;  // amp > 0 branch
};

inline VarProSolution varpro_solve(const std::vector<double>& u, const std::vector<double>& k,
                                   double eta2) {
    // Least squares k_i = amp * e^{eta2 u_i} + eta3.
    const std::size_t n = u.size();
    double see = 0, se = 0, sek = 0, sk = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double e = std::exp(eta2 * u[i]);
        if (!std::isfinite(e)) return {};
        see += e * e;
        se += e;
        sek += e * k[i];
        sk += k[i];
    }
    double det = see * n - se * se;
    VarProSolution sol;
    if (std::abs(det) < 1e-300) return sol;
    sol.amp = (sek * n - se * sk) / det;
    sol.eta3 = (see * sk - se * sek) / det;
    if (!(sol.amp > 0.0)) return sol;  // degenerate branch rejected by the caller
    double sse = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = sol.amp * std::exp(eta2 * u[i]) + sol.eta3 - k[i];
        sse += r * r;
    }
    sol.sse = sse;
    sol.valid = true;
    return sol;
}

// Golden-section minimization of a 1-D function on [a, b].
template <class F>
inline double golden_minimize(const F& f, double a, double b, int iters = 200) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < iters; ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    return fc < fd ? c : d;
}

}  // namespace detail

inline FitResult fit_exponential(const AbsorptionTable& table, double f_lo, double f_hi) {
    std::vector<double> f, k;
    for (std::size_t i = 0; i < table.size(); ++i)
        if (table.freq_hz[i] >= f_lo && table.freq_hz[i] <= f_hi) {
            f.push_back(table.freq_hz[i]);
            k.push_back(table.k_per_m[i]);
        }
    if (f.size() < 4)
        throw InsufficientData("fit_exponential: fewer than 4 table entries in range");

    const double f_mid = 0.5 * (f.front() + f.back());
    const double span = f.back() - f.front();
    if (!(span > 0)) throw InsufficientData("fit_exponential: zero span");
    std::vector<double> u(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) u[i] = f[i] - f_mid;

    auto sse_of = [&](double eta2) {
        auto sol = detail::varpro_solve(u, k, eta2);
        if (sol.valid) return sol.sse;
        // Degenerate/exp-free branch: constant model eta3 = mean(k).
        double mean = 0;
        for (double v : k) mean += v;
        mean /= k.size();
        double sse = 0;
        for (double v : k) sse += (v - mean) * (v - mean);
        return sse + 1e-30;  // keep valid branches preferred at equal fit
    };

    // Multi-start over eta2 sign/scale; scales relative to the fitted span.
    const double s0 = 1.0 / span;
    double best_eta2 = 0.0;
    double best_sse = std::numeric_limits<double>::infinity();
    bool any = false;
    for (double mag : {4.0 * s0, 1.0 * s0, 0.25 * s0, 0.0625 * s0}) {
        for (double sign : {-1.0, 1.0}) {
            double start = sign * mag;
            double lo = start * 8.0, hi = start / 8.0;
            if (lo > hi) std::swap(lo, hi);
            double e2 = detail::golden_minimize(sse_of, lo, hi);
            double s = sse_of(e2);
            if (std::isfinite(s)) any = true;
            if (s < best_sse) {
                best_sse = s;
                best_eta2 = e2;
            }
        }
    }
    if (!any) throw FitDiverged("fit_exponential: no start converged");
    // Flat-data candidate: a tiny |eta2| window around zero.
    {
        double e2 = detail::golden_minimize(sse_of, -0.01 * s0, 0.01 * s0);
        double s = sse_of(e2);
        if (s < best_sse) {
            best_sse = s;
            best_eta2 = e2;
        }
    }
    // Polish around the winner.
    {
        double w = std::max(std::abs(best_eta2) * 0.05, 1e-6 * s0);
        double e2 = detail::golden_minimize(sse_of, best_eta2 - w, best_eta2 + w, 300);
        if (sse_of(e2) <= best_sse) best_eta2 = e2;
    }

    auto sol = detail::varpro_solve(u, k, best_eta2);
    double eta1, eta2, eta3;
    if (sol.valid) {
        eta2 = best_eta2;
        eta1 = std::log(sol.amp) - eta2 * f_mid;
        eta3 = sol.eta3;
    } else {
        // Constant-table limit: exp term pinned to a negligible amplitude.
        double mean = 0;
        for (double v : k) mean += v;
        mean /= k.size();
        eta2 = 0.0;
        eta1 = std::log(std::max(mean * 1e-12, 1e-300));
        eta3 = mean - std::exp(eta1);
    }
    // Keep the model physical on its domain (fits to noisy data may dip below 0).
    double lo_end = std::exp(eta1 + eta2 * f.front()) + eta3;
    double hi_end = std::exp(eta1 + eta2 * f.back()) + eta3;
    double kmin = std::min(lo_end, hi_end);
    if (kmin < 0.0) eta3 -= kmin;

    ExponentialAbsorption model(eta1, eta2, eta3, f.front(), f.back());
    double max_rel = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        double denom = std::max(k[i], 1e-300);
        max_rel = std::max(max_rel, std::abs(model.value(f[i]) - k[i]) / denom);
    }
    return {model, max_rel};
}

// ---------------------------------------------------------------------------
// Synthetic NACSR spectra (stand-ins for measured absorption data).
// ---------------------------------------------------------------------------

enum class SyntheticProfile { SmoothExponential, Wiggly };

inline AbsorptionTable synthesize_nacsr(double f_lo, double f_hi, SyntheticProfile profile,
                                        std::uint64_t seed, std::size_t n_points = 512) {
    if (!(f_lo < f_hi)) throw InvalidArgument("synthesize_nacsr: f_lo must be < f_hi");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jit(0.9, 1.1);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);

    const double span = f_hi - f_lo;
    const double k_start = 1.2 * jit(rng);
    const double k_end = 0.28 * jit(rng);
    const double eta3 = 0.08 * jit(rng);
    const double eta2 = std::log((k_end - eta3) / (k_start - eta3)) / span;
    const double eta1 = std::log(k_start - eta3) - eta2 * f_lo;
    const double ph = phase(rng);

    std::vector<double> f(n_points), k(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        double fi = f_lo + span * static_cast<double>(i) / (n_points - 1);
        double base = std::exp(eta1 + eta2 * fi) + eta3;
        double v;
        if (profile == SyntheticProfile::SmoothExponential) {
            // Mild smooth deviation; stays within the exponential-fit 5% band.
            v = base * (1.0 + 0.01 * std::sin(2.0 * M_PI * 1.5 * (fi - f_lo) / span + ph));
        } else {
            // Fast multiplicative ripple; deliberately far from any exponential.
            v = base * (1.0 + 0.45 * std::sin(2.0 * M_PI * 4.0 * (fi - f_lo) / span + ph));
        }
        f[i] = fi;
        k[i] = std::max(v, 1e-6);
    }
    return AbsorptionTable(std::move(f), std::move(k), RegionTag::NACSR);
}

// ---------------------------------------------------------------------------
// CSV table format: header `frequency_hz,k_per_m`, strictly increasing rows.
// ---------------------------------------------------------------------------

inline AbsorptionTable load_absorption_csv(std::istream& in,
                                           RegionTag tag = RegionTag::UNTAGGED) {
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument("absorption CSV: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "frequency_hz,k_per_m")
        throw InvalidArgument("absorption CSV: expected header 'frequency_hz,k_per_m'");
    std::vector<double> f, k;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        double fv, kv;
        char comma;
        if (!(ss >> fv >> comma >> kv) || comma != ',')
            throw InvalidArgument("absorption CSV: malformed row " + std::to_string(row));
        if (!f.empty() && fv == f.back())
            throw InvalidArgument("absorption CSV: duplicate frequency at row " +
                                  std::to_string(row));
        f.push_back(fv);
        k.push_back(kv);
    }
    return AbsorptionTable(std::move(f), std::move(k), tag);
}

inline AbsorptionTable load_absorption_csv_file(const std::string& path,
                                                RegionTag tag = RegionTag::UNTAGGED) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("absorption CSV: cannot open " + path);
    return load_absorption_csv(in, tag);
}

inline void save_absorption_csv(std::ostream& out, const AbsorptionTable& table) {
    out << "frequency_hz,k_per_m\n";
    char buf[80];
    for (std::size_t i = 0; i < table.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", table.freq_hz[i], table.k_per_m[i]);
        out << buf;
    }
}

// Table I exponential presets, shipped verbatim. With f in Hz the sr_n2 values
// go negative across its own NACSR, so they are flagged and never used as a
// default k(f) source.
struct EtaPreset {
    std::string name;
    double eta1, eta2, eta3;
    bool unit_warning;
};

inline std::vector<EtaPreset> table1_eta_presets() {
    return {
        {"sr_n1", std::pow(10.0, 1.83), -std::pow(10.0, -10.04), std::pow(10.0, -1.23), true},
        {"sr_n2", std::pow(10.0, 0.89), -std::pow(10.0, -10.8), -std::pow(10.0, -1.53), true},
    };
}

}  // namespace thzlab
