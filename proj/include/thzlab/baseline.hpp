#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "thzlab/errors.hpp"
#include "thzlab/rate.hpp"

namespace thzlab {

// ---------------------------------------------------------------------------
// Substitution b = xi1 + xi2 log(xi3 z) and its inverse.
// ---------------------------------------------------------------------------

struct TransformParams {
    double xi1 = 0.0, xi2 = 0.0, xi3 = 0.0;
    double z_min = 0.0, z_max = 0.0;

    TransformParams() = default;
    TransformParams(double x1, double x2, double x3, double b_max) : xi1(x1), xi2(x2), xi3(x3) {
        if (!(xi2 != 0.0 && xi3 > 0.0))
            throw InvalidArgument("TransformParams: need xi2 != 0 and xi3 > 0");
        z_min = z_from_b(0.0);
        z_max = z_from_b(b_max);
    }

    double b_from_z(double z) const { return xi1 + xi2 * std::log(xi3 * z); }
    double z_from_b(double b) const { return std::exp((b - xi1) / xi2) / xi3; }

    // Eq. 5d in z space, kept in the log domain:
    //   xi2 * sum log(xi3 z_s) = b_tot - n_s * xi1.
    double log_domain_sum(const std::vector<double>& z) const {
        double acc = 0.0;
        for (double zs : z) acc += std::log(xi3 * zs);
        return xi2 * acc;
    }
};

inline TransformParams table1_xi(double b_max) {
    return TransformParams(std::pow(10.0, 9.7), std::pow(10.0, 10.7), std::pow(10.0, -3.0),
                           b_max);
}

// ---------------------------------------------------------------------------
// Projections onto {0 <= x <= cap, sum x = total} and the <= variant.
// Bisection on the common shift tau of clamp(v - tau).
// ---------------------------------------------------------------------------

namespace detail {

inline void project_capped_simplex(std::vector<double>& v, double cap, double total) {
    const std::size_t n = v.size();
    if (total > cap * static_cast<double>(n) + 1e-12 * cap)
        throw Infeasible("project_capped_simplex: total exceeds n * cap");
    auto sum_at = [&](double tau) {
        double s = 0.0;
        for (double vi : v) s += std::clamp(vi - tau, 0.0, cap);
        return s;
    };
    double lo = -cap, hi = cap;
    for (double vi : v) {
        lo = std::min(lo, vi - cap);
        hi = std::max(hi, vi);
    }
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (sum_at(mid) > total)
            lo = mid;
        else
            hi = mid;
    }
    double tau = 0.5 * (lo + hi);
    for (auto& vi : v) vi = std::clamp(vi - tau, 0.0, cap);
    // Exact sum by spreading the bisection remainder over interior coordinates.
    double s = 0.0;
    for (double vi : v) s += vi;
    double corr = total - s;
    for (auto& vi : v) {
        if (corr == 0.0) break;
        double room = corr > 0 ? cap - vi : vi;
        double take = std::copysign(std::min(std::abs(corr), room), corr);
        vi += take;
        corr -= take;
    }
}

inline void project_box_sum_le(std::vector<double>& v, double cap, double total) {
    // If the box projection alone satisfies the sum, it is the projection;
    // otherwise the sum constraint is active and the point projects onto the
    // capped simplex. Clamping first would erase the direction information,
    // so the simplex projection must see the original vector.
    double s = 0.0;
    for (double vi : v) s += std::clamp(vi, 0.0, cap);
    if (s > total) {
        project_capped_simplex(v, cap, total);
    } else {
        for (auto& vi : v) vi = std::clamp(vi, 0.0, cap);
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// KKT reporting
// ---------------------------------------------------------------------------

struct KKTReport {
    double stationarity_residual = 0.0;  // scaled inf-norm
    double primal_power_residual = 0.0;  // max(0, 1^T p - p_tot)
    double primal_bandwidth_residual = 0.0;  // |1^T b - b_tot|
    double primal_box_residual = 0.0;    // worst box violation (p and b)
    double lambda1 = 0.0, lambda2 = 0.0;
    std::vector<double> gamma1, gamma2, gamma3, gamma4;
    double complementarity_residual = 0.0;  // scaled
    double max_scaled_residual = 0.0;
};

struct SolveResultMultipliers {
    double lambda1 = 0.0, lambda2 = 0.0;
    std::vector<double> gamma1, gamma2, gamma3, gamma4;
};

// Stationarity/complementarity audit of (p, b) against supplied multipliers.
// Gradients of E come from central differences of the given objective.
inline KKTReport kkt_report(const Scenario& sc, const std::vector<double>& p,
                            const std::vector<double>& b,
                            const SolveResultMultipliers& mult,
                            const std::function<double(const std::vector<double>&,
                                                       const std::vector<double>&)>& objective) {
    const std::size_t n = p.size();
    KKTReport rep;
    rep.lambda1 = mult.lambda1;
    rep.lambda2 = mult.lambda2;
    rep.gamma1 = mult.gamma1;
    rep.gamma2 = mult.gamma2;
    rep.gamma3 = mult.gamma3;
    rep.gamma4 = mult.gamma4;

    std::vector<double> gp(n), gb(n);
    const double e0 = objective(p, b);
    (void)e0;
    for (std::size_t i = 0; i < n; ++i) {
        double h = std::max(1e-7 * sc.budget.p_max_w, 1e-6 * std::abs(p[i]));
        std::vector<double> pp(p), pm(p);
        pp[i] += h;
        pm[i] -= h;
        gp[i] = (objective(pp, b) - objective(pm, b)) / (2 * h);
        double hb = std::max(1e-7 * sc.spectrum.b_max_hz, 1e-6 * std::abs(b[i]));
        std::vector<double> bp(b), bm(b);
        bp[i] += hb;
        bm[i] -= hb;
        gb[i] = (objective(p, bp) - objective(p, bm)) / (2 * hb);
    }
    double gscale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        gscale = std::max({gscale, std::abs(gp[i]) * sc.budget.p_max_w,
                           std::abs(gb[i]) * sc.spectrum.b_max_hz});
    gscale = std::max(gscale, 1e-300);

    // Stationarity of the minimization Lagrangian: -gE + lambda 1 - G_lo + G_hi = 0.
    double stat = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double g1 = i < mult.gamma1.size() ? mult.gamma1[i] : 0.0;
        double g2 = i < mult.gamma2.size() ? mult.gamma2[i] : 0.0;
        double g3 = i < mult.gamma3.size() ? mult.gamma3[i] : 0.0;
        double g4 = i < mult.gamma4.size() ? mult.gamma4[i] : 0.0;
        stat = std::max(stat,
                        std::abs(-gp[i] + mult.lambda1 - g1 + g2) * sc.budget.p_max_w);
        stat = std::max(stat,
                        std::abs(-gb[i] + mult.lambda2 - g3 + g4) * sc.spectrum.b_max_hz);
    }
    rep.stationarity_residual = stat / gscale;

    double sum_p = 0.0, sum_b = 0.0, box = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum_p += p[i];
        sum_b += b[i];
        box = std::max({box, -p[i] / sc.budget.p_max_w,
                        (p[i] - sc.budget.p_max_w) / sc.budget.p_max_w,
                        -b[i] / sc.spectrum.b_max_hz,
                        (b[i] - sc.spectrum.b_max_hz) / sc.spectrum.b_max_hz});
    }
    rep.primal_power_residual = std::max(0.0, sum_p - sc.budget.p_tot_w);
    rep.primal_bandwidth_residual = std::abs(sum_b - sc.spectrum.b_tot_hz);
    rep.primal_box_residual = std::max(0.0, box);

    double comp = std::abs(mult.lambda1 * (sum_p - sc.budget.p_tot_w)) * sc.budget.p_max_w;
    for (std::size_t i = 0; i < n; ++i) {
        double g1 = i < mult.gamma1.size() ? mult.gamma1[i] : 0.0;
        double g2 = i < mult.gamma2.size() ? mult.gamma2[i] : 0.0;
        double g3 = i < mult.gamma3.size() ? mult.gamma3[i] : 0.0;
        double g4 = i < mult.gamma4.size() ? mult.gamma4[i] : 0.0;
        comp = std::max({comp, std::abs(g1 * p[i]) * sc.budget.p_max_w,
                         std::abs(g2 * (p[i] - sc.budget.p_max_w)) * sc.budget.p_max_w,
                         std::abs(g3 * b[i]) * sc.spectrum.b_max_hz,
                         std::abs(g4 * (b[i] - sc.spectrum.b_max_hz)) * sc.spectrum.b_max_hz});
    }
    rep.complementarity_residual = comp / gscale;

    rep.max_scaled_residual =
        std::max({rep.stationarity_residual, rep.complementarity_residual,
                  rep.primal_power_residual / sc.budget.p_tot_w,
                  rep.primal_bandwidth_residual / sc.spectrum.b_tot_hz, rep.primal_box_residual});
    return rep;
}

enum class SolverTag { ConvexSpecialCase, ESB, GridOracle };

struct SolveResult {
    std::vector<double> p_w;
    std::vector<double> b_hz;
    RateResult rate;
    KKTReport kkt;
    SolverTag solver_tag = SolverTag::GridOracle;
    double objective_internal = 0.0;  // objective the solver actually optimized
    bool converged = true;
    std::size_t iterations = 0;
};

namespace detail {

// Multiplier estimates from the objective gradient and the active set.
inline SolveResultMultipliers estimate_multipliers(const Scenario& sc,
                                                   const std::vector<double>& p,
                                                   const std::vector<double>& b,
                                                   const std::vector<double>& gp,
                                                   const std::vector<double>& gb) {
    const std::size_t n = p.size();
    const double ptol = 1e-6 * sc.budget.p_max_w;
    SolveResultMultipliers m;
    m.gamma1.assign(n, 0.0);
    m.gamma2.assign(n, 0.0);
    m.gamma3.assign(n, 0.0);
    m.gamma4.assign(n, 0.0);

    double sum_p = 0.0;
    for (double v : p) sum_p += v;
    bool power_active = sum_p > sc.budget.p_tot_w - 1e-6 * sc.budget.p_tot_w;
    double lam1 = 0.0;
    if (power_active) {
        int cnt = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (p[i] > ptol && p[i] < sc.budget.p_max_w - ptol) {
                lam1 += gp[i];
                ++cnt;
            }
        lam1 = cnt ? std::max(0.0, lam1 / cnt) : 0.0;
    }
    m.lambda1 = lam1;
    for (std::size_t i = 0; i < n; ++i) {
        if (p[i] <= ptol) m.gamma1[i] = std::max(0.0, lam1 - gp[i]);
        if (p[i] >= sc.budget.p_max_w - ptol) m.gamma2[i] = std::max(0.0, gp[i] - lam1);
    }

    const double bbtol = 1e-6 * sc.spectrum.b_max_hz;
    double lam2 = 0.0;
    int cntb = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (b[i] > bbtol && b[i] < sc.spectrum.b_max_hz - bbtol) {
            lam2 += gb[i];
            ++cntb;
        }
    lam2 = cntb ? lam2 / cntb : 0.0;  // equality multiplier, any sign
    m.lambda2 = lam2;
    for (std::size_t i = 0; i < n; ++i) {
        if (b[i] <= bbtol) m.gamma3[i] = std::max(0.0, lam2 - gb[i]);
        if (b[i] >= sc.spectrum.b_max_hz - bbtol) m.gamma4[i] = std::max(0.0, gb[i] - lam2);
    }
    return m;
}

// Projected gradient ascent in budget-normalized variables. Box/sum
// constraints are enforced exactly by projection at every iterate.
struct PgOptions {
    double tol = 1e-6;
    std::size_t max_iterations = 20000;
    bool optimize_b = true;
};

struct PgOutcome {
    std::vector<double> p, b;
    std::vector<double> gp, gb;  // objective gradient at the solution
    bool converged = false;
    std::size_t iterations = 0;
};

template <class Objective, class Gradient>
PgOutcome projected_gradient_ascent(const Scenario& sc, std::vector<double> p,
                                    std::vector<double> b, const Objective& objective,
                                    const Gradient& gradient, const PgOptions& opt) {
    const std::size_t n = p.size();
    const double p_max = sc.budget.p_max_w, b_max = sc.spectrum.b_max_hz;
    const double p_tot = sc.budget.p_tot_w, b_tot = sc.spectrum.b_tot_hz;

    project_box_sum_le(p, p_max, p_tot);
    project_capped_simplex(b, b_max, b_tot);

    std::vector<double> gp(n), gb(n);
    double f0 = objective(p, b);
    double step = 0.1;
    PgOutcome out;
    std::size_t it = 0;
    for (; it < opt.max_iterations; ++it) {
        gradient(p, b, gp, gb);
        // Normalized gradient (per-unit-box) so one step size fits both blocks.
        double gnorm = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            gnorm = std::max({gnorm, std::abs(gp[i]) * p_max,
                              opt.optimize_b ? std::abs(gb[i]) * b_max : 0.0});

        // Stationarity proxy: normalized projected-gradient displacement.
        std::vector<double> pt(n), bt(b);
        for (std::size_t i = 0; i < n; ++i) pt[i] = p[i] + gp[i] * p_max * p_max;
        project_box_sum_le(pt, p_max, p_tot);
        if (opt.optimize_b) {
            for (std::size_t i = 0; i < n; ++i) bt[i] = b[i] + gb[i] * b_max * b_max;
            project_capped_simplex(bt, b_max, b_tot);
        }
        double pg = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            pg = std::max({pg, std::abs(pt[i] - p[i]) / p_max,
                           opt.optimize_b ? std::abs(bt[i] - b[i]) / b_max : 0.0});
        if (pg <= opt.tol * std::max(1.0, gnorm)) {
            out.converged = true;
            break;
        }

        // Backtracking line search on the normalized ascent direction.
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            std::vector<double> pn(n), bn(b);
            for (std::size_t i = 0; i < n; ++i) pn[i] = p[i] + step * gp[i] * p_max * p_max;
            project_box_sum_le(pn, p_max, p_tot);
            if (opt.optimize_b) {
                for (std::size_t i = 0; i < n; ++i)
                    bn[i] = b[i] + step * gb[i] * b_max * b_max;
                project_capped_simplex(bn, b_max, b_tot);
            }
            double lin = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                lin += gp[i] * (pn[i] - p[i]);
                if (opt.optimize_b) lin += gb[i] * (bn[i] - b[i]);
            }
            double f1 = objective(pn, bn);
            if (f1 >= f0 + 1e-4 * lin && std::isfinite(f1)) {
                p = std::move(pn);
                b = std::move(bn);
                f0 = f1;
                accepted = true;
                step = std::min(step * 1.5, 1e6);
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // line search exhausted at this scale
    }
    gradient(p, b, gp, gb);
    out.p = std::move(p);
    out.b = std::move(b);
    out.gp = std::move(gp);
    out.gb = std::move(gb);
    out.iterations = it;
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// ESB baseline: equal sub-band bandwidths, proportional-fair power allocation.
// E is concave in p for fixed b, so projected gradient finds the optimum.
// ---------------------------------------------------------------------------

inline SolveResult solve_esb(const Scenario& sc, const QuadratureSpec& quad, double tol = 1e-6,
                             std::size_t max_iterations = 20000) {
    const std::size_t n = sc.spectrum.n_s;
    std::vector<double> b(n, sc.spectrum.b_tot_hz / static_cast<double>(n));
    std::vector<double> f = centers(sc.spectrum, b);
    std::vector<double> p(n, sc.budget.p_tot_w / static_cast<double>(n));

    auto objective = [&](const std::vector<double>& pp, const std::vector<double>& bb) {
        return objective_from_rates(per_band_rates(sc, quad, pp, bb));
    };
    auto gradient = [&](const std::vector<double>& pp, const std::vector<double>& bb,
                        std::vector<double>& gp, std::vector<double>& gb) {
        for (std::size_t s = 0; s < n; ++s) {
            double r = rate_subband(sc, quad, sc.d_m[s], pp[s], bb[s], f[s]);
            // dr/dp by quadrature of the exact integrand derivative.
            double drdp = integrate(
                [&](double freq) {
                    double k = sc.absorption(freq);
                    double expo = std::max(-k * sc.d_m[s], -700.0);
                    double snr = pp[s] * sc.budget.rho * std::exp(expo) /
                                 (freq * freq * sc.d_m[s] * sc.d_m[s] * bb[s]);
                    return (snr / (1.0 + snr)) / (pp[s] * M_LN2);
                },
                f[s] - 0.5 * bb[s], f[s] + 0.5 * bb[s], quad);
            gp[s] = r > kRateFloor ? drdp / r : 0.0;
            gb[s] = 0.0;
        }
    };

    detail::PgOptions opt;
    opt.tol = tol;
    opt.max_iterations = max_iterations;
    opt.optimize_b = false;
    auto pg = detail::projected_gradient_ascent(sc, p, b, objective, gradient, opt);

    SolveResult res;
    res.solver_tag = SolverTag::ESB;
    res.p_w = pg.p;
    res.b_hz = pg.b;
    res.rate = evaluate(sc, quad, res.p_w, res.b_hz);
    res.objective_internal = res.rate.objective_e;
    res.converged = pg.converged;
    res.iterations = pg.iterations;
    auto mult = detail::estimate_multipliers(sc, res.p_w, res.b_hz, pg.gp, pg.gb);
    mult.lambda2 = 0.0;  // b was not optimized; no meaningful equality multiplier
    mult.gamma3.assign(n, 0.0);
    mult.gamma4.assign(n, 0.0);
    res.kkt = kkt_report(sc, res.p_w, res.b_hz, mult, objective);
    // b is frozen for ESB, so only the power block enters the certificate.
    res.kkt.stationarity_residual = 0.0;
    {
        double gscale = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            gscale = std::max(gscale, std::abs(pg.gp[i]) * sc.budget.p_max_w);
        gscale = std::max(gscale, 1e-300);
        double stat = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            stat = std::max(stat, std::abs(-pg.gp[i] + mult.lambda1 - mult.gamma1[i] +
                                           mult.gamma2[i]) *
                                      sc.budget.p_max_w);
        res.kkt.stationarity_residual = stat / gscale;
        res.kkt.max_scaled_residual =
            std::max({res.kkt.stationarity_residual, res.kkt.complementarity_residual,
                      res.kkt.primal_power_residual / sc.budget.p_tot_w,
                      res.kkt.primal_bandwidth_residual / sc.spectrum.b_tot_hz,
                      res.kkt.primal_box_residual});
    }
    return res;
}

// ---------------------------------------------------------------------------
// Special-case convex solver. Rates use the tractable midpoint form with the
// given exponential fit; optimization runs in b-space, where the z-space
// bandwidth-sum constraint of the substitution is the linear sum b = b_tot.
// ---------------------------------------------------------------------------

inline SolveResult solve_special_case(const Scenario& sc, const ExponentialAbsorption& eta,
                                      const TransformParams& xi, const QuadratureSpec& quad,
                                      double tol = 1e-6, std::size_t max_iterations = 50000) {
    const std::size_t n = sc.spectrum.n_s;
    if (sc.spectrum.b_tot_hz > static_cast<double>(n) * sc.spectrum.b_max_hz)
        throw Infeasible("solve_special_case: b_tot > n_s * b_max");

    auto objective = [&](const std::vector<double>& pp, const std::vector<double>& bb) {
        double e = 0.0, prefix = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            double r = rate_closed_form(sc, sc.d_m[s], pp[s], bb[s], prefix, eta);
            e += std::log(std::max(r, kRateFloor));
            prefix += bb[s];
        }
        return e;
    };
    auto gradient = [&](const std::vector<double>& pp, const std::vector<double>& bb,
                        std::vector<double>& gp, std::vector<double>& gb) {
        double prefix = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            double r = rate_closed_form(sc, sc.d_m[s], pp[s], bb[s], prefix, eta);
            double f_s = sc.spectrum.epsilon_f_hz + prefix + 0.5 * bb[s];
            double k = std::exp(eta.eta1 + eta.eta2 * f_s) + eta.eta3;
            double snr = pp[s] * sc.budget.rho *
                         std::exp(std::max(-sc.d_m[s] * k, -700.0)) /
                         (bb[s] * sc.d_m[s] * sc.d_m[s] * f_s * f_s);
            double drdp = bb[s] * (snr / (1.0 + snr)) / (pp[s] * M_LN2);
            gp[s] = r > kRateFloor ? drdp / r : 0.0;
            prefix += bb[s];
        }
        // Center frequencies couple b across sub-bands; use central differences.
        const double h = 1e-7 * sc.spectrum.b_max_hz;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> bp(bb), bm(bb);
            bp[i] += h;
            bm[i] -= h;
            gb[i] = (objective(pp, bp) - objective(pp, bm)) / (2 * h);
        }
    };

    std::vector<double> p(n, sc.budget.p_tot_w / static_cast<double>(n));
    std::vector<double> b(n, sc.spectrum.b_tot_hz / static_cast<double>(n));
    detail::PgOptions opt;
    opt.tol = tol;
    opt.max_iterations = max_iterations;
    auto pg = detail::projected_gradient_ascent(sc, p, b, objective, gradient, opt);

    // Back-substitution audit through z space.
    std::vector<double> z(n);
    for (std::size_t s = 0; s < n; ++s) z[s] = xi.z_from_b(pg.b[s]);
    for (std::size_t s = 0; s < n; ++s) pg.b[s] = xi.b_from_z(z[s]);
    double sum_b = 0.0;
    for (double v : pg.b) sum_b += v;
    if (std::abs(sum_b - sc.spectrum.b_tot_hz) > 1e-6 * sc.spectrum.b_tot_hz)
        throw Error("solve_special_case: z-space back-substitution broke the bandwidth sum");

    SolveResult res;
    res.solver_tag = SolverTag::ConvexSpecialCase;
    res.p_w = pg.p;
    res.b_hz = pg.b;
    res.rate = evaluate(sc, quad, res.p_w, res.b_hz);  // achieved rate on true k(f)
    res.objective_internal = objective(res.p_w, res.b_hz);
    res.converged = pg.converged;
    res.iterations = pg.iterations;
    auto mult = detail::estimate_multipliers(sc, res.p_w, res.b_hz, pg.gp, pg.gb);
    res.kkt = kkt_report(sc, res.p_w, res.b_hz, mult, objective);
    return res;
}

inline SolveResult solve_special_case(const Scenario& sc, const ExponentialAbsorption& eta,
                                      const QuadratureSpec& quad = {}, double tol = 1e-6) {
    return solve_special_case(sc, eta, table1_xi(sc.spectrum.b_max_hz), quad, tol);
}

// ---------------------------------------------------------------------------
// Exhaustive grid oracle for tiny instances. The power/bandwidth sums are
// pinned to their budgets; free coordinates sweep a uniform grid.
// ---------------------------------------------------------------------------

inline SolveResult grid_oracle(const Scenario& sc, const QuadratureSpec& quad,
                               std::size_t grid_density,
                               const ExponentialAbsorption* closed_form_eta = nullptr) {
    const std::size_t n = sc.spectrum.n_s;
    if (n > 3) throw TooLarge("grid_oracle: n_s must be <= 3");
    const double p_tot = sc.budget.p_tot_w, p_max = sc.budget.p_max_w;
    const double b_tot = sc.spectrum.b_tot_hz, b_max = sc.spectrum.b_max_hz;

    auto objective = [&](const std::vector<double>& p, const std::vector<double>& b) {
        if (closed_form_eta) {
            double e = 0.0, prefix = 0.0;
            for (std::size_t s = 0; s < n; ++s) {
                e += std::log(std::max(
                    rate_closed_form(sc, sc.d_m[s], p[s], b[s], prefix, *closed_form_eta),
                    kRateFloor));
                prefix += b[s];
            }
            return e;
        }
        return objective_from_rates(per_band_rates(sc, quad, p, b));
    };

    // Enumerate free coordinates (n-1 of them per block) on a uniform grid.
    auto enumerate = [&](double total, double cap) {
        std::vector<std::vector<double>> points;
        double lo = std::max(0.0, total - cap * static_cast<double>(n - 1));
        double hi = std::min(cap, total);
        if (n == 1) {
            points.push_back({std::min(total, cap)});
            return points;
        }
        for (std::size_t i = 0; i <= grid_density; ++i) {
            double x1 = lo + (hi - lo) * static_cast<double>(i) / grid_density;
            if (n == 2) {
                double x2 = total - x1;
                if (x2 >= -1e-12 && x2 <= cap * (1 + 1e-12))
                    points.push_back({x1, std::clamp(x2, 0.0, cap)});
            } else {
                for (std::size_t j = 0; j <= grid_density; ++j) {
                    double x2 = lo + (hi - lo) * static_cast<double>(j) / grid_density;
                    double x3 = total - x1 - x2;
                    if (x3 >= -1e-12 && x3 <= cap * (1 + 1e-12))
                        points.push_back({x1, x2, std::clamp(x3, 0.0, cap)});
                }
            }
        }
        return points;
    };

    auto p_points = enumerate(p_tot, p_max);
    auto b_points = enumerate(b_tot, b_max);
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> best_p, best_b;
    for (const auto& p : p_points)
        for (const auto& b : b_points) {
            double e = objective(p, b);
            if (e > best) {
                best = e;
                best_p = p;
                best_b = b;
            }
        }

    SolveResult res;
    res.solver_tag = SolverTag::GridOracle;
    res.p_w = best_p;
    res.b_hz = best_b;
    res.rate = evaluate(sc, quad, best_p, best_b);
    res.objective_internal = best;
    res.iterations = p_points.size() * b_points.size();
    return res;
}

// ---------------------------------------------------------------------------
// SolveResult JSON
// ---------------------------------------------------------------------------

inline nlohmann::json solve_result_to_json(const SolveResult& res) {
    const char* tag = res.solver_tag == SolverTag::ConvexSpecialCase ? "convex"
                      : res.solver_tag == SolverTag::ESB             ? "esb"
                                                                     : "grid_oracle";
    return nlohmann::json{
        {"solver", tag},
        {"p_w", res.p_w},
        {"b_hz", res.b_hz},
        {"r_bps", res.rate.r_bps},
        {"r_ag_bps", res.rate.r_ag_bps},
        {"objective_e", res.rate.objective_e},
        {"converged", res.converged},
        {"iterations", res.iterations},
        {"kkt",
         {{"stationarity_residual", res.kkt.stationarity_residual},
          {"complementarity_residual", res.kkt.complementarity_residual},
          {"primal_power_residual_w", res.kkt.primal_power_residual},
          {"primal_bandwidth_residual_hz", res.kkt.primal_bandwidth_residual},
          {"primal_box_residual", res.kkt.primal_box_residual},
          {"max_scaled_residual", res.kkt.max_scaled_residual},
          {"lambda1", res.kkt.lambda1},
          {"lambda2", res.kkt.lambda2}}},
    };
}

}  // namespace thzlab
