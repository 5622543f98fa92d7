#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <vector>

#include "thzlab/errors.hpp"

namespace thzlab {

enum class QuadratureRule { GaussLegendre, CompositeSimpson };

struct QuadratureSpec {
    QuadratureRule rule = QuadratureRule::GaussLegendre;
    int nodes_per_subband = 33;
    double refinement_tol = 1e-8;

    void validate() const {
        if (nodes_per_subband < 3)
            throw InvalidArgument("QuadratureSpec: nodes_per_subband must be >= 3");
    }
};

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
// Cached per order; orders used here are small (<= a few hundred).
inline const std::pair<std::vector<double>, std::vector<double>>&
gauss_legendre_rule(int n) {
    static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    std::vector<double> x(n), w(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Chebyshev-like initial guess.
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    auto [ins, ok] = cache.emplace(n, std::make_pair(std::move(x), std::move(w)));
    (void)ok;
    return ins->second;
}

template <class Func>
double integrate_gauss_legendre(const Func& f, double a, double b, int n) {
    const auto& [x, w] = gauss_legendre_rule(n);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += w[i] * f(mid + half * x[i]);
    return half * sum;
}

template <class Func>
double integrate_simpson(const Func& f, double a, double b, int n) {
    // n = node count; rounded up to an odd number of nodes (even panel count).
    if (n % 2 == 0) ++n;
    const int panels = n - 1;
    const double h = (b - a) / panels;
    double sum = f(a) + f(b);
    for (int i = 1; i < panels; ++i) sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

template <class Func>
double integrate(const Func& f, double a, double b, const QuadratureSpec& spec) {
    if (b <= a) return 0.0;
    switch (spec.rule) {
        case QuadratureRule::GaussLegendre:
            return integrate_gauss_legendre(f, a, b, spec.nodes_per_subband);
        case QuadratureRule::CompositeSimpson:
            return integrate_simpson(f, a, b, spec.nodes_per_subband);
    }
    throw InvalidArgument("integrate: unknown rule");
}

}  // namespace thzlab
