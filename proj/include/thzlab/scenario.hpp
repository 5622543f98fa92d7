#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "thzlab/absorption.hpp"
#include "thzlab/errors.hpp"
#include "thzlab/spectrum.hpp"

namespace thzlab {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

struct RoomGeometry {
    double width_m = 0.0;
    double depth_m = 0.0;
    double ap_user_height_delta_m = 0.0;

    void validate() const {
        if (!(width_m > 0 && depth_m > 0 && ap_user_height_delta_m > 0))
            throw InvalidArgument("RoomGeometry: all dimensions must be > 0");
    }
    double diagonal() const {
        return std::sqrt(width_m * width_m + depth_m * depth_m +
                         ap_user_height_delta_m * ap_user_height_delta_m);
    }
};

struct LinkBudget {
    double g_a = 1.0;   // linear AP antenna gain
    double g_u = 1.0;   // linear user antenna gain
    double n0 = 1.0;    // noise power density, W/Hz
    double rho = 0.0;   // g_a * g_u * (c / 4 pi)^2 / n0
    double p_tot_w = 0.0;
    double p_max_w = 0.0;

    static double compute_rho(double g_a, double g_u, double n0) {
        double c4pi = kSpeedOfLight / (4.0 * M_PI);
        return g_a * g_u * c4pi * c4pi / n0;
    }

    static LinkBudget from_gains(double g_a, double g_u, double n0, double p_tot, double p_max) {
        LinkBudget lb{g_a, g_u, n0, compute_rho(g_a, g_u, n0), p_tot, p_max};
        return lb;
    }

    void validate(std::size_t n_s) const {
        double recomputed = compute_rho(g_a, g_u, n0);
        if (std::abs(recomputed - rho) > 1e-12 * std::abs(recomputed))
            throw InvalidArgument("LinkBudget: stored rho inconsistent with fields");
        if (!(p_tot_w > 0 && p_tot_w <= static_cast<double>(n_s) * p_max_w))
            throw Infeasible("LinkBudget: p_tot must satisfy 0 < p_tot <= n_s * p_max");
    }
};

inline double dbi_to_linear(double dbi) { return std::pow(10.0, dbi / 10.0); }
inline double dbm_to_watt(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }

struct Scenario {
    std::vector<double> d_m;  // sorted strictly ascending
    RoomGeometry geometry;
    LinkBudget budget;
    SpectrumConfig spectrum;
    AbsorptionModel absorption;

    Scenario(std::vector<double> d, RoomGeometry geom, LinkBudget lb, SpectrumConfig sc,
             AbsorptionModel abs_model)
        : d_m(std::move(d)),
          geometry(geom),
          budget(lb),
          spectrum(sc),
          absorption(std::move(abs_model)) {
        geometry.validate();
        spectrum.validate();
        budget.validate(spectrum.n_s);
        if (d_m.size() != spectrum.n_s)
            throw DimensionMismatch("Scenario: len(d) != n_s");
        // Strict ordering; ties perturbed to keep d_1 < d_2 < ... Compare each
        // entry against the caller's previous value so a run of equal
        // distances is a chain of ties, not a descent.
        double prev_orig = d_m.empty() ? 0.0 : d_m[0];
        for (std::size_t i = 1; i < d_m.size(); ++i) {
            if (d_m[i] < prev_orig) throw InvalidArgument("Scenario: d not ascending");
            prev_orig = d_m[i];
            if (d_m[i] <= d_m[i - 1]) d_m[i] = d_m[i - 1] + 1e-9;
        }
    }

    Scenario with_distances(std::vector<double> d) const {
        return Scenario(std::move(d), geometry, budget, spectrum, absorption);
    }
};

// Uniform user drop on the floor, AP at the ceiling center.
inline std::vector<double> sample_scenario(const RoomGeometry& geometry, std::size_t n_users,
                                           std::uint64_t seed) {
    geometry.validate();
    if (n_users < 1) throw InvalidArgument("sample_scenario: need at least one user");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(-0.5 * geometry.width_m, 0.5 * geometry.width_m);
    std::uniform_real_distribution<double> uy(-0.5 * geometry.depth_m, 0.5 * geometry.depth_m);
    const double h = geometry.ap_user_height_delta_m;
    std::vector<double> d(n_users);
    for (auto& di : d) {
        double x = ux(rng), y = uy(rng);
        di = std::sqrt(x * x + y * y + h * h);
    }
    std::sort(d.begin(), d.end());
    for (std::size_t i = 1; i < d.size(); ++i)
        if (d[i] <= d[i - 1]) d[i] = d[i - 1] + 1e-9;
    return d;
}

struct Table1Defaults {
    RoomGeometry geometry;
    LinkBudget budget;
    SpectrumConfig spectrum;  // epsilon_f defaults to the 0.752 THz NACSR start
    double delta_theta = 0.05;
    double delta_lambda = 0.025;
    std::size_t n_iterations = 500;
    std::size_t n_t = 300;
    double lambda_init = 0.1;
};

inline Table1Defaults table1_defaults() {
    Table1Defaults t;
    t.geometry = RoomGeometry{25.0, 25.0, 1.7};
    const std::size_t n_i = 15;
    const double p_tot = dbm_to_watt(-5.0);
    const double p_max = 1.25 * p_tot / static_cast<double>(n_i);
    t.budget = LinkBudget::from_gains(dbi_to_linear(30.0), dbi_to_linear(20.0),
                                      dbm_to_watt(-174.0), p_tot, p_max);
    t.spectrum = SpectrumConfig{0.752e12, 50e9, 5e9, n_i};
    return t;
}

// ---------------------------------------------------------------------------
// Scenario fixture JSON
// ---------------------------------------------------------------------------

inline nlohmann::json absorption_to_json(const AbsorptionModel& model) {
    nlohmann::json j;
    if (model.is_exponential()) {
        const auto& e = model.exponential();
        j["type"] = "exponential";
        j["params"] = {{"eta1", e.eta1}, {"eta2", e.eta2}, {"eta3", e.eta3},
                       {"f_lo_hz", e.f_lo}, {"f_hi_hz", e.f_hi}};
    } else if (const auto* s = model.synthetic_params()) {
        j["type"] = "synthetic";
        j["params"] = {{"eta1", s->base.eta1}, {"eta2", s->base.eta2}, {"eta3", s->base.eta3},
                       {"f_lo_hz", s->base.f_lo}, {"f_hi_hz", s->base.f_hi},
                       {"ripple_amplitude", s->ripple_amplitude},
                       {"ripple_period_hz", s->ripple_period}};
    } else {
        const auto* t = model.table();
        j["type"] = "table";
        j["params"] = {{"frequency_hz", t->freq_hz}, {"k_per_m", t->k_per_m},
                       {"interpolation", model.interpolation() == Interpolation::Linear
                                             ? "linear" : "cubic_monotone"}};
    }
    return j;
}

inline AbsorptionModel absorption_from_json(const nlohmann::json& j) {
    const std::string type = j.at("type");
    if (type == "exponential") {
        const auto& p = j.at("params");
        return AbsorptionModel::from_exponential(ExponentialAbsorption(
            p.at("eta1"), p.at("eta2"), p.at("eta3"), p.at("f_lo_hz"), p.at("f_hi_hz")));
    }
    if (type == "synthetic") {
        const auto& p = j.at("params");
        return AbsorptionModel::synthetic(
            ExponentialAbsorption(p.at("eta1"), p.at("eta2"), p.at("eta3"), p.at("f_lo_hz"),
                                  p.at("f_hi_hz")),
            p.at("ripple_amplitude"), p.at("ripple_period_hz"));
    }
    if (type == "table") {
        if (j.contains("csv_path"))
            return AbsorptionModel::from_table(
                load_absorption_csv_file(j.at("csv_path").get<std::string>()));
        const auto& p = j.at("params");
        Interpolation interp = Interpolation::CubicMonotone;
        if (p.contains("interpolation") && p.at("interpolation") == "linear")
            interp = Interpolation::Linear;
        return AbsorptionModel::from_table(
            AbsorptionTable(p.at("frequency_hz").get<std::vector<double>>(),
                            p.at("k_per_m").get<std::vector<double>>()),
            interp);
    }
    throw InvalidArgument("absorption_from_json: unknown type " + type);
}

inline nlohmann::json scenario_to_json(const Scenario& sc) {
    return nlohmann::json{
        {"distances_m", sc.d_m},
        {"epsilon_f_hz", sc.spectrum.epsilon_f_hz},
        {"b_tot_hz", sc.spectrum.b_tot_hz},
        {"b_max_hz", sc.spectrum.b_max_hz},
        {"p_tot_w", sc.budget.p_tot_w},
        {"p_max_w", sc.budget.p_max_w},
        {"rho", sc.budget.rho},
        {"g_a", sc.budget.g_a},
        {"g_u", sc.budget.g_u},
        {"n0_w_per_hz", sc.budget.n0},
        {"room", {{"width_m", sc.geometry.width_m}, {"depth_m", sc.geometry.depth_m},
                  {"ap_user_height_delta_m", sc.geometry.ap_user_height_delta_m}}},
        {"absorption", absorption_to_json(sc.absorption)},
    };
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
    std::vector<double> d = j.at("distances_m").get<std::vector<double>>();
    SpectrumConfig sc{j.at("epsilon_f_hz"), j.at("b_tot_hz"), j.at("b_max_hz"), d.size()};
    LinkBudget lb;
    lb.p_tot_w = j.at("p_tot_w");
    lb.p_max_w = j.at("p_max_w");
    lb.rho = j.at("rho");
    if (j.contains("g_a")) {
        lb.g_a = j.at("g_a");
        lb.g_u = j.at("g_u");
        lb.n0 = j.at("n0_w_per_hz");
    } else {
        // Fixture carries only rho; back out a consistent unit-gain budget.
        lb.g_a = lb.g_u = 1.0;
        double c4pi = kSpeedOfLight / (4.0 * M_PI);
        lb.n0 = c4pi * c4pi / lb.rho;
    }
    RoomGeometry geom = table1_defaults().geometry;
    if (j.contains("room")) {
        const auto& r = j.at("room");
        geom = RoomGeometry{r.at("width_m"), r.at("depth_m"), r.at("ap_user_height_delta_m")};
    }
    return Scenario(std::move(d), geom, lb, sc, absorption_from_json(j.at("absorption")));
}

}  // namespace thzlab
