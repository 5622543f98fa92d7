#include <gtest/gtest.h>

#include <cmath>

#include "thzlab/scenario.hpp"

using namespace thzlab;

TEST(Scenario, Table1Conversions) {
    auto t = table1_defaults();
    EXPECT_NEAR(t.budget.p_tot_w, 3.1623e-4, 1e-8);          // -5 dBm
    EXPECT_NEAR(t.budget.p_max_w, 2.6352e-5, 1e-9);          // (5/4) p_tot / 15
    EXPECT_DOUBLE_EQ(t.budget.g_a, 1000.0);                  // 30 dBi
    EXPECT_DOUBLE_EQ(t.budget.g_u, 100.0);                   // 20 dBi
    EXPECT_NEAR(t.budget.n0, 3.9811e-21, 1e-25);             // -174 dBm/Hz
    EXPECT_DOUBLE_EQ(t.spectrum.b_max_hz, 5e9);
    EXPECT_DOUBLE_EQ(t.spectrum.b_tot_hz, 50e9);
    EXPECT_EQ(t.spectrum.n_s, 15u);
    EXPECT_DOUBLE_EQ(t.geometry.ap_user_height_delta_m, 1.7);
}

TEST(Scenario, RhoMatchesIndependentRecomputation) {
    auto t = table1_defaults();
    // Independent oracle: 10^3 * 10^2 * (c / 4 pi)^2 / 10^-20.4.
    double c4pi = 299792458.0 / (4.0 * M_PI);
    double rho = 1e5 * c4pi * c4pi / std::pow(10.0, -20.4);
    EXPECT_NEAR(t.budget.rho, rho, 1e-12 * rho);
    EXPECT_NEAR(t.budget.rho, 1.4296e40, 1e36);
}

TEST(Scenario, DistanceBoundsForTable1Room) {
    auto t = table1_defaults();
    const double dmax = std::sqrt(12.5 * 12.5 + 12.5 * 12.5 + 1.7 * 1.7);
    EXPECT_NEAR(dmax, 17.759, 1e-3);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto d = sample_scenario(t.geometry, 15, seed);
        EXPECT_TRUE(std::is_sorted(d.begin(), d.end()));
        for (double di : d) {
            EXPECT_GE(di, 1.7);
            EXPECT_LE(di, dmax);
        }
    }
}

TEST(Scenario, SamplingIsDeterministic) {
    auto t = table1_defaults();
    auto d1 = sample_scenario(t.geometry, 15, 42);
    auto d2 = sample_scenario(t.geometry, 15, 42);
    EXPECT_EQ(d1, d2);
    auto d3 = sample_scenario(t.geometry, 15, 43);
    EXPECT_NE(d1, d3);
}

// Empirical mean distance against a Monte-Carlo quadrature of the distance
// integral over the floor rectangle (independent deterministic grid).
TEST(Scenario, MeanDistanceMatchesIntegralOracle) {
    auto t = table1_defaults();
    const double h = t.geometry.ap_user_height_delta_m;
    double oracle = 0.0;
    const int g = 400;
    for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j) {
            double x = -12.5 + 25.0 * (i + 0.5) / g;
            double y = -12.5 + 25.0 * (j + 0.5) / g;
            oracle += std::sqrt(x * x + y * y + h * h);
        }
    oracle /= g * g;

    double mean = 0.0;
    std::size_t count = 0;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        auto d = sample_scenario(t.geometry, 10, seed);
        for (double di : d) mean += di;
        count += d.size();
    }
    mean /= static_cast<double>(count);
    EXPECT_NEAR(mean, oracle, 0.01 * oracle);
}

TEST(Scenario, ConstructionEnforcesStrictOrdering) {
    auto t = table1_defaults();
    auto model = AbsorptionModel::from_exponential(
        ExponentialAbsorption(1.0, -4e-11, 0.1, 0.74e12, 0.84e12));
    std::vector<double> d(15);
    for (int i = 0; i < 15; ++i) d[i] = 2.0 + 0.5 * i;
    d[7] = d[6];  // tie: perturbed, not rejected
    Scenario sc(d, t.geometry, t.budget, t.spectrum, model);
    for (std::size_t i = 1; i < sc.d_m.size(); ++i) EXPECT_GT(sc.d_m[i], sc.d_m[i - 1]);

    d[7] = d[6] - 0.1;  // genuinely out of order: rejected
    EXPECT_THROW(Scenario(d, t.geometry, t.budget, t.spectrum, model), InvalidArgument);
}

TEST(Scenario, JsonFixtureRoundTrip) {
    auto t = table1_defaults();
    auto model = AbsorptionModel::from_exponential(
        ExponentialAbsorption(1.2, -3e-11, 0.08, 0.75e12, 0.84e12));
    auto d = sample_scenario(t.geometry, 15, 5);
    Scenario sc(d, t.geometry, t.budget, t.spectrum, model);
    auto j = scenario_to_json(sc);
    Scenario back = scenario_from_json(j);
    EXPECT_EQ(back.d_m, sc.d_m);
    EXPECT_DOUBLE_EQ(back.budget.rho, sc.budget.rho);
    EXPECT_DOUBLE_EQ(back.spectrum.b_tot_hz, sc.spectrum.b_tot_hz);
    EXPECT_DOUBLE_EQ(back.absorption(0.8e12), sc.absorption(0.8e12));
}

TEST(Scenario, JsonFixtureWithRhoOnlyStillValidates) {
    auto t = table1_defaults();
    auto model = AbsorptionModel::from_exponential(
        ExponentialAbsorption(1.2, -3e-11, 0.08, 0.75e12, 0.84e12));
    Scenario sc(sample_scenario(t.geometry, 15, 6), t.geometry, t.budget, t.spectrum, model);
    auto j = scenario_to_json(sc);
    j.erase("g_a");
    j.erase("g_u");
    j.erase("n0_w_per_hz");
    Scenario back = scenario_from_json(j);  // throws if rho were inconsistent
    EXPECT_NEAR(back.budget.rho, sc.budget.rho, 1e-12 * sc.budget.rho);
}

TEST(Scenario, InfeasiblePowerBudgetRejected) {
    auto t = table1_defaults();
    t.budget.p_max_w = t.budget.p_tot_w / 20.0;  // 15 * p_max < p_tot
    auto model = AbsorptionModel::from_exponential(
        ExponentialAbsorption(1.0, -4e-11, 0.1, 0.74e12, 0.84e12));
    EXPECT_THROW(Scenario(sample_scenario(t.geometry, 15, 1), t.geometry, t.budget, t.spectrum,
                          model),
                 Infeasible);
}
