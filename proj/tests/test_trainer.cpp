// Primal-dual training loop: Lagrangian loss arithmetic, finite-difference
// objective gradients, the update rules, and checkpoint/log round trips.
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "thzlab/thzlab.hpp"
#include "test_util.hpp"

using namespace thzlab;
using namespace thzlab::testutil;

namespace {

// Small scenario + small net so a training run takes well under a second.
Scenario toy3() {
    return toy_scenario(3, {3.0, 8.0, 14.0}, 30e9, 15e9, wide_exponential());
}

Network toy_net(const Scenario& sc, std::uint64_t seed) {
    std::vector<LayerSpec> arch = {
        {16, Activation::ReLU, {}},
        {8, Activation::ReLU, {}},
        {2 * sc.spectrum.n_s, Activation::ScaledSigmoid, {}},
    };
    arch.back().theta.resize(2 * sc.spectrum.n_s);
    for (std::size_t i = 0; i < sc.spectrum.n_s; ++i) {
        arch.back().theta[i] = sc.budget.p_max_w;
        arch.back().theta[sc.spectrum.n_s + i] = sc.spectrum.b_max_hz;
    }
    Network net = init_network(arch, sc.spectrum.n_s, seed, InitScheme::Scaled);
    net.input_scale = sc.geometry.diagonal();
    return net;
}

std::vector<std::vector<double>> toy_batch(const Scenario& sc, std::size_t n_t,
                                           std::uint64_t seed) {
    std::vector<std::vector<double>> batch;
    for (std::size_t i = 0; i < n_t; ++i)
        batch.push_back(sample_scenario(sc.geometry, sc.spectrum.n_s, seed * 1000003u + i));
    return batch;
}

// Feasible split of the budgets across n bands for Lagrangian spot checks.
void feasible_point(const Scenario& sc, std::vector<double>& p, std::vector<double>& b) {
    const std::size_t n = sc.spectrum.n_s;
    p.assign(n, sc.budget.p_tot_w / static_cast<double>(n));
    b.assign(n, sc.spectrum.b_tot_hz / static_cast<double>(n));
}

}  // namespace

TEST(Trainer, HyperparamValidation) {
    Hyperparams h;
    h.validate();
    h.epsilon_fd = 0.1;
    EXPECT_THROW(h.validate(), InvalidArgument);
    h.epsilon_fd = 1e-4;
    h.delta_theta = 0.0;
    EXPECT_THROW(h.validate(), InvalidArgument);
}

TEST(Trainer, LagrangianZeroLambdaIsMinusObjective) {
    Scenario sc = toy3();
    std::vector<double> p, b;
    feasible_point(sc, p, b);
    p[0] *= 0.5;  // make it infeasible so the residual terms would matter
    RateResult rr = evaluate(sc, {}, p, b);
    EXPECT_DOUBLE_EQ(lagrangian_hat(sc, {}, p, b, 0.0, 0.0), -rr.objective_e);
}

TEST(Trainer, LagrangianFeasiblePointIgnoresLambda) {
    Scenario sc = toy3();
    std::vector<double> p, b;
    feasible_point(sc, p, b);
    RateResult rr = evaluate(sc, {}, p, b);
    for (double lam : {0.0, 1.0, 3.7e4}) {
        EXPECT_NEAR(lagrangian_hat(sc, {}, p, b, lam, lam), -rr.objective_e,
                    1e-9 * std::fabs(rr.objective_e) + 1e-12);
    }
}

TEST(Trainer, LagrangianUnitLambdaAddsPowerResidual) {
    // lambda = (1, 0) with the power sum overshooting by 1e-5 W adds exactly
    // 1e-5 to -E.
    Scenario sc = toy3();
    std::vector<double> p, b;
    feasible_point(sc, p, b);
    p[1] += 1e-5;
    RateResult rr = evaluate(sc, {}, p, b);
    double lhat = lagrangian_hat(sc, {}, p, b, 1.0, 0.0);
    EXPECT_NEAR(lhat - (-rr.objective_e), 1e-5, 1e-12);
}

TEST(Trainer, FdGradientsMatchCentralDifferenceOracle) {
    Scenario sc = table1_scenario(wide_exponential());
    const std::size_t n = sc.spectrum.n_s;
    std::vector<double> p(n), b(n);
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> up(0.2, 1.0), ub(0.2, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = up(rng) * sc.budget.p_max_w;
        b[i] = ub(rng) * sc.spectrum.b_max_hz * 0.5;
    }

    FdGradients g = fd_objective_gradients(sc, {}, p, b, 1e-4);
    EXPECT_FALSE(g.absolute_step_fallback);

    auto objective_at = [&](const std::vector<double>& pp, const std::vector<double>& bb) {
        return evaluate(sc, {}, pp, bb).objective_e;
    };
    double worst_rel = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double hp = 1e-6 * p[i];
        auto pp = p;
        pp[i] = p[i] + hp;
        double fp = objective_at(pp, b);
        pp[i] = p[i] - hp;
        double fm = objective_at(pp, b);
        double oracle = (fp - fm) / (2.0 * hp);
        worst_rel = std::max(worst_rel, std::fabs(g.gp[i] - oracle) /
                                            std::max(std::fabs(oracle), 1e-30));
        double hb = 1e-6 * b[i];
        auto bb = b;
        bb[i] = b[i] + hb;
        double gp2 = objective_at(p, bb);
        bb[i] = b[i] - hb;
        double gm2 = objective_at(p, bb);
        double oracleb = (gp2 - gm2) / (2.0 * hb);
        worst_rel = std::max(worst_rel, std::fabs(g.gb[i] - oracleb) /
                                            std::max(std::fabs(oracleb), 1e-30));
    }
    EXPECT_LT(worst_rel, 1e-3);
}

TEST(Trainer, FdGradientBandwidthSignPositiveWhenStarved) {
    // A sub-band far below b_max at high SNR gains rate from more bandwidth,
    // so the objective gradient in b must be positive there.
    Scenario sc = toy3();
    std::vector<double> p(3, sc.budget.p_max_w);
    std::vector<double> b(3, 0.05 * sc.spectrum.b_max_hz);
    FdGradients g = fd_objective_gradients(sc, {}, p, b, 1e-4);
    for (double v : g.gb) EXPECT_GT(v, 0.0);
}

TEST(Trainer, FdGradientAbsoluteStepFallbackFlag) {
    Scenario sc = toy3();
    std::vector<double> p, b;
    feasible_point(sc, p, b);
    p[0] = 1e-30;  // far below 1e-12 * p_max: relative step would degenerate
    FdGradients g = fd_objective_gradients(sc, {}, p, b, 1e-4);
    EXPECT_TRUE(g.absolute_step_fallback);
    for (double v : g.gp) EXPECT_TRUE(std::isfinite(v));
}

TEST(Trainer, TrainRejectsWrongBatchSize) {
    Scenario sc = toy3();
    Hyperparams h;
    h.n_t = 4;
    h.n_iterations = 1;
    auto batch = toy_batch(sc, 3, 7);
    EXPECT_THROW(train(batch, sc, toy_net(sc, 1), h), InvalidArgument);
}

TEST(Trainer, FrozenPrimalWhenDeltaThetaTiny) {
    // delta_theta must be > 0 per validation, so freeze with an epsilon value:
    // weights move by < 1e-280 while the multipliers evolve by residual sign.
    Scenario sc = toy3();
    Hyperparams h;
    h.delta_theta = 1e-300;
    h.delta_lambda = 0.5;
    h.n_iterations = 5;
    h.n_t = 4;
    auto batch = toy_batch(sc, h.n_t, 11);
    Network net0 = toy_net(sc, 2);
    TrainerState st = train(batch, sc, net0, h);
    for (std::size_t li = 0; li < net0.layers.size(); ++li)
        for (std::size_t i = 0; i < net0.layers[li].weights.size(); ++i)
            EXPECT_NEAR(st.net.layers[li].weights[i], net0.layers[li].weights[i],
                        1e-250);
    // All recorded residuals are identical (primal frozen), and each lambda
    // update follows the sign of its residual under the projection.
    for (std::size_t k = 1; k < st.history.size(); ++k) {
        EXPECT_DOUBLE_EQ(st.history[k].power_residual_w, st.history[0].power_residual_w);
        EXPECT_DOUBLE_EQ(st.history[k].bandwidth_residual_hz,
                         st.history[0].bandwidth_residual_hz);
    }
    double pres = st.history[0].power_residual_w / sc.budget.p_tot_w;
    double lam = h.lambda_init[0];
    for (const auto& rec : st.history) {
        lam = std::max(0.0, lam + h.delta_lambda * pres);
        EXPECT_NEAR(rec.lambda[0], lam, 1e-12 * std::max(1.0, lam));
    }
}

TEST(Trainer, LambdaStaysNonnegative) {
    Scenario sc = toy3();
    Hyperparams h;
    h.n_iterations = 40;
    h.n_t = 4;
    h.delta_lambda = 5.0;  // aggressive dual steps to provoke the projection
    auto batch = toy_batch(sc, h.n_t, 13);
    TrainerState st = train(batch, sc, toy_net(sc, 3), h);
    for (const auto& rec : st.history) {
        EXPECT_GE(rec.lambda[0], 0.0);
        EXPECT_GE(rec.lambda[1], 0.0);
    }
}

TEST(Trainer, TrainingIsDeterministic) {
    Scenario sc = toy3();
    Hyperparams h;
    h.n_iterations = 10;
    h.n_t = 4;
    auto batch = toy_batch(sc, h.n_t, 17);
    TrainerState a = train(batch, sc, toy_net(sc, 5), h);
    TrainerState b = train(batch, sc, toy_net(sc, 5), h);
    ASSERT_EQ(a.history.size(), b.history.size());
    for (std::size_t k = 0; k < a.history.size(); ++k) {
        EXPECT_EQ(a.history[k].loss_j, b.history[k].loss_j);
        EXPECT_EQ(a.history[k].mean_r_ag_bps, b.history[k].mean_r_ag_bps);
    }
    for (std::size_t li = 0; li < a.net.layers.size(); ++li)
        EXPECT_EQ(a.net.layers[li].weights, b.net.layers[li].weights);
}

TEST(Trainer, LossTrendsDownOnToyRun) {
    Scenario sc = toy3();
    Hyperparams h;
    h.n_iterations = 150;
    h.n_t = 6;
    auto batch = toy_batch(sc, h.n_t, 19);
    TrainerState st = train(batch, sc, toy_net(sc, 7), h);
    auto median_range = [&](std::size_t lo, std::size_t hi) {
        std::vector<double> v;
        for (std::size_t k = lo; k < hi; ++k) v.push_back(st.history[k].loss_j);
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    EXPECT_LT(median_range(100, 150), median_range(0, 50));
}

// End-to-end composition: the parameter gradient assembled from the FD
// objective gradients and backward() must match a direct finite difference of
// the Lagrangian with respect to individual weights.
TEST(Trainer, ChainRuleMatchesDirectLagrangianDifference) {
    Scenario sc = toy3();
    Network net = toy_net(sc, 9);
    const double lam1 = 0.3 / sc.budget.p_tot_w;     // raw-unit multipliers
    const double lam2 = 0.2 / sc.spectrum.b_tot_hz;
    std::vector<double> d = {4.0, 9.0, 13.0};
    const std::size_t n = sc.spectrum.n_s;
    Scenario inst = sc.with_distances(d);

    Tape tape = forward(net, inst.d_m);
    std::vector<double> p, b;
    split_output(tape.output, p, b);
    FdGradients g = fd_objective_gradients(inst, {}, p, b, 1e-5);
    std::vector<double> seed(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        seed[i] = -g.gp[i] + lam1;
        seed[n + i] = -g.gb[i] + lam2;
    }
    Gradients grad = backward(net, tape, seed);

    auto lhat_now = [&]() {
        Tape t = forward(net, inst.d_m);
        std::vector<double> pp, bb;
        split_output(t.output, pp, bb);
        return lagrangian_hat(inst, {}, pp, bb, lam1, lam2);
    };

    std::mt19937_64 rng(23);
    double worst_rel = 0.0;
    int checked = 0;
    while (checked < 10) {
        std::size_t li = rng() % net.layers.size();
        std::size_t wi = rng() % net.layers[li].weights.size();
        double analytic = grad.d_weights[li][wi];
        if (std::fabs(analytic) < 1e-8) continue;  // dead ReLU path, skip
        double keep = net.layers[li].weights[wi];
        double h = 1e-6 * std::max(1.0, std::fabs(keep));
        net.layers[li].weights[wi] = keep + h;
        double fp = lhat_now();
        net.layers[li].weights[wi] = keep - h;
        double fm = lhat_now();
        net.layers[li].weights[wi] = keep;
        double fd = (fp - fm) / (2.0 * h);
        worst_rel = std::max(worst_rel, std::fabs(fd - analytic) / std::fabs(fd));
        ++checked;
    }
    EXPECT_LT(worst_rel, 1e-3);
}

TEST(Trainer, InferDeterministicAndBoxed) {
    Scenario sc = toy3();
    Hyperparams h;
    h.n_iterations = 5;
    h.n_t = 4;
    auto batch = toy_batch(sc, h.n_t, 29);
    TrainerState st = train(batch, sc, toy_net(sc, 11), h);
    std::vector<double> d = {2.5, 7.0, 12.0};
    InferenceResult a = infer(st, sc, d);
    InferenceResult b = infer(st, sc, d);
    EXPECT_EQ(a.p_w, b.p_w);
    EXPECT_EQ(a.b_hz, b.b_hz);
    for (std::size_t i = 0; i < a.p_w.size(); ++i) {
        EXPECT_GE(a.p_w[i], 0.0);
        EXPECT_LE(a.p_w[i], sc.budget.p_max_w);
        EXPECT_GE(a.b_hz[i], 0.0);
        EXPECT_LE(a.b_hz[i], sc.spectrum.b_max_hz);
    }
}

TEST(Trainer, TrainingLogCsvFormat) {
    std::vector<IterationRecord> hist(2);
    hist[0].iteration = 1;
    hist[0].loss_j = -1.5;
    hist[0].lambda[0] = 0.25;
    hist[1].iteration = 2;
    std::ostringstream os;
    write_training_log_csv(os, hist);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line,
              "iteration,loss_j,mean_r_ag_bps,power_residual_w,bandwidth_residual_hz,"
              "lambda1,lambda2");
    std::getline(is, line);
    EXPECT_EQ(line.substr(0, 6), "1,-1.5");
    std::getline(is, line);
    EXPECT_EQ(line[0], '2');
}

TEST(Trainer, CheckpointRoundTrip) {
    Scenario sc = toy3();
    Hyperparams h;
    h.n_iterations = 3;
    h.n_t = 4;
    h.delta_lambda = 0.7;
    auto batch = toy_batch(sc, h.n_t, 37);
    TrainerState st = train(batch, sc, toy_net(sc, 13), h);
    nlohmann::json j = checkpoint_to_json(st, h);
    Hyperparams h2;
    TrainerState back = checkpoint_from_json(j, &h2);
    EXPECT_EQ(back.iteration, st.iteration);
    EXPECT_EQ(back.lambda[0], st.lambda[0]);
    EXPECT_EQ(back.lambda[1], st.lambda[1]);
    EXPECT_EQ(h2.delta_lambda, h.delta_lambda);
    EXPECT_EQ(h2.n_t, h.n_t);
    std::vector<double> d = {3.3, 6.6, 9.9};
    InferenceResult a = infer(st, sc, d);
    InferenceResult b = infer(back, sc, d);
    EXPECT_EQ(a.p_w, b.p_w);
    EXPECT_EQ(a.b_hz, b.b_hz);
}
