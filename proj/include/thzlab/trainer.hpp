#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "thzlab/errors.hpp"
#include "thzlab/neural.hpp"
#include "thzlab/rate.hpp"

namespace thzlab {

struct Hyperparams {
    double delta_theta = 0.05;    // primal learning rate
    double delta_lambda = 1.0;    // dual learning rate (budget-normalized residuals)
    std::size_t n_iterations = 500;
    std::size_t n_t = 100;        // batch size
    double epsilon_fd = 1e-4;     // relative finite-difference step
    double lambda_init[2] = {0.1, 0.1};

    void validate() const {
        if (!(delta_theta > 0 && delta_lambda > 0 && n_iterations > 0 && n_t > 0 &&
              epsilon_fd > 0))
            throw InvalidArgument("Hyperparams: all values must be positive");
        if (epsilon_fd > 1e-2)
            throw InvalidArgument("Hyperparams: epsilon_fd must be <= 1e-2");
    }
};

struct IterationRecord {
    std::size_t iteration = 0;
    double loss_j = 0.0;
    double mean_r_ag_bps = 0.0;
    double power_residual_w = 0.0;     // mean of 1^T p - p_tot
    double bandwidth_residual_hz = 0.0;  // mean of 1^T b - b_tot
    double lambda[2] = {0.0, 0.0};
};

struct TrainerState {
    Network net;
    // Multipliers are kept in budget-normalized form: the raw multipliers of
    // the Lagrangian are lambda[0]/p_tot and lambda[1]/b_tot. Normalizing puts
    // both dual gradients (relative residuals) on the same O(1) scale, so a
    // single pair of learning rates works for watts and hertz alike.
    double lambda[2] = {0.0, 0.0};
    std::size_t iteration = 0;
    std::vector<IterationRecord> history;
};

// L_hat = -E + lambda1 (1^T p - p_tot) + lambda2 (1^T b - b_tot), raw units.
inline double lagrangian_hat(const Scenario& sc, const QuadratureSpec& quad,
                             const std::vector<double>& p, const std::vector<double>& b,
                             double lambda1, double lambda2) {
    RateResult rr = evaluate(sc, quad, p, b);
    double sum_p = 0.0, sum_b = 0.0;
    for (double v : p) sum_p += v;
    for (double v : b) sum_b += v;
    return -rr.objective_e + lambda1 * (sum_p - sc.budget.p_tot_w) +
           lambda2 * (sum_b - sc.spectrum.b_tot_hz);
}

struct FdGradients {
    std::vector<double> gp;  // dE/dp
    std::vector<double> gb;  // dE/db
    bool absolute_step_fallback = false;
};

// Forward-difference gradients of E with per-coordinate relative steps.
// Exploits rate separability: a p_i perturbation touches band i only, a b_i
// perturbation shifts the centers of bands i..n-1.
inline FdGradients fd_objective_gradients(const Scenario& sc, const QuadratureSpec& quad,
                                          const std::vector<double>& p,
                                          const std::vector<double>& b, double epsilon_fd) {
    const std::size_t n = sc.spectrum.n_s;
    if (p.size() != n || b.size() != n)
        throw DimensionMismatch("fd_objective_gradients: len(p), len(b) must equal n_s");
    FdGradients out;
    out.gp.assign(n, 0.0);
    out.gb.assign(n, 0.0);

    std::vector<double> f = centers(sc.spectrum, b);
    std::vector<double> r(n);
    for (std::size_t s = 0; s < n; ++s)
        r[s] = rate_subband(sc, quad, sc.d_m[s], p[s], b[s], f[s]);
    std::vector<double> logr(n);
    double e0 = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        logr[s] = std::log(std::max(r[s], kRateFloor));
        e0 += logr[s];
    }

    auto step_for = [&](double base, double box) {
        if (base < 1e-12 * box) return std::make_pair(1e-6 * box, true);
        return std::make_pair(epsilon_fd * base, false);
    };

    for (std::size_t i = 0; i < n; ++i) {
        auto [h, fb] = step_for(p[i], sc.budget.p_max_w);
        out.absolute_step_fallback |= fb;
        double ri = rate_subband(sc, quad, sc.d_m[i], p[i] + h, b[i], f[i]);
        double e1 = e0 - logr[i] + std::log(std::max(ri, kRateFloor));
        out.gp[i] = (e1 - e0) / h;
    }
    for (std::size_t i = 0; i < n; ++i) {
        auto [h, fb] = step_for(b[i], sc.spectrum.b_max_hz);
        out.absolute_step_fallback |= fb;
        std::vector<double> bp(b);
        bp[i] += h;
        std::vector<double> fp = centers(sc.spectrum, bp);
        double e1 = e0;
        for (std::size_t s = i; s < n; ++s) {
            double rs = rate_subband(sc, quad, sc.d_m[s], p[s], bp[s], fp[s]);
            e1 += std::log(std::max(rs, kRateFloor)) - logr[s];
        }
        out.gb[i] = (e1 - e0) / h;
    }
    return out;
}

inline void split_output(const std::vector<double>& y, std::vector<double>& p,
                         std::vector<double>& b) {
    const std::size_t n = y.size() / 2;
    p.assign(y.begin(), y.begin() + n);
    b.assign(y.begin() + n, y.end());
}

// One primal-dual training run on a fixed batch of distance vectors.
inline TrainerState train(const std::vector<std::vector<double>>& batch_d,
                          const Scenario& scenario_template, Network net,
                          const Hyperparams& hyper, const QuadratureSpec& quad = {}) {
    hyper.validate();
    if (batch_d.size() != hyper.n_t)
        throw InvalidArgument("train: batch size != n_t");
    const std::size_t n = scenario_template.spectrum.n_s;
    const double p_tot = scenario_template.budget.p_tot_w;
    const double b_tot = scenario_template.spectrum.b_tot_hz;

    std::vector<Scenario> scenarios;
    scenarios.reserve(batch_d.size());
    for (const auto& d : batch_d) scenarios.push_back(scenario_template.with_distances(d));

    TrainerState state;
    state.net = std::move(net);
    state.lambda[0] = hyper.lambda_init[0];
    state.lambda[1] = hyper.lambda_init[1];

    std::vector<double> p, b, seed(2 * n);
    for (std::size_t it = 0; it < hyper.n_iterations; ++it) {
        Gradients grad = Gradients::zeros_like(state.net);
        double loss_sum = 0.0, rag_sum = 0.0, pres_sum = 0.0, bres_sum = 0.0;
        const double lam1_raw = state.lambda[0] / p_tot;
        const double lam2_raw = state.lambda[1] / b_tot;

        for (const auto& sc : scenarios) {
            Tape tape = forward(state.net, sc.d_m);
            split_output(tape.output, p, b);

            RateResult rr = evaluate(sc, quad, p, b);
            double sum_p = 0.0, sum_b = 0.0;
            for (double v : p) sum_p += v;
            for (double v : b) sum_b += v;
            loss_sum += -rr.objective_e + lam1_raw * (sum_p - p_tot) +
                        lam2_raw * (sum_b - b_tot);
            rag_sum += rr.r_ag_bps;
            pres_sum += sum_p - p_tot;
            bres_sum += sum_b - b_tot;

            FdGradients g = fd_objective_gradients(sc, quad, p, b, hyper.epsilon_fd);
            for (std::size_t i = 0; i < n; ++i) {
                seed[i] = -g.gp[i] + lam1_raw;
                seed[n + i] = -g.gb[i] + lam2_raw;
            }
            grad.accumulate(backward(state.net, tape, seed));
        }

        const double inv_nt = 1.0 / static_cast<double>(batch_d.size());
        for (std::size_t l = 0; l < state.net.layers.size(); ++l) {
            auto& layer = state.net.layers[l];
            for (std::size_t i = 0; i < layer.weights.size(); ++i)
                layer.weights[i] -= hyper.delta_theta * inv_nt * grad.d_weights[l][i];
            for (std::size_t i = 0; i < layer.bias.size(); ++i)
                layer.bias[i] -= hyper.delta_theta * inv_nt * grad.d_bias[l][i];
        }
        // Projected dual ascent on the budget-normalized residuals.
        state.lambda[0] =
            std::max(0.0, state.lambda[0] + hyper.delta_lambda * pres_sum * inv_nt / p_tot);
        state.lambda[1] =
            std::max(0.0, state.lambda[1] + hyper.delta_lambda * bres_sum * inv_nt / b_tot);

        IterationRecord rec;
        rec.iteration = it + 1;
        rec.loss_j = loss_sum * inv_nt;
        rec.mean_r_ag_bps = rag_sum * inv_nt;
        rec.power_residual_w = pres_sum * inv_nt;
        rec.bandwidth_residual_hz = bres_sum * inv_nt;
        rec.lambda[0] = state.lambda[0];
        rec.lambda[1] = state.lambda[1];
        if (!std::isfinite(rec.loss_j))
            throw NonFiniteLoss("train: loss diverged at iteration " +
                                std::to_string(rec.iteration));
        state.history.push_back(rec);
        state.iteration = rec.iteration;
    }
    return state;
}

struct InferenceResult {
    std::vector<double> p_w;
    std::vector<double> b_hz;
    RateResult rate;
    double power_residual_w = 0.0;
    double bandwidth_residual_hz = 0.0;
};

inline InferenceResult infer(const TrainerState& state, const Scenario& scenario_template,
                             const std::vector<double>& d, const QuadratureSpec& quad = {}) {
    Scenario sc = scenario_template.with_distances(d);
    Tape tape = forward(state.net, sc.d_m);
    InferenceResult res;
    split_output(tape.output, res.p_w, res.b_hz);
    res.rate = evaluate(sc, quad, res.p_w, res.b_hz);
    for (double v : res.p_w) res.power_residual_w += v;
    for (double v : res.b_hz) res.bandwidth_residual_hz += v;
    res.power_residual_w -= sc.budget.p_tot_w;
    res.bandwidth_residual_hz -= sc.spectrum.b_tot_hz;
    return res;
}

inline void write_training_log_csv(std::ostream& out,
                                   const std::vector<IterationRecord>& history) {
    out << "iteration,loss_j,mean_r_ag_bps,power_residual_w,bandwidth_residual_hz,"
           "lambda1,lambda2\n";
    char buf[256];
    for (const auto& r : history) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      r.iteration, r.loss_j, r.mean_r_ag_bps, r.power_residual_w,
                      r.bandwidth_residual_hz, r.lambda[0], r.lambda[1]);
        out << buf;
    }
}

inline nlohmann::json checkpoint_to_json(const TrainerState& state, const Hyperparams& hyper) {
    return nlohmann::json{
        {"network", network_to_json(state.net)},
        {"lambda", {state.lambda[0], state.lambda[1]}},
        {"iteration", state.iteration},
        {"hyperparams",
         {{"delta_theta", hyper.delta_theta},
          {"delta_lambda", hyper.delta_lambda},
          {"n_iterations", hyper.n_iterations},
          {"n_t", hyper.n_t},
          {"epsilon_fd", hyper.epsilon_fd},
          {"lambda_init", {hyper.lambda_init[0], hyper.lambda_init[1]}}}},
    };
}

inline TrainerState checkpoint_from_json(const nlohmann::json& j, Hyperparams* hyper = nullptr) {
    TrainerState state;
    state.net = network_from_json(j.at("network"));
    state.lambda[0] = j.at("lambda")[0];
    state.lambda[1] = j.at("lambda")[1];
    state.iteration = j.at("iteration");
    if (hyper) {
        const auto& h = j.at("hyperparams");
        hyper->delta_theta = h.at("delta_theta");
        hyper->delta_lambda = h.at("delta_lambda");
        hyper->n_iterations = h.at("n_iterations");
        hyper->n_t = h.at("n_t");
        hyper->epsilon_fd = h.at("epsilon_fd");
        hyper->lambda_init[0] = h.at("lambda_init")[0];
        hyper->lambda_init[1] = h.at("lambda_init")[1];
    }
    return state;
}

}  // namespace thzlab
