// Command-line front end: experiment runner, absorption fitting, one-shot
// solvers, and a quick self-check. Exit codes: 0 ok, 2 bad config, 3 numerics.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "thzlab/thzlab.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

std::map<std::string, double> parse_overrides(const std::vector<std::string>& sets) {
    std::map<std::string, double> out;
    for (const auto& kv : sets) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw thzlab::InvalidArgument("--set expects key=value, got '" + kv + "'");
        out[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    }
    return out;
}

int cmd_run(const std::string& experiment, std::uint64_t seed, const std::string& scale,
            const std::string& out_dir, const std::vector<std::string>& sets) {
    thzlab::ExperimentConfig cfg;
    if (experiment == "fig4")
        cfg.experiment = thzlab::Experiment::ConvergenceExponential;
    else if (experiment == "fig5")
        cfg.experiment = thzlab::Experiment::ConvergenceNonExponential;
    else if (experiment == "fig6")
        cfg.experiment = thzlab::Experiment::BmaxSweep;
    else
        throw thzlab::InvalidArgument("unknown experiment '" + experiment + "'");
    cfg.seed = seed;
    cfg.scale = scale == "paper" ? thzlab::Scale::Paper : thzlab::Scale::Desk;
    cfg.output_dir = out_dir;
    cfg.overrides = parse_overrides(sets);

    thzlab::ExperimentArtifacts art = thzlab::run_experiment(cfg);
    std::cout << art.summary.dump(2) << "\n";
    return kExitOk;
}

int cmd_fit(const std::string& csv_path, double f_lo, double f_hi) {
    thzlab::AbsorptionTable table = thzlab::load_absorption_csv_file(csv_path);
    thzlab::FitResult fit = thzlab::fit_exponential(table, f_lo, f_hi);
    const auto& eta = fit.model;
    nlohmann::json j = {
        {"eta1", eta.eta1},          {"eta2_per_hz", eta.eta2}, {"eta3_per_m", eta.eta3},
        {"f_lo_hz", f_lo},           {"f_hi_hz", f_hi},         {"max_rel_error", fit.max_rel_error},
    };
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

int cmd_solve(const std::string& solver, const std::string& scenario_path,
              const std::string& checkpoint_path) {
    std::ifstream in(scenario_path);
    if (!in) throw thzlab::InvalidArgument("cannot open scenario file " + scenario_path);
    thzlab::Scenario sc = thzlab::scenario_from_json(nlohmann::json::parse(in));

    thzlab::SolveResult res;
    if (solver == "esb") {
        res = thzlab::solve_esb(sc, {});
    } else if (solver == "convex") {
        thzlab::ExponentialAbsorption eta;
        if (sc.absorption.is_exponential()) {
            eta = sc.absorption.exponential();
        } else {
            // fit the scenario's tabulated absorption, as the comparison runs do
            const double lo = sc.absorption.f_lo(), hi = sc.absorption.f_hi();
            std::vector<double> fs(512), ks(512);
            for (int i = 0; i < 512; ++i) {
                fs[i] = lo + (hi - lo) * i / 511.0;
                ks[i] = sc.absorption(fs[i]);
            }
            thzlab::AbsorptionTable sampled(std::move(fs), std::move(ks));
            eta = thzlab::fit_exponential(sampled, lo, hi).model;
        }
        res = thzlab::solve_special_case(sc, eta);
    } else if (solver == "learned") {
        if (checkpoint_path.empty())
            throw thzlab::InvalidArgument("--solver learned requires --checkpoint");
        std::ifstream ck(checkpoint_path);
        if (!ck) throw thzlab::InvalidArgument("cannot open checkpoint " + checkpoint_path);
        thzlab::TrainerState state = thzlab::checkpoint_from_json(nlohmann::json::parse(ck));
        thzlab::InferenceResult inf = thzlab::infer(state, sc, sc.d_m);
        nlohmann::json j = {
            {"solver", "learned"},
            {"p_w", inf.p_w},
            {"b_hz", inf.b_hz},
            {"r_bps", inf.rate.r_bps},
            {"r_ag_bps", inf.rate.r_ag_bps},
            {"objective_e", inf.rate.objective_e},
            {"power_residual_w", inf.power_residual_w},
            {"bandwidth_residual_hz", inf.bandwidth_residual_hz},
        };
        std::cout << j.dump(2) << "\n";
        return kExitOk;
    } else {
        throw thzlab::InvalidArgument("unknown solver '" + solver + "'");
    }
    std::cout << thzlab::solve_result_to_json(res).dump(2) << "\n";
    return kExitOk;
}

// Fast self-check: a handful of oracle-certified identities that exercise the
// rate model, the substitution, and both reference solvers.
int cmd_check() {
    using namespace thzlab;
    int failures = 0;
    auto check = [&](const char* name, bool ok) {
        std::printf("%-44s %s\n", name, ok ? "ok" : "FAIL");
        if (!ok) ++failures;
    };

    // rate closed form vs quadrature on a narrow band
    ExponentialAbsorption eta(1.5, -2e-11, 0.1, 0.70e12, 0.90e12);
    auto model = AbsorptionModel::from_exponential(eta, RegionTag::NACSR);
    auto t = table1_defaults();
    std::vector<double> d(t.spectrum.n_s);
    for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = 2.0 + 15.0 * static_cast<double>(i) / (d.size() - 1);
    Scenario sc(d, t.geometry, t.budget, t.spectrum, model);
    {
        double b = 50e6, p = 1e-5, prefix = 10e9;
        double f = sc.spectrum.epsilon_f_hz + prefix + 0.5 * b;
        double rq = rate_subband(sc, {}, 5.0, p, b, f);
        double rc = rate_closed_form(sc, 5.0, p, b, prefix, eta);
        check("rate: closed form vs quadrature", std::abs(rq - rc) <= 1e-6 * rc);
    }
    // substitution round trip
    {
        TransformParams xi = table1_xi(5e9);
        double worst = 0.0;
        for (int i = 0; i <= 20; ++i) {
            double b = 5e9 * i / 20.0;
            worst = std::max(worst, std::abs(xi.b_from_z(xi.z_from_b(b)) - b));
        }
        check("substitution: b<->z round trip", worst <= 1e-12 * 5e9);
    }
    // solvers vs grid oracle on the 2-user toy
    {
        SpectrumConfig cfg{t.spectrum.epsilon_f_hz, 8e9, 5e9, 2};
        LinkBudget lb = t.budget;
        lb.p_max_w = 1.25 * lb.p_tot_w / 2.0;
        Scenario toy({3.0, 9.0}, t.geometry, lb, cfg, model);
        SolveResult solved = solve_special_case(toy, eta);
        SolveResult oracle = grid_oracle(toy, {}, 200, &eta);
        check("convex solver vs grid oracle",
              std::abs(solved.objective_internal - oracle.objective_internal) <=
                  0.005 * std::abs(oracle.objective_internal));
        SolveResult esb = solve_esb(toy, {});
        check("esb solver: KKT certificate", esb.kkt.max_scaled_residual < 1e-4);
    }
    std::printf("%s\n", failures ? "CHECK FAILED" : "all checks passed");
    return failures ? kExitNumeric : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"THz sub-band and power allocation toolkit"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run an experiment and write its artifacts");
    std::string experiment, scale = "desk", out_dir = ".";
    std::uint64_t seed = 0;
    std::vector<std::string> sets;
    run->add_option("--experiment", experiment, "fig4 | fig5 | fig6")->required();
    run->add_option("--seed", seed, "RNG seed");
    run->add_option("--scale", scale, "desk | paper")
        ->check(CLI::IsMember({"desk", "paper"}));
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--set", sets, "override key=value (repeatable)");

    auto* fitcmd = app.add_subcommand("fit-absorption", "Fit k(f) = exp(a+bf)+c to a CSV");
    std::string csv_path;
    std::vector<double> range;
    fitcmd->add_option("--csv", csv_path, "CSV with frequency_hz,k_per_m")->required();
    fitcmd->add_option("--range", range, "F_LO F_HI in Hz")->expected(2)->required();

    auto* solve = app.add_subcommand("solve", "Solve one scenario with a chosen strategy");
    std::string solver, scenario_path, checkpoint_path;
    solve->add_option("--solver", solver, "learned | convex | esb")->required();
    solve->add_option("--scenario", scenario_path, "scenario JSON file")->required();
    solve->add_option("--checkpoint", checkpoint_path, "trained model (learned solver)");

    auto* checkcmd = app.add_subcommand("check", "Run the built-in oracle self-checks");
    (void)checkcmd;

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (run->parsed()) return cmd_run(experiment, seed, scale, out_dir, sets);
        if (fitcmd->parsed()) return cmd_fit(csv_path, range[0], range[1]);
        if (solve->parsed()) return cmd_solve(solver, scenario_path, checkpoint_path);
        if (checkcmd->parsed()) return cmd_check();
    } catch (const thzlab::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const thzlab::DimensionMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const thzlab::Infeasible& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const thzlab::Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitConfig;
}
