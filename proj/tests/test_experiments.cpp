// Experiment orchestration: override plumbing, artifact manifests, and
// byte-identical reruns, all at smoke scale.
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "thzlab/thzlab.hpp"

using namespace thzlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Small enough to train in well under a second: 4 users, 16 GHz total.
ExperimentConfig smoke_config(Experiment exp, const std::string& out) {
    ExperimentConfig cfg;
    cfg.experiment = exp;
    cfg.seed = 7;
    cfg.scale = Scale::Desk;
    cfg.output_dir = out;
    cfg.overrides["n_users"] = 4;
    cfg.overrides["b_tot_hz"] = 16e9;
    cfg.overrides["n_t"] = 5;
    cfg.overrides["n_iterations"] = 10;
    return cfg;
}

fs::path temp_dir(const std::string& leaf) {
    fs::path p = fs::temp_directory_path() / ("thzlab_test_" + leaf);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST(Experiments, ResolveSetupAppliesOverrides) {
    ExperimentConfig cfg;
    cfg.overrides["p_tot_w"] = 1e-3;
    cfg.overrides["n_users"] = 10;
    cfg.overrides["delta_lambda"] = 0.25;
    ExperimentSetup s = resolve_setup(cfg);
    EXPECT_DOUBLE_EQ(s.defaults.budget.p_tot_w, 1e-3);
    // p_max follows the overridden budget and user count unless pinned
    EXPECT_DOUBLE_EQ(s.defaults.budget.p_max_w, 1.25 * 1e-3 / 10.0);
    EXPECT_EQ(s.defaults.spectrum.n_s, 10u);
    EXPECT_DOUBLE_EQ(s.hyper.delta_lambda, 0.25);
    EXPECT_EQ(s.hyper.n_t, 100u);  // desk default
}

TEST(Experiments, DeskScaleCapsBatchAndIterations) {
    ExperimentConfig cfg;
    cfg.overrides["n_t"] = 200;
    EXPECT_THROW(resolve_setup(cfg), InvalidArgument);
    cfg.overrides.clear();
    cfg.overrides["n_iterations"] = 1000;
    EXPECT_THROW(resolve_setup(cfg), InvalidArgument);
    cfg.scale = Scale::Paper;
    EXPECT_NO_THROW(resolve_setup(cfg));
}

TEST(Experiments, ConvergenceRunWritesArtifacts) {
    fs::path out = temp_dir("fig4");
    auto cfg = smoke_config(Experiment::ConvergenceExponential, out.string());
    ExperimentArtifacts art = run_experiment(cfg);

    for (const char* name :
         {"training_log.csv", "checkpoint.json", "scenario.json", "summary.json",
          "manifest.json"})
        EXPECT_TRUE(fs::exists(out / name)) << name;

    EXPECT_EQ(art.summary.at("experiment"), "fig4");
    EXPECT_EQ(art.summary.at("seed"), 7);
    EXPECT_GT(double(art.summary.at("learned_mean_r_ag_bps")), 0.0);
    EXPECT_GT(double(art.summary.at("convex_mean_r_ag_bps")), 0.0);
    EXPECT_GT(double(art.summary.at("learned_over_convex")), 0.0);
    // smooth profile: the exponential fit is tight
    EXPECT_LE(double(art.summary.at("fit_max_rel_error")), 0.05);

    // training log has header + one row per iteration
    std::istringstream is(slurp(out / "training_log.csv"));
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line.rfind("iteration,loss_j", 0), 0u);
    int rows = 0;
    while (std::getline(is, line))
        if (!line.empty()) ++rows;
    EXPECT_EQ(rows, 10);

    // checkpoint reloads into a usable state
    nlohmann::json ck = nlohmann::json::parse(slurp(out / "checkpoint.json"));
    Hyperparams h;
    TrainerState st = checkpoint_from_json(ck, &h);
    EXPECT_EQ(st.iteration, 10u);
    EXPECT_EQ(h.n_t, 5u);
}

TEST(Experiments, ManifestHashesMatchFileContents) {
    fs::path out = temp_dir("manifest");
    auto cfg = smoke_config(Experiment::ConvergenceExponential, out.string());
    ExperimentArtifacts art = run_experiment(cfg);
    const auto& files = art.manifest.at("files");
    EXPECT_GE(files.size(), 4u);
    for (const auto& f : files) {
        fs::path p = out / f.at("path").get<std::string>();
        ASSERT_TRUE(fs::exists(p));
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(detail::fnv1a64(slurp(p))));
        EXPECT_EQ(f.at("fnv1a64").get<std::string>(), buf) << p;
    }
}

TEST(Experiments, RerunsAreByteIdentical) {
    fs::path out1 = temp_dir("rerun_a"), out2 = temp_dir("rerun_b");
    auto cfg1 = smoke_config(Experiment::ConvergenceExponential, out1.string());
    auto cfg2 = smoke_config(Experiment::ConvergenceExponential, out2.string());
    run_experiment(cfg1);
    run_experiment(cfg2);
    EXPECT_EQ(slurp(out1 / "training_log.csv"), slurp(out2 / "training_log.csv"));
    EXPECT_EQ(slurp(out1 / "summary.json"), slurp(out2 / "summary.json"));
    EXPECT_EQ(slurp(out1 / "checkpoint.json"), slurp(out2 / "checkpoint.json"));
}

TEST(Experiments, NonExponentialRunFlagsPoorFit) {
    fs::path out = temp_dir("fig5");
    auto cfg = smoke_config(Experiment::ConvergenceNonExponential, out.string());
    ExperimentArtifacts art = run_experiment(cfg);
    EXPECT_EQ(art.summary.at("experiment"), "fig5");
    // wiggly profile: the exponential approximation is deliberately bad
    EXPECT_GT(double(art.summary.at("fit_max_rel_error")), 0.05);
}

TEST(Experiments, BmaxSweepWritesComparisonTable) {
    fs::path out = temp_dir("fig6");
    ExperimentConfig cfg;
    cfg.experiment = Experiment::BmaxSweep;
    cfg.seed = 3;
    cfg.output_dir = out.string();
    cfg.overrides["n_users"] = 5;
    cfg.overrides["b_tot_hz"] = 17e9;  // feasible even at the 3.5 GHz sweep point
    cfg.overrides["n_t"] = 4;
    cfg.overrides["n_iterations"] = 8;
    ExperimentArtifacts art = run_experiment(cfg);

    EXPECT_EQ(art.summary.at("experiment"), "fig6");
    ASSERT_EQ(art.summary.at("rows").size(), 4u);
    for (const auto& row : art.summary.at("rows")) {
        EXPECT_GT(double(row.at("r_ag_esb_bps")), 0.0);
        EXPECT_GT(double(row.at("r_ag_convex_bps")), 0.0);
        EXPECT_GT(double(row.at("r_ag_learned_bps")), 0.0);
    }

    std::istringstream is(slurp(out / "comparison.csv"));
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "b_max_hz,r_ag_esb_bps,r_ag_convex_bps,r_ag_learned_bps");
    int rows = 0;
    while (std::getline(is, line))
        if (!line.empty()) ++rows;
    EXPECT_EQ(rows, 4);
}
