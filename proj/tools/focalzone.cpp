#include <cstdint>
#include <cstdio>
#include <string>

#include "CLI11.hpp"

#include "focalzone/pipeline.hpp"

namespace {

using namespace focalzone;

RunConfig load_config(const std::string& path, bool seed_given, std::uint64_t seed,
                      const std::string& out_dir) {
    RunConfig cfg = load_run_config(path);
    if (seed_given) cfg.seed = seed;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"focal-zone pipeline: expand sensor rows, search a class-discriminative window "
                 "with a Q-learning agent, classify it with a spatial LSTM"};
    app.require_subcommand(1);

    std::string config_path, out_path, artifact_path, data_path;
    std::uint64_t seed = 0;
    int states = 8;
    bool plots = false;

    CLI::App* gen = app.add_subcommand("gen-data", "write a synthetic dataset CSV");
    gen->add_option("--config", config_path, "run config JSON (synthetic dataset)")->required();
    gen->add_option("--seed", seed, "override the config seed");
    gen->add_option("--out", out_path, "output CSV path")->required();

    CLI::App* train = app.add_subcommand("train", "run the full training pipeline");
    train->add_option("--config", config_path, "run config JSON")->required();
    train->add_option("--seed", seed, "override the config seed");
    train->add_option("--out", out_path, "output directory (overrides config out_dir)");

    CLI::App* eval = app.add_subcommand("eval", "evaluate a trained model on a CSV");
    eval->add_option("--artifact", artifact_path, "artifact JSON from train")->required();
    eval->add_option("--data", data_path, "input CSV")->required();
    eval->add_option("--out", out_path, "output directory")->required();
    eval->add_flag("--plots", plots, "also write SVG plots");

    CLI::App* predict = app.add_subcommand("predict", "write per-sample predictions for a CSV");
    predict->add_option("--artifact", artifact_path, "artifact JSON from train")->required();
    predict->add_option("--data", data_path, "input CSV")->required();
    predict->add_option("--out", out_path, "output directory")->required();

    CLI::App* study = app.add_subcommand("reward-study", "compare the surrogate reward with "
                                                         "classifier accuracy over sampled windows");
    study->add_option("--config", config_path, "run config JSON")->required();
    study->add_option("--seed", seed, "override the config seed");
    study->add_option("--out", out_path, "output directory (overrides config out_dir)");
    study->add_option("--states", states, "number of windows to sample")->default_val(8);
    study->add_flag("--plots", plots, "also write an SVG scatter plot");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            RunConfig cfg = load_config(config_path, gen->count("--seed") > 0, seed, "");
            if (!cfg.has_synthetic)
                throw ValidationError("gen-data: config must use a synthetic dataset");
            cmd_gen_data(cfg.synthetic, cfg.seed, out_path);
            std::printf("wrote %s\n", out_path.c_str());
        } else if (train->parsed()) {
            RunConfig cfg = load_config(config_path, train->count("--seed") > 0, seed, out_path);
            TrainSummary s;
            cmd_train(cfg, &s);
            std::printf("best window [%d, %d) reward %.6g after %lld evaluations\n",
                        s.best_state.start_idx, s.best_state.end_idx, s.best_reward,
                        s.reward_evaluations);
            std::printf("train accuracy %.4f, test accuracy %.4f\n", s.train_accuracy, s.test_accuracy);
            std::printf("artifacts in %s\n", cfg.out_dir.c_str());
        } else if (eval->parsed()) {
            EvalResult r = cmd_eval(artifact_path, data_path, out_path, plots);
            std::printf("accuracy %.4f, macro F1 %.4f, macro AUC %.4f\n", r.report.accuracy,
                        r.report.f1_macro, r.roc.auc_macro);
            std::printf("reports in %s\n", out_path.c_str());
        } else if (predict->parsed()) {
            cmd_predict(artifact_path, data_path, out_path);
            std::printf("predictions in %s\n", out_path.c_str());
        } else if (study->parsed()) {
            RunConfig cfg = load_config(config_path, study->count("--seed") > 0, seed, out_path);
            StudyReport r = cmd_reward_study(cfg, states, plots);
            std::printf("pearson r %.4f (n=%d, p=%.4g), speedup %.1fx\n", r.correlation.r,
                        r.correlation.n, r.correlation.p_two_sided, r.speedup);
            std::printf("study in %s\n", cfg.out_dir.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
