#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "focalzone/artifact.hpp"
#include "focalzone/metrics.hpp"

namespace focalzone {

struct TrainSummary {
    long long reward_evaluations = 0;
    env::FocalState best_state;
    double best_reward = 0.0;
    double best_ss = 0.0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    int num_train = 0;
    int num_test = 0;
    int K = 0;
    int K_prime = 0;
    int num_classes = 0;
};

// Full pipeline: dataset -> split -> expansion map -> window search against
// the surrogate reward -> classifier at the best window. Writes artifact.json,
// history.csv, summary.json, train.csv and test.csv into cfg.out_dir.
ModelArtifact cmd_train(RunConfig cfg, TrainSummary* out_summary = nullptr);

// Writes the synthetic dataset as CSV (the generation seed is derived from
// `seed` exactly as cmd_train derives it, so both see the same data).
void cmd_gen_data(const SyntheticSpec& spec, std::uint64_t seed, const std::string& out_path);

struct EvalResult {
    ClassificationReport report;
    RocReport roc;
};

// Applies a stored model to a CSV and writes metrics.json, confusion.csv,
// roc.csv (and SVG renderings of both when plots=true) into out_dir.
EvalResult cmd_eval(const std::string& artifact_path, const std::string& csv_path,
                    const std::string& out_dir, bool plots = false);

// Writes predictions.csv (sample_index, true/predicted labels, per-class
// probabilities) into out_dir.
void cmd_predict(const std::string& artifact_path, const std::string& csv_path,
                 const std::string& out_dir);

struct StudyRow {
    env::FocalState state;
    double ss = 0.0;
    double reward = 0.0;    // surrogate G
    double accuracy = 0.0;  // probe-budget classifier accuracy F
    double time_g_ms = 0.0;
    double time_f_ms = 0.0;
};

struct StudyReport {
    std::vector<StudyRow> rows;
    CorrelationReport correlation;  // pearson(reward, accuracy)
    double time_g_total_ms = 0.0;
    double time_f_total_ms = 0.0;
    double speedup = 0.0;  // time_f_total / time_g_total
};

// Samples num_states windows (lengths spread over [L_min, K'], seeded
// positions), scores each with both reward models, and writes study.csv and
// correlation.json (plus study.svg when plots=true) into cfg.out_dir.
StudyReport cmd_reward_study(RunConfig cfg, int num_states, bool plots = false);

}  // namespace focalzone
