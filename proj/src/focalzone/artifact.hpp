#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "focalzone/agent.hpp"
#include "focalzone/classifier.hpp"
#include "focalzone/data.hpp"
#include "focalzone/env.hpp"
#include "focalzone/reward.hpp"
#include "focalzone/rs.hpp"

namespace focalzone {

// Insertion-ordered JSON keeps every emitted file deterministic.
using json = nlohmann::ordered_json;

inline constexpr const char* kArtifactVersion = "focalzone/1";

struct RunConfig {
    // Exactly one dataset source.
    std::string csv_path;
    bool has_synthetic = false;
    SyntheticSpec synthetic;

    std::uint64_t seed = 1;
    int K_prime = 0;       // 0 = derive 4*K from the dataset
    int initial_len = 128; // episode-reset window length
    RSMode rs_mode = RSMode::Shuffled;
    env::EnvParams envp;   // K_prime resolved later
    RewardConfig reward;   // K_prime and seed resolved later
    AgentConfig agent;
    ClassifierConfig classifier;
    double train_fraction = 0.9;
    ExecMode exec_mode = ExecMode::Parallel;
    std::string out_dir;
};

RunConfig parse_run_config(const json& j);
RunConfig load_run_config(const std::string& path);
json run_config_to_json(const RunConfig& cfg);

// Fills the K-dependent fields (K', env/reward K', derived stage seeds,
// agent initial length) once the dataset dimension is known.
void resolve_run_config(RunConfig& cfg, int K);

// Cross-field checks; call after resolve_run_config, before any work.
void validate_run_config(const RunConfig& cfg, int K);

struct ModelArtifact {
    std::string version = kArtifactVersion;
    RunConfig config;
    int K = 0;
    int num_classes = 0;
    std::vector<long long> label_values;
    RSMap rs_map;
    env::FocalState best_state;
    double best_reward = 0.0;
    double best_ss = 0.0;
    WASLSTMModel model;
};

json artifact_to_json(const ModelArtifact& a);
ModelArtifact artifact_from_json(const json& j);
void save_artifact(const ModelArtifact& a, const std::string& path);
ModelArtifact load_artifact(const std::string& path);

void write_json_atomic(const std::string& path, const json& j);
json load_json(const std::string& path);

}  // namespace focalzone
