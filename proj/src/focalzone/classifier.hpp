#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "focalzone/env.hpp"
#include "focalzone/nn.hpp"
#include "focalzone/rs.hpp"

namespace focalzone {

struct ClassifierConfig {
    int lstm_layers = 2;
    int hidden = 164;
    int fc_layers = 3;  // sigmoid hidden layers between the LSTM and the output
    int fc_width = 164;
    double lr = 0.001;
    double lambda = 0.001;  // l2 coefficient on weight matrices
    double forget_bias = 0.3;
    int batch = 9;
    int iterations = 1000;
    int probe_iterations = 300;  // reduced budget for accuracy probes
};

void validate_classifier_config(const ClassifierConfig& cfg);
ClassifierConfig probe_config(const ClassifierConfig& cfg);

// Spatial LSTM over the window dimensions: each of the window's scalars is
// one sequence step, the top layer's hidden states at the last two positions
// are averaged, and a sigmoid fc stack plus identity output layer produce the
// class logits.
struct WASLSTMModel {
    ClassifierConfig cfg;
    env::FocalState zone;
    int K_prime = 0;
    int num_classes = 0;
    std::vector<nn::LSTMCell> cells;   // stacked, bottom first
    std::vector<nn::DenseLayer> fc;
    nn::DenseLayer out;
    std::vector<double> norm_mean;  // per window dimension, train statistics
    std::vector<double> norm_std;

    std::vector<nn::Tensor*> params();
};

// Adam on cross-entropy + l2 over seeded wrap-around minibatches. When
// loss_log is given, the per-iteration total loss (data + l2) is appended.
WASLSTMModel train_classifier(const std::vector<ExpandedSample>& train, const env::FocalState& zone,
                              const ClassifierConfig& cfg, int num_classes, std::uint64_t seed,
                              std::vector<double>* loss_log = nullptr);

// Total loss (mean cross-entropy + l2) at the model's current parameters on
// the given samples; recomputes every parameter gradient when compute_grads
// is set. This is the exact quantity train_classifier descends.
double classifier_loss(WASLSTMModel& m, const std::vector<ExpandedSample>& samples, bool compute_grads);

// Class probabilities (columns) for a batch of samples; pure, no model state
// is touched.
nn::Mat predict_probs(const WASLSTMModel& m, const std::vector<ExpandedSample>& samples);

// (argmax class with lowest-index tie-break, probability vector).
std::pair<int, std::vector<double>> predict(const WASLSTMModel& m, const ExpandedSample& s);

double accuracy(const WASLSTMModel& m, const std::vector<ExpandedSample>& samples);

// Train-and-score at a fixed window; the accuracy-as-reward used by the
// reward study, never by agent training.
double evaluate_zone_accuracy(const std::vector<ExpandedSample>& train,
                              const std::vector<ExpandedSample>& test, const env::FocalState& zone,
                              const ClassifierConfig& cfg, int num_classes, std::uint64_t seed);

}  // namespace focalzone
