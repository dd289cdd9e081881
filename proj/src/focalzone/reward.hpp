#pragma once

#include <cstdint>
#include <vector>

#include "focalzone/env.hpp"
#include "focalzone/rs.hpp"

namespace focalzone {

struct ARModel {
    int p = 0;
    std::vector<double> coeffs;  // lag 1..p
    double intercept = 0.0;
    double residual_variance = 0.0;
};

// OLS fit of value-on-p-lags with intercept. Rank-deficient designs fall back
// to ridge (1e-8 on the normal equations) instead of failing.
ARModel fit_ar(const std::vector<double>& series, int p);

// Mean silhouette of points under the given labels: s(i) = (b-a)/max(a,b)
// with a = mean distance to own cluster (excluding self), b = smallest mean
// distance to another cluster; singleton clusters and max(a,b)=0 give s(i)=0.
double silhouette(const std::vector<std::vector<double>>& points, const std::vector<int>& labels);

struct RewardConfig {
    int p = 3;               // AR order of the per-sample fits
    double beta = 0.1;       // window length penalty factor
    int K_prime = 0;
    int subsample = 128;     // stratified cap on samples per evaluation
    std::uint64_t seed = 0;  // fixes the subsample
};

struct RewardBreakdown {
    double ss = 0.0;              // silhouette of the fitted coefficient vectors
    double length_penalty = 0.0;  // beta * window_len / K'
    double reward = 0.0;          // exp(ss+1)/(e^2-1) - length_penalty
};

double reward_from_silhouette(double ss, double length_penalty);

enum class ExecMode { Serial, Parallel };

// Evaluates the surrogate reward for many window states against a fixed
// training set: the stratified subsample is drawn once from (labels, seed),
// then every evaluation fits one AR model per subsampled sample on the window
// slice and scores the coefficient vectors' class separability.
//
// Parallel mode distributes the per-sample fits and the per-point silhouette
// terms across OpenMP threads; every thread writes to its own preassigned
// slots and the reductions stay serial, so results are bitwise identical to
// Serial mode.
class RewardEngine {
  public:
    RewardEngine(const std::vector<ExpandedSample>& expanded, const RewardConfig& cfg,
                 ExecMode mode = ExecMode::Serial);

    RewardBreakdown evaluate(const env::FocalState& state) const;

    const std::vector<int>& subsample_indices() const { return picked_; }
    long long evaluations() const { return evaluations_; }

  private:
    const std::vector<ExpandedSample>& expanded_;
    RewardConfig cfg_;
    ExecMode mode_;
    std::vector<int> picked_;         // ascending sample indices
    std::vector<int> picked_labels_;  // labels of picked_, same order
    mutable long long evaluations_ = 0;
};

// One-shot form of RewardEngine::evaluate.
RewardBreakdown state_reward(const std::vector<ExpandedSample>& expanded, const env::FocalState& state,
                             const RewardConfig& cfg, ExecMode mode = ExecMode::Serial);

}  // namespace focalzone
