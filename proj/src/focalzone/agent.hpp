#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "focalzone/env.hpp"
#include "focalzone/nn.hpp"
#include "focalzone/reward.hpp"

namespace focalzone {

// Q-network with a dueling head: shared trunk 2->32 (relu), state-value head
// 32->1 and advantage head 32->4, combined as Q = V + A - mean(A). Inputs are
// the window bounds normalized by K'.
struct DuelingQNet {
    nn::DenseLayer trunk;
    nn::DenseLayer value;
    nn::DenseLayer advantage;

    DuelingQNet();
    void init(Rng& rng);
    void copy_from(const DuelingQNet& other);
    std::vector<nn::Tensor*> params();

    // states: 2 x B (rows = start/K', end/K'); returns Q: 4 x B. Caches for
    // backward_q when training.
    nn::Mat forward_q(const nn::Mat& states);
    // dQ: 4 x B gradient on the combined Q outputs; accumulates param grads.
    void backward_q(const nn::Mat& dQ);
};

nn::Mat encode_states(const std::vector<env::FocalState>& states, int K_prime);

// Q(s, .) for a single state.
nn::Vec q_values(DuelingQNet& net, const env::FocalState& s, int K_prime);

// Epsilon-greedy: one uniform01 draw; below epsilon an extra uniform_int(4)
// draw picks the action, otherwise argmax with lowest-index tie-break.
env::Action select_action(const nn::Vec& q, double epsilon, Rng& rng);

struct Transition {
    env::FocalState s;
    int a = 0;
    double r = 0.0;
    env::FocalState s_next;
};

// Fixed-capacity FIFO ring buffer.
class ReplayMemory {
  public:
    explicit ReplayMemory(int capacity);
    void push(const Transition& t);
    int size() const { return static_cast<int>(buf_.size()); }
    int capacity() const { return capacity_; }
    const Transition& at(int i) const { return buf_[i]; }  // storage order, not age order

  private:
    int capacity_;
    std::size_t cursor_ = 0;
    bool full_ = false;
    std::vector<Transition> buf_;
};

struct AgentConfig {
    double gamma = 0.8;
    double epsilon = 0.2;
    double lr = 0.01;
    int episodes = 50;          // n_e
    int steps_per_episode = 50; // n_s
    int memory_capacity = 2000;
    int rl_batch = 32;
    int target_sync_every = 100;  // updates between hard target syncs
    int warmup = 64;              // transitions before learning starts
    int initial_len = 128;        // window length at each episode reset
};

void validate_agent_config(const AgentConfig& cfg, const env::EnvParams& ep);

// One TD regression step on the online network: targets r + gamma * max_a'
// Q_target(s', a'), squared error on the taken actions only, one Adam step.
// Returns the batch loss.
double td_update(DuelingQNet& net, const DuelingQNet& target, const std::vector<Transition>& batch,
                 double gamma, int K_prime, nn::AdamState& adam);

struct HistoryRow {
    int step = 0;  // 1-based global step
    env::FocalState state;
    double ss = 0.0;
    double reward = 0.0;
};

struct AgentResult {
    env::FocalState best_state;
    double best_reward = 0.0;
    double best_ss = 0.0;
    std::vector<HistoryRow> history;  // exactly episodes * steps_per_episode rows
};

using RewardFn = std::function<RewardBreakdown(const env::FocalState&)>;

// Runs episodes x steps interactions: act epsilon-greedily, step the window,
// evaluate the reward on the post-step state, store the transition, and learn
// once warm. Best state = highest reward seen, ties to the shorter window,
// then the smaller start.
AgentResult train_agent(const env::EnvParams& ep, const RewardFn& reward_fn, const AgentConfig& cfg,
                        std::uint64_t seed);

}  // namespace focalzone
