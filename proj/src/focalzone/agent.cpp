#include "focalzone/agent.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace focalzone {

DuelingQNet::DuelingQNet()
    : trunk("qnet.trunk", 32, 2, nn::Activation::Relu),
      value("qnet.value", 1, 32, nn::Activation::Identity),
      advantage("qnet.advantage", 4, 32, nn::Activation::Identity) {}

void DuelingQNet::init(Rng& rng) {
    trunk.init(rng);
    value.init(rng);
    advantage.init(rng);
}

void DuelingQNet::copy_from(const DuelingQNet& other) {
    trunk.W.value = other.trunk.W.value;
    trunk.b.value = other.trunk.b.value;
    value.W.value = other.value.W.value;
    value.b.value = other.value.b.value;
    advantage.W.value = other.advantage.W.value;
    advantage.b.value = other.advantage.b.value;
}

std::vector<nn::Tensor*> DuelingQNet::params() {
    return {&trunk.W, &trunk.b, &value.W, &value.b, &advantage.W, &advantage.b};
}

nn::Mat DuelingQNet::forward_q(const nn::Mat& states) {
    const nn::Mat h = trunk.forward(states);
    const nn::Mat v = value.forward(h);      // 1 x B
    const nn::Mat a = advantage.forward(h);  // 4 x B
    nn::Mat q = a;
    const Eigen::RowVectorXd mean_a = a.colwise().mean();
    q.rowwise() -= mean_a;
    q.rowwise() += v.row(0);
    return q;
}

void DuelingQNet::backward_q(const nn::Mat& dQ) {
    // q_m = v + a_m - mean(a)  =>  dv = sum_m dq_m,  da_m = dq_m - mean_m(dq).
    nn::Mat dV(1, dQ.cols());
    dV.row(0) = dQ.colwise().sum();
    nn::Mat dA = dQ;
    const Eigen::RowVectorXd mean_dq = dQ.colwise().mean();
    dA.rowwise() -= mean_dq;
    const nn::Mat dh = value.backward(dV) + advantage.backward(dA);
    trunk.backward(dh);
}

nn::Mat encode_states(const std::vector<env::FocalState>& states, int K_prime) {
    nn::Mat m(2, static_cast<Eigen::Index>(states.size()));
    for (std::size_t j = 0; j < states.size(); ++j) {
        m(0, j) = static_cast<double>(states[j].start_idx) / K_prime;
        m(1, j) = static_cast<double>(states[j].end_idx) / K_prime;
    }
    return m;
}

nn::Vec q_values(DuelingQNet& net, const env::FocalState& s, int K_prime) {
    return net.forward_q(encode_states({s}, K_prime)).col(0);
}

env::Action select_action(const nn::Vec& q, double epsilon, Rng& rng) {
    if (q.size() != env::kNumActions) throw ValidationError("select_action: expected 4 Q values");
    if (rng.uniform01() < epsilon)
        return static_cast<env::Action>(rng.uniform_int(env::kNumActions));
    int best = 0;
    for (int m = 1; m < env::kNumActions; ++m)
        if (q(m) > q(best)) best = m;
    return static_cast<env::Action>(best);
}

ReplayMemory::ReplayMemory(int capacity) : capacity_(capacity) {
    if (capacity < 1) throw ValidationError("replay: capacity must be positive");
    buf_.reserve(capacity);
}

void ReplayMemory::push(const Transition& t) {
    if (!full_) {
        buf_.push_back(t);
        if (static_cast<int>(buf_.size()) == capacity_) full_ = true;
        return;
    }
    buf_[cursor_] = t;
    cursor_ = (cursor_ + 1) % capacity_;
}

void validate_agent_config(const AgentConfig& cfg, const env::EnvParams& ep) {
    env::validate_params(ep);
    if (!(cfg.gamma >= 0.0 && cfg.gamma < 1.0)) throw ValidationError("agent: gamma must be in [0,1)");
    if (!(cfg.epsilon >= 0.0 && cfg.epsilon <= 1.0)) throw ValidationError("agent: epsilon must be in [0,1]");
    if (cfg.lr <= 0.0) throw ValidationError("agent: lr must be positive");
    if (cfg.episodes < 1 || cfg.steps_per_episode < 1)
        throw ValidationError("agent: episodes and steps_per_episode must be positive");
    if (cfg.memory_capacity < 1) throw ValidationError("agent: memory capacity must be positive");
    if (cfg.rl_batch < 1) throw ValidationError("agent: rl_batch must be positive");
    if (cfg.target_sync_every < 1) throw ValidationError("agent: target_sync_every must be positive");
    if (cfg.warmup < 1) throw ValidationError("agent: warmup must be positive");
    if (cfg.initial_len < ep.L_min || cfg.initial_len > ep.K_prime)
        throw ValidationError("agent: initial window length outside [L_min, K']");
}

double td_update(DuelingQNet& net, const DuelingQNet& target, const std::vector<Transition>& batch,
                 double gamma, int K_prime, nn::AdamState& adam) {
    if (batch.empty()) throw ValidationError("td_update: empty batch");
    const int B = static_cast<int>(batch.size());

    std::vector<env::FocalState> s(B), s_next(B);
    for (int j = 0; j < B; ++j) {
        s[j] = batch[j].s;
        s_next[j] = batch[j].s_next;
    }
    // Forward only mutates layer caches, which the online pass below rebuilds;
    // the target's parameters stay untouched.
    DuelingQNet& tgt = const_cast<DuelingQNet&>(target);
    const nn::Mat q_next = tgt.forward_q(encode_states(s_next, K_prime));

    const nn::Mat q = net.forward_q(encode_states(s, K_prime));
    nn::Mat dQ = nn::Mat::Zero(q.rows(), q.cols());
    double loss = 0.0;
    for (int j = 0; j < B; ++j) {
        const double y = batch[j].r + gamma * q_next.col(j).maxCoeff();
        const double diff = q(batch[j].a, j) - y;
        loss += diff * diff;
        dQ(batch[j].a, j) = 2.0 * diff / B;
    }
    loss /= B;

    auto params = net.params();
    nn::zero_grads(params);
    net.backward_q(dQ);
    adam.step(params);
    return loss;
}

AgentResult train_agent(const env::EnvParams& ep, const RewardFn& reward_fn, const AgentConfig& cfg,
                        std::uint64_t seed) {
    validate_agent_config(cfg, ep);
    Rng rng(seed);

    DuelingQNet net;
    net.init(rng);
    DuelingQNet target;
    target.copy_from(net);

    nn::AdamState adam(cfg.lr);
    ReplayMemory replay(cfg.memory_capacity);

    AgentResult result;
    result.best_reward = -std::numeric_limits<double>::infinity();
    result.history.reserve(static_cast<std::size_t>(cfg.episodes) * cfg.steps_per_episode);

    int global_step = 0;
    long long updates = 0;
    for (int e = 0; e < cfg.episodes; ++e) {
        env::FocalState s = env::initial_state(ep.K_prime, cfg.initial_len, ep.L_min);
        for (int k = 0; k < cfg.steps_per_episode; ++k) {
            ++global_step;
            const nn::Vec q = q_values(net, s, ep.K_prime);
            const env::Action a = select_action(q, cfg.epsilon, rng);
            const env::FocalState s2 = env::step(s, a, ep);
            const RewardBreakdown rb = reward_fn(s2);

            replay.push({s, static_cast<int>(a), rb.reward, s2});
            result.history.push_back({global_step, s2, rb.ss, rb.reward});

            const bool better =
                rb.reward > result.best_reward ||
                (rb.reward == result.best_reward &&
                 (s2.length() < result.best_state.length() ||
                  (s2.length() == result.best_state.length() && s2.start_idx < result.best_state.start_idx)));
            if (better) {
                result.best_reward = rb.reward;
                result.best_ss = rb.ss;
                result.best_state = s2;
            }

            if (replay.size() >= cfg.warmup) {
                std::vector<Transition> batch;
                batch.reserve(cfg.rl_batch);
                for (int d = 0; d < cfg.rl_batch; ++d)
                    batch.push_back(replay.at(static_cast<int>(rng.uniform_int(replay.size()))));
                td_update(net, target, batch, cfg.gamma, ep.K_prime, adam);
                ++updates;
                if (updates % cfg.target_sync_every == 0) target.copy_from(net);
            }
            s = s2;
        }
    }
    return result;
}

}  // namespace focalzone
