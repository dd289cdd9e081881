#include "focalzone/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace focalzone {

void validate_classifier_config(const ClassifierConfig& cfg) {
    if (cfg.lstm_layers < 1) throw ValidationError("classifier: need at least one LSTM layer");
    if (cfg.hidden < 1 || cfg.fc_width < 1) throw ValidationError("classifier: widths must be positive");
    if (cfg.fc_layers < 0) throw ValidationError("classifier: fc_layers must be >= 0");
    if (cfg.lr <= 0.0) throw ValidationError("classifier: lr must be positive");
    if (cfg.lambda < 0.0) throw ValidationError("classifier: lambda must be >= 0");
    if (cfg.batch < 1) throw ValidationError("classifier: batch must be positive");
    if (cfg.iterations < 1 || cfg.probe_iterations < 1)
        throw ValidationError("classifier: iteration counts must be positive");
}

ClassifierConfig probe_config(const ClassifierConfig& cfg) {
    ClassifierConfig probe = cfg;
    probe.iterations = cfg.probe_iterations;
    return probe;
}

std::vector<nn::Tensor*> WASLSTMModel::params() {
    std::vector<nn::Tensor*> ps;
    for (nn::LSTMCell& c : cells)
        for (nn::Tensor* t : c.params()) ps.push_back(t);
    for (nn::DenseLayer& l : fc)
        for (nn::Tensor* t : l.params()) ps.push_back(t);
    for (nn::Tensor* t : out.params()) ps.push_back(t);
    return ps;
}

namespace {

void check_samples(const std::vector<ExpandedSample>& samples, int K_prime, int num_classes) {
    if (samples.empty()) throw ValidationError("classifier: no samples");
    for (const ExpandedSample& e : samples) {
        if (static_cast<int>(e.features.size()) != K_prime)
            throw ValidationError("classifier: sample dimension differs from K'");
        if (e.label < 0 || e.label >= num_classes)
            throw ValidationError("classifier: label outside [0, num_classes)");
    }
}

// Window slices as a (window length) x (batch) matrix, z-scored per dimension.
nn::Mat make_input(const WASLSTMModel& m, const std::vector<ExpandedSample>& samples,
                   const std::vector<int>& idx) {
    const int L = m.zone.length();
    nn::Mat X(L, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) {
        const double* f = samples[idx[j]].features.data() + m.zone.start_idx;
        for (int t = 0; t < L; ++t) X(t, j) = (f[t] - m.norm_mean[t]) / m.norm_std[t];
    }
    return X;
}

// Sequence forward through the stacked cells; returns the averaged top-layer
// hidden state at the last two positions. Caches (when given) are laid out
// caches[layer][t] for the training backward pass.
nn::Mat forward_sequence(const WASLSTMModel& m, const nn::Mat& X,
                         std::vector<std::vector<nn::LSTMCell::StepCache>>* caches) {
    const int L = static_cast<int>(X.rows());
    const Eigen::Index B = X.cols();
    const int H = m.cfg.hidden;
    const int layers = static_cast<int>(m.cells.size());

    std::vector<nn::Mat> h(layers, nn::Mat::Zero(H, B));
    std::vector<nn::Mat> c(layers, nn::Mat::Zero(H, B));
    nn::Mat top_prev;  // top-layer h at position L-2
    nn::LSTMCell::StepCache scratch;
    for (int t = 0; t < L; ++t) {
        nn::Mat x = X.row(t);
        for (int l = 0; l < layers; ++l) {
            nn::LSTMCell::StepCache& cache = caches ? (*caches)[l][t] : scratch;
            auto [hn, cn] = m.cells[l].step(x, h[l], c[l], cache);
            h[l] = hn;
            c[l] = cn;
            x = h[l];
        }
        if (t == L - 2) top_prev = h[layers - 1];
    }
    return 0.5 * (top_prev + h[layers - 1]);
}

nn::Mat forward_logits(WASLSTMModel& m, const nn::Mat& X,
                       std::vector<std::vector<nn::LSTMCell::StepCache>>* caches) {
    nn::Mat a = forward_sequence(m, X, caches);
    for (nn::DenseLayer& l : m.fc) a = l.forward(a);
    return m.out.forward(a);
}

// Cache-free dense application for prediction on a const model.
nn::Mat dense_apply(const nn::DenseLayer& l, const nn::Mat& x) {
    nn::Mat pre = l.W.value * x;
    pre.colwise() += nn::Vec(l.b.value.col(0));
    switch (l.act) {
        case nn::Activation::Sigmoid: return (1.0 / (1.0 + (-pre.array()).exp())).matrix();
        case nn::Activation::Relu: return pre.cwiseMax(0.0);
        case nn::Activation::Identity: return pre;
    }
    throw ValidationError("classifier: unknown activation");
}

}  // namespace

WASLSTMModel train_classifier(const std::vector<ExpandedSample>& train, const env::FocalState& zone,
                              const ClassifierConfig& cfg, int num_classes, std::uint64_t seed,
                              std::vector<double>* loss_log) {
    validate_classifier_config(cfg);
    if (num_classes < 2) throw ValidationError("classifier: need at least 2 classes");
    if (train.empty()) throw ValidationError("classifier: empty training set");
    const int K_prime = static_cast<int>(train[0].features.size());
    check_samples(train, K_prime, num_classes);
    if (!(0 <= zone.start_idx && zone.start_idx < zone.end_idx && zone.end_idx <= K_prime))
        throw ValidationError("classifier: window outside [0, K']");
    const int L = zone.length();
    if (L < 2) throw ValidationError("classifier: window must span at least 2 dimensions");
    {
        std::vector<char> seen(num_classes, 0);
        for (const ExpandedSample& e : train) seen[e.label] = 1;
        int present = 0;
        for (char s : seen) present += s;
        if (present < 2) throw ValidationError("classifier: training set holds a single class");
    }

    WASLSTMModel m;
    m.cfg = cfg;
    m.zone = zone;
    m.K_prime = K_prime;
    m.num_classes = num_classes;

    // Per-dimension train statistics of the window slice.
    const int n = static_cast<int>(train.size());
    m.norm_mean.assign(L, 0.0);
    m.norm_std.assign(L, 0.0);
    for (const ExpandedSample& e : train)
        for (int t = 0; t < L; ++t) m.norm_mean[t] += e.features[zone.start_idx + t];
    for (int t = 0; t < L; ++t) m.norm_mean[t] /= n;
    for (const ExpandedSample& e : train)
        for (int t = 0; t < L; ++t) {
            const double d = e.features[zone.start_idx + t] - m.norm_mean[t];
            m.norm_std[t] += d * d;
        }
    for (int t = 0; t < L; ++t) m.norm_std[t] = std::max(std::sqrt(m.norm_std[t] / n), 1e-6);

    Rng rng(seed);
    for (int l = 0; l < cfg.lstm_layers; ++l) {
        m.cells.emplace_back("lstm" + std::to_string(l), l == 0 ? 1 : cfg.hidden, cfg.hidden,
                             cfg.forget_bias);
        m.cells.back().init(rng);
    }
    for (int l = 0; l < cfg.fc_layers; ++l) {
        m.fc.emplace_back("fc" + std::to_string(l), cfg.fc_width, l == 0 ? cfg.hidden : cfg.fc_width,
                          nn::Activation::Sigmoid);
        m.fc.back().init(rng);
    }
    m.out = nn::DenseLayer("out", num_classes, cfg.fc_layers == 0 ? cfg.hidden : cfg.fc_width,
                           nn::Activation::Identity);
    m.out.init(rng);

    auto params = m.params();
    nn::AdamState adam(cfg.lr);

    // Wrap-around minibatches: exhaust the seeded permutation, reshuffle, keep
    // filling so every batch has exactly cfg.batch members.
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    std::size_t cursor = 0;
    auto next_batch = [&]() {
        std::vector<int> idx;
        idx.reserve(cfg.batch);
        while (static_cast<int>(idx.size()) < cfg.batch) {
            if (cursor == perm.size()) {
                rng.shuffle(perm);
                cursor = 0;
            }
            idx.push_back(perm[cursor++]);
        }
        return idx;
    };

    std::vector<ExpandedSample> batch(cfg.batch);
    for (int it = 0; it < cfg.iterations; ++it) {
        const std::vector<int> idx = next_batch();
        for (std::size_t j = 0; j < idx.size(); ++j) batch[j] = train[idx[j]];
        const double loss = classifier_loss(m, batch, true);
        if (loss_log) loss_log->push_back(loss);
        adam.step(params);
    }
    return m;
}

double classifier_loss(WASLSTMModel& m, const std::vector<ExpandedSample>& samples,
                       bool compute_grads) {
    check_samples(samples, m.K_prime, m.num_classes);
    const int L = m.zone.length();
    const int layers = static_cast<int>(m.cells.size());
    std::vector<int> idx(samples.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<int> labels(samples.size());
    for (std::size_t j = 0; j < samples.size(); ++j) labels[j] = samples[j].label;
    const nn::Mat X = make_input(m, samples, idx);

    auto params = m.params();
    std::vector<std::vector<nn::LSTMCell::StepCache>> caches(layers,
                                                             std::vector<nn::LSTMCell::StepCache>(L));
    const nn::Mat logits = forward_logits(m, X, &caches);
    auto [data_loss, dlogits] = nn::softmax_cross_entropy_batch(logits, labels);
    const double loss = data_loss + nn::l2_penalty(params, m.cfg.lambda);
    if (!compute_grads) return loss;

    nn::zero_grads(params);
    nn::Mat d = m.out.backward(dlogits);
    for (int l = static_cast<int>(m.fc.size()) - 1; l >= 0; --l) d = m.fc[l].backward(d);

    // The averaging node splits its gradient equally onto the top layer's
    // hidden states at the last two positions.
    const int H = m.cfg.hidden;
    const Eigen::Index B = X.cols();
    std::vector<nn::Mat> dh_above(L, nn::Mat::Zero(H, B));
    dh_above[L - 1] = 0.5 * d;
    dh_above[L - 2] = 0.5 * d;
    for (int l = layers - 1; l >= 0; --l) {
        const int in_size = m.cells[l].input_size;
        std::vector<nn::Mat> dx_seq(L);
        nn::Mat dh_carry = nn::Mat::Zero(H, B);
        nn::Mat dc_carry = nn::Mat::Zero(H, B);
        for (int t = L - 1; t >= 0; --t) {
            const nn::Mat dh = dh_above[t] + dh_carry;
            nn::Mat dx(in_size, B);
            m.cells[l].step_backward(caches[l][t], dh, dc_carry, dx, dh_carry, dc_carry);
            dx_seq[t] = std::move(dx);
        }
        if (l > 0) dh_above = std::move(dx_seq);
    }
    nn::l2_add_grads(params, m.cfg.lambda);
    return loss;
}

nn::Mat predict_probs(const WASLSTMModel& m, const std::vector<ExpandedSample>& samples) {
    check_samples(samples, m.K_prime, m.num_classes);
    std::vector<int> idx(samples.size());
    std::iota(idx.begin(), idx.end(), 0);
    const nn::Mat X = make_input(m, samples, idx);
    nn::Mat a = forward_sequence(m, X, nullptr);
    for (const nn::DenseLayer& l : m.fc) a = dense_apply(l, a);
    const nn::Mat logits = dense_apply(m.out, a);
    nn::Mat probs(logits.rows(), logits.cols());
    for (Eigen::Index j = 0; j < logits.cols(); ++j) probs.col(j) = nn::softmax(logits.col(j));
    return probs;
}

std::pair<int, std::vector<double>> predict(const WASLSTMModel& m, const ExpandedSample& s) {
    const nn::Mat probs = predict_probs(m, {s});
    int best = 0;
    for (int c = 1; c < m.num_classes; ++c)
        if (probs(c, 0) > probs(best, 0)) best = c;
    std::vector<double> pv(probs.col(0).data(), probs.col(0).data() + m.num_classes);
    return {best, pv};
}

double accuracy(const WASLSTMModel& m, const std::vector<ExpandedSample>& samples) {
    if (samples.empty()) throw ValidationError("accuracy: no samples");
    const nn::Mat probs = predict_probs(m, samples);
    long long correct = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        int best = 0;
        for (int c = 1; c < m.num_classes; ++c)
            if (probs(c, static_cast<Eigen::Index>(i)) > probs(best, static_cast<Eigen::Index>(i))) best = c;
        correct += (best == samples[i].label);
    }
    return static_cast<double>(correct) / samples.size();
}

double evaluate_zone_accuracy(const std::vector<ExpandedSample>& train,
                              const std::vector<ExpandedSample>& test, const env::FocalState& zone,
                              const ClassifierConfig& cfg, int num_classes, std::uint64_t seed) {
    const WASLSTMModel m = train_classifier(train, zone, cfg, num_classes, seed);
    return accuracy(m, test);
}

}  // namespace focalzone
