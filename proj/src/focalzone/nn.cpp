#include "focalzone/nn.hpp"

#include <algorithm>
#include <cmath>

namespace focalzone::nn {

namespace {

Mat sigmoid(const Mat& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }

Mat apply_activation(Activation a, const Mat& pre) {
    switch (a) {
        case Activation::Sigmoid: return sigmoid(pre);
        case Activation::Relu: return pre.cwiseMax(0.0);
        case Activation::Identity: return pre;
    }
    throw ValidationError("nn: unknown activation");
}

}  // namespace

void zero_grads(const std::vector<Tensor*>& params) {
    for (Tensor* t : params) t->zero_grad();
}

void glorot_init(Tensor& t, int fan_in, int fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (Eigen::Index c = 0; c < t.value.cols(); ++c)
        for (Eigen::Index r = 0; r < t.value.rows(); ++r)
            t.value(r, c) = limit * (2.0 * rng.uniform01() - 1.0);
}

DenseLayer::DenseLayer(const std::string& name, int out, int in, Activation a)
    : W(name + ".W", out, in, true), b(name + ".b", out, 1, false), act(a) {
    if (out < 1 || in < 1) throw ValidationError("dense: sizes must be positive");
}

void DenseLayer::init(Rng& rng) { glorot_init(W, in_size(), out_size(), rng); }

Mat DenseLayer::forward(const Mat& x) {
    if (x.rows() != W.value.cols())
        throw ValidationError("dense '" + W.name + "': input has " + std::to_string(x.rows()) +
                              " rows, expected " + std::to_string(W.value.cols()));
    x_cache = x;
    Mat pre = W.value * x;
    pre.colwise() += Vec(b.value.col(0));
    out_cache = apply_activation(act, pre);
    return out_cache;
}

Mat DenseLayer::backward(const Mat& dout) {
    if (dout.rows() != W.value.rows() || dout.cols() != out_cache.cols())
        throw ValidationError("dense '" + W.name + "': gradient shape mismatch");
    Mat dpre;
    switch (act) {
        case Activation::Sigmoid:
            dpre = dout.cwiseProduct(out_cache.cwiseProduct((1.0 - out_cache.array()).matrix()));
            break;
        case Activation::Relu:
            dpre = dout.cwiseProduct((out_cache.array() > 0.0).cast<double>().matrix());
            break;
        case Activation::Identity:
            dpre = dout;
            break;
    }
    W.grad += dpre * x_cache.transpose();
    b.grad.col(0) += dpre.rowwise().sum();
    return W.value.transpose() * dpre;
}

std::vector<Tensor*> DenseLayer::params() { return {&W, &b}; }

LSTMCell::LSTMCell(const std::string& name, int input, int hidden, double fb)
    : W(name + ".W", 4 * hidden, input + hidden, true),
      b(name + ".b", 4 * hidden, 1, false),
      input_size(input),
      hidden_size(hidden),
      forget_bias(fb) {
    if (input < 1 || hidden < 1) throw ValidationError("lstm: sizes must be positive");
}

void LSTMCell::init(Rng& rng) { glorot_init(W, input_size + hidden_size, hidden_size, rng); }

std::pair<Mat, Mat> LSTMCell::step(const Mat& x, const Mat& h_prev, const Mat& c_prev,
                                   StepCache& cache) const {
    const int H = hidden_size;
    if (x.rows() != input_size || h_prev.rows() != H || c_prev.rows() != H || x.cols() != h_prev.cols() ||
        x.cols() != c_prev.cols())
        throw ValidationError("lstm '" + W.name + "': shape mismatch in step");
    const Eigen::Index B = x.cols();

    Mat xh(input_size + H, B);
    xh.topRows(input_size) = x;
    xh.bottomRows(H) = h_prev;
    Mat z = W.value * xh;
    z.colwise() += Vec(b.value.col(0));
    z.middleRows(H, H).array() += forget_bias;

    cache.x = x;
    cache.h_prev = h_prev;
    cache.c_prev = c_prev;
    cache.i = sigmoid(z.topRows(H));
    cache.f = sigmoid(z.middleRows(H, H));
    cache.o = sigmoid(z.middleRows(2 * H, H));
    cache.g = z.bottomRows(H).array().tanh().matrix();
    cache.c = cache.f.cwiseProduct(c_prev) + cache.i.cwiseProduct(cache.g);
    cache.tanh_c = cache.c.array().tanh().matrix();
    Mat h = cache.o.cwiseProduct(cache.tanh_c);
    return {h, cache.c};
}

void LSTMCell::step_backward(const StepCache& cache, const Mat& dh, const Mat& dc, Mat& dx, Mat& dh_prev,
                             Mat& dc_prev) {
    const int H = hidden_size;
    const Eigen::Index B = cache.x.cols();
    if (dh.rows() != H || dh.cols() != B || dc.rows() != H || dc.cols() != B)
        throw ValidationError("lstm '" + W.name + "': gradient shape mismatch");

    const Mat do_ = dh.cwiseProduct(cache.tanh_c);
    const Mat dc_total =
        dc + dh.cwiseProduct(cache.o).cwiseProduct((1.0 - cache.tanh_c.array().square()).matrix());
    const Mat df = dc_total.cwiseProduct(cache.c_prev);
    const Mat di = dc_total.cwiseProduct(cache.g);
    const Mat dg = dc_total.cwiseProduct(cache.i);
    dc_prev = dc_total.cwiseProduct(cache.f);

    Mat dz(4 * H, B);
    dz.topRows(H) = di.cwiseProduct(cache.i).cwiseProduct((1.0 - cache.i.array()).matrix());
    dz.middleRows(H, H) = df.cwiseProduct(cache.f).cwiseProduct((1.0 - cache.f.array()).matrix());
    dz.middleRows(2 * H, H) = do_.cwiseProduct(cache.o).cwiseProduct((1.0 - cache.o.array()).matrix());
    dz.bottomRows(H) = dg.cwiseProduct((1.0 - cache.g.array().square()).matrix());

    Mat xh(input_size + H, B);
    xh.topRows(input_size) = cache.x;
    xh.bottomRows(H) = cache.h_prev;
    W.grad += dz * xh.transpose();
    b.grad.col(0) += dz.rowwise().sum();

    const Mat dxh = W.value.transpose() * dz;
    dx = dxh.topRows(input_size);
    dh_prev = dxh.bottomRows(H);
}

std::vector<Tensor*> LSTMCell::params() { return {&W, &b}; }

Vec softmax(const Vec& logits) {
    const double mx = logits.maxCoeff();
    Vec e = (logits.array() - mx).exp().matrix();
    return e / e.sum();
}

std::pair<double, Vec> softmax_cross_entropy(const Vec& logits, int label) {
    if (label < 0 || label >= logits.size()) throw ValidationError("cross_entropy: label out of range");
    const double mx = logits.maxCoeff();
    const Vec shifted = (logits.array() - mx).matrix();
    const double lse = std::log(shifted.array().exp().sum());
    const double loss = lse - shifted(label);
    Vec d = (shifted.array() - lse).exp().matrix();
    d(label) -= 1.0;
    return {loss, d};
}

std::pair<double, Mat> softmax_cross_entropy_batch(const Mat& logits, const std::vector<int>& labels) {
    const Eigen::Index B = logits.cols();
    if (static_cast<Eigen::Index>(labels.size()) != B)
        throw ValidationError("cross_entropy: batch size mismatch");
    Mat d(logits.rows(), B);
    double loss = 0.0;
    for (Eigen::Index j = 0; j < B; ++j) {
        auto [l, dj] = softmax_cross_entropy(logits.col(j), labels[j]);
        loss += l;
        d.col(j) = dj;
    }
    return {loss / B, d / static_cast<double>(B)};
}

double l2_penalty(const std::vector<Tensor*>& params, double lambda) {
    double s = 0.0;
    for (const Tensor* t : params)
        if (t->is_weight) s += t->value.squaredNorm();
    return lambda * s;
}

void l2_add_grads(const std::vector<Tensor*>& params, double lambda) {
    for (Tensor* t : params)
        if (t->is_weight) t->grad += 2.0 * lambda * t->value;
}

void AdamState::step(const std::vector<Tensor*>& params) {
    if (m.empty()) {
        for (const Tensor* p : params) {
            m.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
            v.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
        }
    }
    if (m.size() != params.size()) throw ValidationError("adam: parameter list changed size");
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& p = *params[k];
        if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols())
            throw ValidationError("adam: grad shape mismatch for " + p.name);
        m[k] = beta1 * m[k] + (1.0 - beta1) * p.grad;
        v[k] = beta2 * v[k] + (1.0 - beta2) * p.grad.cwiseProduct(p.grad);
        const Mat mhat = m[k] / bc1;
        const Mat vhat = v[k] / bc2;
        p.value.array() -= lr * mhat.array() / (vhat.array().sqrt() + eps);
    }
}

GradCheckReport grad_check(const std::function<double()>& loss_fn, const std::function<void()>& grad_fn,
                           const std::vector<Tensor*>& params, double tol, int max_coords, Rng& rng) {
    const double base = loss_fn();
    if (!std::isfinite(base)) throw ValidationError("grad_check: loss is not finite at the given parameters");

    grad_fn();
    std::vector<Mat> saved;
    saved.reserve(params.size());
    for (const Tensor* p : params) saved.push_back(p->grad);

    std::vector<std::pair<int, int>> coords;  // (param index, linear index)
    for (std::size_t k = 0; k < params.size(); ++k)
        for (int idx = 0; idx < params[k]->value.size(); ++idx)
            coords.push_back({static_cast<int>(k), idx});
    if (static_cast<int>(coords.size()) > max_coords) {
        rng.shuffle(coords);
        coords.resize(max_coords);
    }

    constexpr double kStep = 1e-5;
    GradCheckReport rep;
    rep.checked = static_cast<int>(coords.size());
    for (const auto& [k, idx] : coords) {
        double* cell = params[k]->value.data() + idx;
        const double orig = *cell;
        *cell = orig + kStep;
        const double lp = loss_fn();
        *cell = orig - kStep;
        const double lm = loss_fn();
        *cell = orig;
        const double fd = (lp - lm) / (2.0 * kStep);
        const double analytic = saved[k](idx);
        const double rel = std::abs(analytic - fd) / std::max({1e-3, std::abs(analytic), std::abs(fd)});
        if (rel > rep.max_rel_err) {
            rep.max_rel_err = rel;
            rep.worst = params[k]->name + "[" + std::to_string(idx) + "]";
        }
    }
    rep.pass = rep.max_rel_err < tol;
    return rep;
}

}  // namespace focalzone::nn
