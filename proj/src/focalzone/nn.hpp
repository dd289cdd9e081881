#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "focalzone/common.hpp"

namespace focalzone::nn {

using Mat = Eigen::MatrixXd;  // columns are batch members
using Vec = Eigen::VectorXd;

// Named parameter with an accumulating gradient. is_weight marks matrices
// subject to l2 regularization (biases are exempt).
struct Tensor {
    std::string name;
    Mat value;
    Mat grad;
    bool is_weight = true;

    Tensor() = default;
    Tensor(std::string n, int rows, int cols, bool weight)
        : name(std::move(n)), value(Mat::Zero(rows, cols)), grad(Mat::Zero(rows, cols)), is_weight(weight) {}
    void zero_grad() { grad.setZero(); }
};

void zero_grads(const std::vector<Tensor*>& params);

// Uniform(-limit, limit) with limit = sqrt(6/(fan_in+fan_out)).
void glorot_init(Tensor& t, int fan_in, int fan_out, Rng& rng);

enum class Activation { Sigmoid, Relu, Identity };

struct DenseLayer {
    Tensor W;  // [out x in]
    Tensor b;  // [out x 1]
    Activation act = Activation::Identity;

    DenseLayer() = default;
    DenseLayer(const std::string& name, int out, int in, Activation a);
    void init(Rng& rng);

    int in_size() const { return static_cast<int>(W.value.cols()); }
    int out_size() const { return static_cast<int>(W.value.rows()); }

    // forward caches (x, out) for the following backward.
    Mat forward(const Mat& x);
    // Accumulates into W.grad / b.grad and returns d(loss)/dx.
    Mat backward(const Mat& dout);

    std::vector<Tensor*> params();

    Mat x_cache, out_cache;
};

// Single LSTM cell with fused gate weights, rows ordered [i; f; o; g].
// forget_bias is added to the forget-gate preactivation at forward time.
struct LSTMCell {
    Tensor W;  // [4H x (in + H)]
    Tensor b;  // [4H x 1]
    int input_size = 0;
    int hidden_size = 0;
    double forget_bias = 0.0;

    LSTMCell() = default;
    LSTMCell(const std::string& name, int input, int hidden, double fb);
    void init(Rng& rng);

    struct StepCache {
        Mat x, h_prev, c_prev;
        Mat i, f, o, g, c, tanh_c;
    };

    // Returns (h, c); fills cache for step_backward.
    std::pair<Mat, Mat> step(const Mat& x, const Mat& h_prev, const Mat& c_prev, StepCache& cache) const;

    // dh/dc are gradients flowing into this step's outputs; gradients for the
    // inputs come back through dx/dh_prev/dc_prev. Accumulates W.grad, b.grad.
    void step_backward(const StepCache& cache, const Mat& dh, const Mat& dc, Mat& dx, Mat& dh_prev,
                       Mat& dc_prev);

    std::vector<Tensor*> params();
};

Vec softmax(const Vec& logits);

// Single-sample cross-entropy with max-subtraction; dlogits = softmax - onehot.
std::pair<double, Vec> softmax_cross_entropy(const Vec& logits, int label);

// Batched mean cross-entropy; dlogits = (softmax - onehot) / batch.
std::pair<double, Mat> softmax_cross_entropy_batch(const Mat& logits, const std::vector<int>& labels);

// lambda * sum of squared entries over weight tensors (biases excluded).
double l2_penalty(const std::vector<Tensor*>& params, double lambda);
// Adds the corresponding gradient 2*lambda*W.
void l2_add_grads(const std::vector<Tensor*>& params, double lambda);

struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long long t = 0;
    std::vector<Mat> m, v;

    explicit AdamState(double learning_rate) : lr(learning_rate) {}
    // Applies one bias-corrected step using each tensor's accumulated grad.
    void step(const std::vector<Tensor*>& params);
};

struct GradCheckReport {
    int checked = 0;
    double max_rel_err = 0.0;
    bool pass = true;
    std::string worst;  // "tensor[idx]" of the largest relative error
};

// Central differences (step 1e-5) on up to max_coords randomly chosen
// coordinates. loss_fn() evaluates the scalar loss at the current parameter
// values; grad_fn() must recompute every tensor's grad from scratch.
// Relative error: |analytic - fd| / max(1e-3, |analytic|, |fd|).
GradCheckReport grad_check(const std::function<double()>& loss_fn, const std::function<void()>& grad_fn,
                           const std::vector<Tensor*>& params, double tol, int max_coords, Rng& rng);

}  // namespace focalzone::nn
