#include "focalzone/reward.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Dense>

namespace focalzone {

namespace {

ARModel fit_ar_impl(const double* x, int n, int p) {
    if (p < 1) throw ValidationError("fit_ar: order must be positive");
    if (n < 2 * p + 2)
        throw ValidationError("fit_ar: series length " + std::to_string(n) + " below 2p+2 = " +
                              std::to_string(2 * p + 2));
    const int rows = n - p;
    const int cols = p + 1;  // lags 1..p, then intercept
    Eigen::MatrixXd A(rows, cols);
    Eigen::VectorXd y(rows);
    for (int t = p; t < n; ++t) {
        const int r = t - p;
        y(r) = x[t];
        for (int m = 1; m <= p; ++m) A(r, m - 1) = x[t - m];
        A(r, p) = 1.0;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    Eigen::VectorXd theta;
    if (qr.rank() == cols) {
        theta = qr.solve(y);
    } else {
        // Degenerate design (e.g. constant series): ridge on the normal equations.
        Eigen::MatrixXd M = A.transpose() * A;
        M.diagonal().array() += 1e-8;
        theta = M.ldlt().solve(A.transpose() * y);
    }

    ARModel model;
    model.p = p;
    model.coeffs.assign(theta.data(), theta.data() + p);
    model.intercept = theta(p);
    model.residual_variance = (y - A * theta).squaredNorm() / rows;
    return model;
}

// Per-point silhouette over flat point storage; identical arithmetic in both
// exec modes (each point's terms are accumulated in the same j-order).
double silhouette_impl(const double* pts, int n, int dim, const std::vector<int>& labels, ExecMode mode) {
    int max_label = 0;
    for (int l : labels) max_label = std::max(max_label, l);
    std::vector<int> count(max_label + 1, 0);
    for (int l : labels) ++count[l];
    int present = 0;
    for (int c : count) present += (c > 0);
    if (present < 2) throw ValidationError("silhouette: need at least 2 distinct labels");

    std::vector<double> s(n, 0.0);
    const int num_labels = max_label + 1;
#pragma omp parallel for schedule(static) if (mode == ExecMode::Parallel)
    for (int i = 0; i < n; ++i) {
        std::vector<double> dist_sum(num_labels, 0.0);
        const double* pi = pts + static_cast<std::ptrdiff_t>(i) * dim;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double* pj = pts + static_cast<std::ptrdiff_t>(j) * dim;
            double d2 = 0.0;
            for (int k = 0; k < dim; ++k) {
                const double diff = pi[k] - pj[k];
                d2 += diff * diff;
            }
            dist_sum[labels[j]] += std::sqrt(d2);
        }
        const int own = labels[i];
        if (count[own] <= 1) {
            s[i] = 0.0;  // singleton cluster convention
            continue;
        }
        const double a = dist_sum[own] / (count[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int l = 0; l < num_labels; ++l)
            if (l != own && count[l] > 0) b = std::min(b, dist_sum[l] / count[l]);
        const double denom = std::max(a, b);
        s[i] = denom == 0.0 ? 0.0 : (b - a) / denom;
    }
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += s[i];
    return total / n;
}

}  // namespace

ARModel fit_ar(const std::vector<double>& series, int p) {
    return fit_ar_impl(series.data(), static_cast<int>(series.size()), p);
}

double silhouette(const std::vector<std::vector<double>>& points, const std::vector<int>& labels) {
    const int n = static_cast<int>(points.size());
    if (n < 2) throw ValidationError("silhouette: need at least 2 points");
    if (labels.size() != points.size()) throw ValidationError("silhouette: labels/points size mismatch");
    const int dim = static_cast<int>(points[0].size());
    std::vector<double> flat(static_cast<std::size_t>(n) * dim);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(points[i].size()) != dim)
            throw ValidationError("silhouette: points have mixed dimensions");
        std::copy(points[i].begin(), points[i].end(), flat.begin() + static_cast<std::ptrdiff_t>(i) * dim);
    }
    for (int l : labels)
        if (l < 0) throw ValidationError("silhouette: negative label");
    return silhouette_impl(flat.data(), n, dim, labels, ExecMode::Serial);
}

double reward_from_silhouette(double ss, double length_penalty) {
    return std::exp(ss + 1.0) / (std::exp(2.0) - 1.0) - length_penalty;
}

RewardEngine::RewardEngine(const std::vector<ExpandedSample>& expanded, const RewardConfig& cfg, ExecMode mode)
    : expanded_(expanded), cfg_(cfg), mode_(mode) {
    if (expanded.empty()) throw ValidationError("reward: no samples");
    if (cfg.p < 1) throw ValidationError("reward: AR order must be positive");
    if (cfg.K_prime < 2) throw ValidationError("reward: K' must be set");
    if (cfg.subsample < 2) throw ValidationError("reward: subsample must be at least 2");
    for (const ExpandedSample& e : expanded)
        if (static_cast<int>(e.features.size()) != cfg.K_prime)
            throw ValidationError("reward: sample dimension differs from K'");

    int max_label = 0;
    for (const ExpandedSample& e : expanded) {
        if (e.label < 0) throw ValidationError("reward: negative label");
        max_label = std::max(max_label, e.label);
    }
    std::vector<std::vector<int>> by_class(max_label + 1);
    for (int i = 0; i < static_cast<int>(expanded.size()); ++i) by_class[expanded[i].label].push_back(i);
    int present = 0;
    for (const auto& g : by_class) present += !g.empty();
    if (present < 2) throw ValidationError("reward: need at least 2 classes");

    const int total = static_cast<int>(expanded.size());
    if (total <= cfg.subsample) {
        picked_.resize(total);
        std::iota(picked_.begin(), picked_.end(), 0);
    } else {
        // Largest-remainder quotas per class, at least one from each.
        const int M = cfg.subsample;
        const int num_labels = max_label + 1;
        std::vector<int> quota(num_labels, 0);
        std::vector<std::pair<double, int>> frac;  // (-fraction, class) for stable ordering
        int assigned = 0;
        for (int c = 0; c < num_labels; ++c) {
            if (by_class[c].empty()) continue;
            const double share = static_cast<double>(M) * by_class[c].size() / total;
            quota[c] = static_cast<int>(share);
            assigned += quota[c];
            frac.push_back({-(share - quota[c]), c});
        }
        std::sort(frac.begin(), frac.end());
        for (std::size_t k = 0; k < frac.size() && assigned < M; ++k) {
            ++quota[frac[k].second];
            ++assigned;
        }
        for (int c = 0; c < num_labels; ++c) {
            if (!by_class[c].empty() && quota[c] == 0 && assigned < M + num_labels) {
                quota[c] = 1;
                ++assigned;
            }
        }
        while (assigned > M) {
            int big = -1;
            for (int c = 0; c < num_labels; ++c)
                if (quota[c] > 1 && (big < 0 || quota[c] > quota[big])) big = c;
            if (big < 0) break;
            --quota[big];
            --assigned;
        }
        Rng rng(cfg.seed);
        for (int c = 0; c < num_labels; ++c) {
            if (by_class[c].empty()) continue;
            std::vector<int> idx = by_class[c];
            rng.shuffle(idx);
            const int take = std::min<int>(quota[c], static_cast<int>(idx.size()));
            picked_.insert(picked_.end(), idx.begin(), idx.begin() + take);
        }
        std::sort(picked_.begin(), picked_.end());
    }
    picked_labels_.reserve(picked_.size());
    for (int i : picked_) picked_labels_.push_back(expanded_[i].label);

    std::vector<int> sub_count(max_label + 1, 0);
    for (int l : picked_labels_) ++sub_count[l];
    int sub_present = 0;
    for (int c : sub_count) sub_present += (c > 0);
    if (sub_present < 2) throw ValidationError("reward: subsample collapsed to a single class");
}

RewardBreakdown RewardEngine::evaluate(const env::FocalState& state) const {
    const int len = state.length();
    if (state.start_idx < 0 || state.end_idx > cfg_.K_prime || len <= 0)
        throw ValidationError("reward: window outside [0, K']");
    if (len < 2 * cfg_.p + 2)
        throw ValidationError("reward: window length " + std::to_string(len) + " below 2p+2 = " +
                              std::to_string(2 * cfg_.p + 2));

    const int n = static_cast<int>(picked_.size());
    const int p = cfg_.p;
    std::vector<double> coeffs(static_cast<std::size_t>(n) * p);
#pragma omp parallel for schedule(static) if (mode_ == ExecMode::Parallel)
    for (int i = 0; i < n; ++i) {
        const double* slice = expanded_[picked_[i]].features.data() + state.start_idx;
        const ARModel m = fit_ar_impl(slice, len, p);
        std::copy(m.coeffs.begin(), m.coeffs.end(), coeffs.begin() + static_cast<std::ptrdiff_t>(i) * p);
    }

    RewardBreakdown out;
    out.ss = silhouette_impl(coeffs.data(), n, p, picked_labels_, mode_);
    out.length_penalty = cfg_.beta * static_cast<double>(len) / cfg_.K_prime;
    out.reward = reward_from_silhouette(out.ss, out.length_penalty);
    ++evaluations_;
    return out;
}

RewardBreakdown state_reward(const std::vector<ExpandedSample>& expanded, const env::FocalState& state,
                             const RewardConfig& cfg, ExecMode mode) {
    return RewardEngine(expanded, cfg, mode).evaluate(state);
}

}  // namespace focalzone
