#include "focalzone/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace focalzone {

long long ConfusionMatrix::total() const {
    long long t = 0;
    for (const auto& row : counts)
        for (long long v : row) t += v;
    return t;
}

long long ConfusionMatrix::trace() const {
    long long t = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) t += counts[i][i];
    return t;
}

ClassificationReport classification_report(const std::vector<std::pair<int, int>>& true_pred, int num_classes) {
    if (true_pred.empty()) throw ValidationError("classification_report: no pairs");
    if (num_classes < 1) throw ValidationError("classification_report: num_classes must be positive");

    ClassificationReport rep;
    rep.confusion.counts.assign(num_classes, std::vector<long long>(num_classes, 0));
    for (const auto& [t, p] : true_pred) {
        if (t < 0 || t >= num_classes || p < 0 || p >= num_classes)
            throw ValidationError("classification_report: label outside [0, num_classes)");
        ++rep.confusion.counts[t][p];
    }

    rep.accuracy = static_cast<double>(rep.confusion.trace()) / rep.confusion.total();
    rep.precision.resize(num_classes);
    rep.recall.resize(num_classes);
    rep.f1.resize(num_classes);
    for (int c = 0; c < num_classes; ++c) {
        long long tp = rep.confusion.counts[c][c];
        long long pred_c = 0, true_c = 0;
        for (int k = 0; k < num_classes; ++k) {
            pred_c += rep.confusion.counts[k][c];
            true_c += rep.confusion.counts[c][k];
        }
        rep.precision[c] = pred_c == 0 ? 0.0 : static_cast<double>(tp) / pred_c;
        rep.recall[c] = true_c == 0 ? 0.0 : static_cast<double>(tp) / true_c;
        const double pr = rep.precision[c] + rep.recall[c];
        rep.f1[c] = pr == 0.0 ? 0.0 : 2.0 * rep.precision[c] * rep.recall[c] / pr;
    }
    rep.precision_macro = std::accumulate(rep.precision.begin(), rep.precision.end(), 0.0) / num_classes;
    rep.recall_macro = std::accumulate(rep.recall.begin(), rep.recall.end(), 0.0) / num_classes;
    rep.f1_macro = std::accumulate(rep.f1.begin(), rep.f1.end(), 0.0) / num_classes;
    return rep;
}

RocReport roc_auc(const std::vector<std::vector<double>>& scores, const std::vector<int>& labels,
                  int num_classes) {
    if (scores.empty()) throw ValidationError("roc_auc: no scores");
    if (scores.size() != labels.size()) throw ValidationError("roc_auc: scores/labels size mismatch");
    const int n = static_cast<int>(scores.size());
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(scores[i].size()) != num_classes)
            throw ValidationError("roc_auc: score vector length differs from num_classes");
        if (labels[i] < 0 || labels[i] >= num_classes)
            throw ValidationError("roc_auc: label outside [0, num_classes)");
    }
    bool multi = false;
    for (int i = 1; i < n; ++i) multi = multi || labels[i] != labels[0];
    if (!multi) throw ValidationError("roc_auc: all samples share one label");

    RocReport rep;
    rep.curves.resize(num_classes);
    double auc_sum = 0.0;
    int valid = 0;
    for (int c = 0; c < num_classes; ++c) {
        RocCurve& cur = rep.curves[c];
        cur.cls = c;
        long long P = 0, N = 0;
        for (int i = 0; i < n; ++i) (labels[i] == c ? P : N)++;
        if (P == 0 || N == 0) {
            rep.skipped.push_back(c);
            continue;
        }
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return scores[a][c] > scores[b][c]; });

        cur.fpr.push_back(0.0);
        cur.tpr.push_back(0.0);
        long long tp = 0, fp = 0;
        double auc = 0.0;
        int i = 0;
        while (i < n) {
            // Group ties into a single threshold step.
            int j = i;
            long long dtp = 0, dfp = 0;
            while (j < n && scores[order[j]][c] == scores[order[i]][c]) {
                (labels[order[j]] == c ? dtp : dfp)++;
                ++j;
            }
            const double fpr0 = static_cast<double>(fp) / N;
            const double tpr0 = static_cast<double>(tp) / P;
            tp += dtp;
            fp += dfp;
            const double fpr1 = static_cast<double>(fp) / N;
            const double tpr1 = static_cast<double>(tp) / P;
            auc += (fpr1 - fpr0) * 0.5 * (tpr0 + tpr1);
            cur.fpr.push_back(fpr1);
            cur.tpr.push_back(tpr1);
            i = j;
        }
        cur.auc = auc;
        cur.valid = true;
        auc_sum += auc;
        ++valid;
    }
    if (valid == 0) throw ValidationError("roc_auc: no class has both positives and negatives");
    rep.auc_macro = auc_sum / valid;
    return rep;
}

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-14;
    constexpr double kFpMin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    throw ValidationError("incomplete_beta: continued fraction failed to converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw ValidationError("incomplete_beta: a, b must be positive");
    if (x < 0.0 || x > 1.0) throw ValidationError("incomplete_beta: x outside [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double ln_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_two_sided(double t, int df) {
    if (df < 1) throw ValidationError("student_t_two_sided: df must be positive");
    const double x = df / (df + t * t);
    return incomplete_beta(df / 2.0, 0.5, x);
}

CorrelationReport pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ValidationError("pearson: size mismatch");
    const int n = static_cast<int>(x.size());
    if (n < 3) throw ValidationError("pearson: need at least 3 pairs");
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw ValidationError("pearson: zero variance input");

    CorrelationReport rep;
    rep.n = n;
    rep.r = sxy / std::sqrt(sxx * syy);
    rep.r = std::clamp(rep.r, -1.0, 1.0);
    const int df = n - 2;
    const double denom = 1.0 - rep.r * rep.r;
    if (denom <= 0.0) {
        rep.t_stat = std::numeric_limits<double>::infinity() * (rep.r >= 0 ? 1.0 : -1.0);
        rep.p_two_sided = 0.0;
        return rep;
    }
    rep.t_stat = rep.r * std::sqrt(df / denom);
    rep.p_two_sided = student_t_two_sided(rep.t_stat, df);
    return rep;
}

}  // namespace focalzone
