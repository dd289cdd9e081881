#pragma once

#include <utility>
#include <vector>

#include "focalzone/common.hpp"

namespace focalzone {

struct ConfusionMatrix {
    // counts[true_class][predicted_class]
    std::vector<std::vector<long long>> counts;

    int num_classes() const { return static_cast<int>(counts.size()); }
    long long total() const;
    long long trace() const;
};

struct ClassificationReport {
    double accuracy = 0.0;
    double precision_macro = 0.0;
    double recall_macro = 0.0;
    double f1_macro = 0.0;
    std::vector<double> precision;  // per class, 0/0 -> 0
    std::vector<double> recall;
    std::vector<double> f1;
    ConfusionMatrix confusion;
};

ClassificationReport classification_report(const std::vector<std::pair<int, int>>& true_pred, int num_classes);

struct RocCurve {
    int cls = 0;
    bool valid = false;        // false when the class lacks positives or negatives
    std::vector<double> fpr;   // one point per tie-grouped threshold step
    std::vector<double> tpr;
    double auc = 0.0;
};

struct RocReport {
    std::vector<RocCurve> curves;  // one per class
    double auc_macro = 0.0;        // mean over valid classes
    std::vector<int> skipped;      // classes without both positives and negatives
};

// One-vs-rest ROC from per-class probability vectors; tied scores are grouped
// into a single threshold step and the AUC is the trapezoidal area.
RocReport roc_auc(const std::vector<std::vector<double>>& scores, const std::vector<int>& labels,
                  int num_classes);

struct CorrelationReport {
    double r = 0.0;
    int n = 0;
    double t_stat = 0.0;
    double p_two_sided = 1.0;
};

// Sample Pearson correlation with the two-sided t-test p-value on n-2 degrees
// of freedom (via the regularized incomplete beta function).
CorrelationReport pearson(const std::vector<double>& x, const std::vector<double>& y);

// Regularized incomplete beta I_x(a, b), exposed for the statistics tests.
double incomplete_beta(double a, double b, double x);

// Two-sided tail probability of Student's t with df degrees of freedom.
double student_t_two_sided(double t, int df);

}  // namespace focalzone
