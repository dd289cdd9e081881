#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <vector>

#include "doctest.h"
#include "focalzone/common.hpp"
#include "focalzone/reward.hpp"

using namespace focalzone;

namespace {

// Definition-level silhouette: explicit O(n^2) pairwise means.
double silhouette_oracle(const std::vector<std::vector<double>>& pts, const std::vector<int>& labels) {
    const int n = static_cast<int>(pts.size());
    auto dist = [&](int i, int j) {
        double s = 0.0;
        for (std::size_t d = 0; d < pts[i].size(); ++d) {
            const double diff = pts[i][d] - pts[j][d];
            s += diff * diff;
        }
        return std::sqrt(s);
    };
    std::set<int> classes(labels.begin(), labels.end());
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        std::map<int, double> sum;
        std::map<int, int> count;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            sum[labels[j]] += dist(i, j);
            ++count[labels[j]];
        }
        const int own = labels[i];
        if (count[own] == 0) continue;  // singleton contributes 0
        const double a = sum[own] / count[own];
        double b = std::numeric_limits<double>::infinity();
        for (int c : classes) {
            if (c == own || count[c] == 0) continue;
            b = std::min(b, sum[c] / count[c]);
        }
        const double m = std::max(a, b);
        total += m == 0.0 ? 0.0 : (b - a) / m;
    }
    return total / n;
}

std::vector<ExpandedSample> two_class_samples(int per_class, int K_prime, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<ExpandedSample> out;
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < per_class; ++i) {
            ExpandedSample e;
            e.label = c;
            const double phi = c == 0 ? 0.8 : -0.8;
            e.features.assign(K_prime, 0.0);
            e.features[0] = rng.normal();
            for (int j = 1; j < K_prime; ++j)
                e.features[j] = phi * e.features[j - 1] + 0.2 * rng.normal();
            out.push_back(std::move(e));
        }
    return out;
}

}  // namespace

TEST_CASE("exact geometric series is fit exactly") {
    const ARModel m = fit_ar({1, 2, 4, 8, 16, 32}, 1);
    CHECK(m.coeffs[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(m.intercept == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
    CHECK(m.residual_variance == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
}

TEST_CASE("an exact second order recurrence is recovered") {
    std::vector<double> x = {1.0, 0.5};
    for (int t = 2; t < 40; ++t) x.push_back(0.6 * x[t - 1] - 0.3 * x[t - 2] + 0.25);
    const ARModel m = fit_ar(x, 2);
    CHECK(m.coeffs[0] == doctest::Approx(0.6).epsilon(1e-9));
    CHECK(m.coeffs[1] == doctest::Approx(-0.3).epsilon(1e-9));
    CHECK(m.intercept == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(m.residual_variance < 1e-12);
}

TEST_CASE("a long noisy series recovers the coefficient approximately") {
    Rng rng(31);
    std::vector<double> x = {0.0};
    for (int t = 1; t < 10000; ++t) x.push_back(0.5 * x[t - 1] + 0.1 * rng.normal());
    const ARModel m = fit_ar(x, 1);
    CHECK(m.coeffs[0] > 0.45);
    CHECK(m.coeffs[0] < 0.55);
    CHECK(m.residual_variance > 0.008);
    CHECK(m.residual_variance < 0.012);
}

TEST_CASE("constant series falls back to a finite fit with zero residual") {
    const ARModel m = fit_ar(std::vector<double>(20, 3.0), 3);
    for (double c : m.coeffs) CHECK(std::isfinite(c));
    CHECK(std::isfinite(m.intercept));
    CHECK(m.residual_variance <= 1e-12);
}

TEST_CASE("series too short for the order is rejected") {
    CHECK_THROWS_AS(fit_ar({1, 2, 3, 4, 5, 6, 7}, 3), ValidationError);  // needs 2p+2 = 8
    CHECK_NOTHROW(fit_ar({1, 2, 3, 4, 5, 6, 7, 8}, 3));
    CHECK_THROWS_AS(fit_ar({1, 2, 3}, 0), ValidationError);
}

TEST_CASE("two tight clusters far apart score a silhouette near one") {
    const std::vector<std::vector<double>> pts = {{0.0}, {0.01}, {10.0}, {10.01}};
    const double ss = silhouette(pts, {0, 0, 1, 1});
    CHECK(ss > 0.99);
    CHECK(ss <= 1.0);
    CHECK(silhouette({{0.0}, {0.0}, {10.0}, {10.0}}, {0, 0, 1, 1}) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("identical points across classes score zero") {
    const std::vector<std::vector<double>> pts = {{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}};
    CHECK(silhouette(pts, {0, 0, 1, 1}) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("silhouette matches the pairwise oracle on random instances") {
    Rng rng(404);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 5 + static_cast<int>(rng.uniform_int(20));
        const int dims = 1 + static_cast<int>(rng.uniform_int(4));
        const int classes = 2 + static_cast<int>(rng.uniform_int(2));
        std::vector<std::vector<double>> pts;
        std::vector<int> labels;
        for (int i = 0; i < n; ++i) {
            std::vector<double> p;
            for (int d = 0; d < dims; ++d) p.push_back(rng.normal());
            pts.push_back(p);
            labels.push_back(static_cast<int>(rng.uniform_int(classes)));
        }
        // Guarantee at least two classes appear.
        labels[0] = 0;
        labels[1] = 1;
        const double got = silhouette(pts, labels);
        const double want = silhouette_oracle(pts, labels);
        CHECK(std::abs(got - want) <= 1e-12);
    }
}

TEST_CASE("silhouette requires two classes and consistent sizes") {
    CHECK_THROWS_AS(silhouette({{1.0}, {2.0}}, {0, 0}), ValidationError);
    CHECK_THROWS_AS(silhouette({{1.0}, {2.0}}, {0}), ValidationError);
    CHECK_THROWS_AS(silhouette({}, {}), ValidationError);
}

TEST_CASE("reward formula spot values") {
    const double denom = std::exp(2.0) - 1.0;
    CHECK(std::abs(reward_from_silhouette(1.0, 0.1 * 0.25) - (std::exp(2.0) / denom - 0.025)) < 1e-12);
    CHECK(std::abs(reward_from_silhouette(-1.0, 0.0) - (1.0 / denom)) < 1e-12);
    CHECK(std::abs(reward_from_silhouette(0.0, 0.1 * 0.5) - (std::exp(1.0) / denom - 0.05)) < 1e-12);
    CHECK(reward_from_silhouette(1.0, 0.025) == doctest::Approx(1.131518).epsilon(1e-6));
    CHECK(reward_from_silhouette(-1.0, 0.0) == doctest::Approx(0.156518).epsilon(1e-6));
    CHECK(reward_from_silhouette(0.0, 0.05) == doctest::Approx(0.375459).epsilon(1e-6));
}

TEST_CASE("reward grows with separability and rewards late gains more") {
    double prev = -1e9;
    for (double ss = -1.0; ss <= 1.0; ss += 0.1) {
        const double r = reward_from_silhouette(ss, 0.0);
        CHECK(r > prev);
        prev = r;
    }
    // Convexity: the same silhouette gain pays more near the top.
    const double low_gain = reward_from_silhouette(0.2, 0.0) - reward_from_silhouette(0.1, 0.0);
    const double high_gain = reward_from_silhouette(1.0, 0.0) - reward_from_silhouette(0.9, 0.0);
    CHECK(high_gain > low_gain);
    // With no length penalty the reward stays within the formula's range.
    CHECK(reward_from_silhouette(-1.0, 0.0) > 0.0);
    CHECK(reward_from_silhouette(1.0, 0.0) < 1.16);
}

TEST_CASE("engine evaluation is deterministic and matches the one shot form") {
    const auto samples = two_class_samples(40, 64, 9);
    RewardConfig cfg;
    cfg.p = 3;
    cfg.beta = 0.1;
    cfg.K_prime = 64;
    cfg.subsample = 32;
    cfg.seed = 5;
    RewardEngine engine(samples, cfg);
    const env::FocalState st{10, 40};
    const RewardBreakdown a = engine.evaluate(st);
    const RewardBreakdown b = engine.evaluate(st);
    CHECK(a.reward == b.reward);
    CHECK(a.ss == b.ss);
    const RewardBreakdown c = state_reward(samples, st, cfg);
    CHECK(c.reward == a.reward);
    CHECK(engine.evaluations() == 2);
}

TEST_CASE("serial and parallel execution agree bitwise") {
    const auto samples = two_class_samples(60, 96, 17);
    RewardConfig cfg;
    cfg.K_prime = 96;
    cfg.subsample = 64;
    cfg.seed = 3;
    RewardEngine serial(samples, cfg, ExecMode::Serial);
    RewardEngine parallel(samples, cfg, ExecMode::Parallel);
    CHECK(serial.subsample_indices() == parallel.subsample_indices());
    for (const env::FocalState st : {env::FocalState{0, 96}, {5, 25}, {40, 96}, {12, 60}}) {
        const RewardBreakdown s = serial.evaluate(st);
        const RewardBreakdown p = parallel.evaluate(st);
        CHECK(s.ss == p.ss);
        CHECK(s.reward == p.reward);
        CHECK(s.length_penalty == p.length_penalty);
    }
}

TEST_CASE("the subsample is stratified, capped and fixed per seed") {
    const auto samples = two_class_samples(50, 32, 21);  // 100 samples
    RewardConfig cfg;
    cfg.K_prime = 32;
    cfg.subsample = 20;
    cfg.seed = 11;
    RewardEngine engine(samples, cfg);
    const std::vector<int>& picked = engine.subsample_indices();
    REQUIRE(static_cast<int>(picked.size()) == 20);
    CHECK(std::is_sorted(picked.begin(), picked.end()));
    std::map<int, int> per_class;
    for (int i : picked) ++per_class[samples[i].label];
    CHECK(per_class[0] == 10);
    CHECK(per_class[1] == 10);

    RewardEngine again(samples, cfg);
    CHECK(again.subsample_indices() == picked);
    RewardConfig other = cfg;
    other.seed = 12;
    RewardEngine var(samples, other);
    CHECK(var.subsample_indices() != picked);

    // Cap above the population keeps everything.
    RewardConfig all = cfg;
    all.subsample = 1000;
    RewardEngine full(samples, all);
    CHECK(static_cast<int>(full.subsample_indices().size()) == 100);
}

TEST_CASE("uneven classes still give every class representation") {
    auto samples = two_class_samples(3, 32, 2);  // 3 per class
    const auto more = two_class_samples(60, 32, 4);
    for (const auto& e : more)
        if (e.label == 0) samples.push_back(e);
    RewardConfig cfg;
    cfg.K_prime = 32;
    cfg.subsample = 10;
    cfg.seed = 1;
    RewardEngine engine(samples, cfg);
    std::map<int, int> per_class;
    for (int i : engine.subsample_indices()) ++per_class[samples[i].label];
    CHECK(per_class[0] + per_class[1] == 10);
    CHECK(per_class[1] >= 1);
    CHECK(per_class[0] > per_class[1]);
}

TEST_CASE("engine rejects invalid windows and degenerate data") {
    const auto samples = two_class_samples(10, 32, 1);
    RewardConfig cfg;
    cfg.K_prime = 32;
    cfg.seed = 1;
    RewardEngine engine(samples, cfg);
    CHECK_THROWS_AS(engine.evaluate({-1, 10}), ValidationError);
    CHECK_THROWS_AS(engine.evaluate({0, 33}), ValidationError);
    CHECK_THROWS_AS(engine.evaluate({0, 7}), ValidationError);  // < 2p+2 = 8
    CHECK_NOTHROW(engine.evaluate({0, 8}));

    std::vector<ExpandedSample> one_class;
    for (int i = 0; i < 8; ++i) {
        ExpandedSample e;
        e.label = 0;
        e.features.assign(32, static_cast<double>(i));
        one_class.push_back(e);
    }
    CHECK_THROWS_AS(RewardEngine(one_class, cfg), ValidationError);
}

TEST_CASE("a class separating window outranks a noise window") {
    // Structure lives in [0, 32); dims [32, 64) are pure noise for both classes.
    Rng rng(55);
    std::vector<ExpandedSample> samples;
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < 30; ++i) {
            ExpandedSample e;
            e.label = c;
            e.features.assign(64, 0.0);
            const double phi = c == 0 ? 0.9 : -0.9;
            e.features[0] = rng.normal();
            for (int j = 1; j < 32; ++j) e.features[j] = phi * e.features[j - 1] + 0.1 * rng.normal();
            for (int j = 32; j < 64; ++j) e.features[j] = rng.normal();
            samples.push_back(std::move(e));
        }
    RewardConfig cfg;
    cfg.K_prime = 64;
    cfg.subsample = 40;
    cfg.seed = 8;
    RewardEngine engine(samples, cfg);
    const RewardBreakdown good = engine.evaluate({0, 32});
    const RewardBreakdown bad = engine.evaluate({32, 64});
    CHECK(good.ss > bad.ss + 0.3);
    CHECK(good.reward > bad.reward);
}
