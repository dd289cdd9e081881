#include <cmath>
#include <vector>

#include "doctest.h"
#include "focalzone/classifier.hpp"
#include "focalzone/common.hpp"

using namespace focalzone;

namespace {

// Two classes separated by the sign of the window slice; dims outside the
// window are pure noise.
std::vector<ExpandedSample> separable_toy(int per_class, int K_prime, const env::FocalState& zone,
                                          std::uint64_t seed) {
    Rng rng(seed);
    std::vector<ExpandedSample> out;
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < per_class; ++i) {
            ExpandedSample e;
            e.label = c;
            e.features.assign(K_prime, 0.0);
            for (int j = 0; j < K_prime; ++j) e.features[j] = rng.normal();
            const double shift = c == 0 ? 1.0 : -1.0;
            for (int j = zone.start_idx; j < zone.end_idx; ++j)
                e.features[j] = shift + 0.3 * rng.normal();
            out.push_back(std::move(e));
        }
    return out;
}

ClassifierConfig tiny_config() {
    ClassifierConfig cfg;
    cfg.hidden = 8;
    cfg.fc_layers = 1;
    cfg.fc_width = 8;
    cfg.batch = 8;
    cfg.iterations = 200;
    cfg.probe_iterations = 40;
    cfg.lr = 0.01;
    return cfg;
}

}  // namespace

TEST_CASE("a separable toy problem is learned to perfect training accuracy") {
    const env::FocalState zone{4, 16};
    const auto samples = separable_toy(20, 24, zone, 5);
    const WASLSTMModel m = train_classifier(samples, zone, tiny_config(), 2, 7);
    CHECK(accuracy(m, samples) == 1.0);
}

TEST_CASE("probabilities are normalized per sample") {
    const env::FocalState zone{2, 10};
    const auto samples = separable_toy(6, 16, zone, 9);
    ClassifierConfig cfg = tiny_config();
    cfg.iterations = 20;
    const WASLSTMModel m = train_classifier(samples, zone, cfg, 2, 3);
    const nn::Mat probs = predict_probs(m, samples);
    REQUIRE(probs.cols() == static_cast<Eigen::Index>(samples.size()));
    for (Eigen::Index j = 0; j < probs.cols(); ++j) {
        CHECK(std::abs(probs.col(j).sum() - 1.0) <= 1e-12);
        CHECK(probs.col(j).minCoeff() >= 0.0);
    }
    const auto [cls, pv] = predict(m, samples[0]);
    CHECK(cls >= 0);
    CHECK(cls < 2);
    CHECK(pv.size() == 2);
    CHECK(pv[cls] >= pv[1 - cls]);
}

TEST_CASE("the minimum two dimension window trains and predicts") {
    const env::FocalState zone{5, 7};
    const auto samples = separable_toy(10, 12, zone, 21);
    ClassifierConfig cfg = tiny_config();
    cfg.iterations = 60;
    const WASLSTMModel m = train_classifier(samples, zone, cfg, 2, 11);
    CHECK(accuracy(m, samples) > 0.6);
}

TEST_CASE("training is deterministic per seed") {
    const env::FocalState zone{3, 12};
    const auto samples = separable_toy(8, 20, zone, 31);
    ClassifierConfig cfg = tiny_config();
    cfg.iterations = 25;
    WASLSTMModel a = train_classifier(samples, zone, cfg, 2, 9);
    WASLSTMModel b = train_classifier(samples, zone, cfg, 2, 9);
    auto pa = a.params();
    auto pb = b.params();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i)
        CHECK((pa[i]->value - pb[i]->value).cwiseAbs().maxCoeff() == 0.0);
    WASLSTMModel c = train_classifier(samples, zone, cfg, 2, 10);
    bool differs = false;
    auto pc = c.params();
    for (std::size_t i = 0; i < pa.size(); ++i)
        if ((pa[i]->value - pc[i]->value).cwiseAbs().maxCoeff() > 0.0) differs = true;
    CHECK(differs);
}

TEST_CASE("an extreme penalty crushes the weights") {
    const env::FocalState zone{2, 12};
    const auto samples = separable_toy(10, 16, zone, 41);
    ClassifierConfig cfg = tiny_config();
    cfg.lambda = 1e6;
    auto weight_norm = [](WASLSTMModel& m) {
        double s = 0.0;
        for (nn::Tensor* t : m.params())
            if (t->is_weight) s += t->value.squaredNorm();
        return s;
    };
    cfg.iterations = 10;
    WASLSTMModel early = train_classifier(samples, zone, cfg, 2, 13);
    cfg.iterations = 60;
    WASLSTMModel mid = train_classifier(samples, zone, cfg, 2, 13);
    cfg.iterations = 300;
    WASLSTMModel late = train_classifier(samples, zone, cfg, 2, 13);
    const double w_early = weight_norm(early);
    const double w_mid = weight_norm(mid);
    const double w_late = weight_norm(late);
    CHECK(w_mid < w_early);
    CHECK(w_late < w_mid);
    // Adam leaves each weight oscillating within ~lr of zero, so the squared
    // norm lands near n_weights * lr^2 rather than at exactly zero.
    CHECK(w_late < 0.05 * w_early);
}

TEST_CASE("the training loss trends down on a learnable problem") {
    const env::FocalState zone{4, 16};
    const auto samples = separable_toy(20, 24, zone, 51);
    ClassifierConfig cfg = tiny_config();
    cfg.iterations = 150;
    std::vector<double> losses;
    train_classifier(samples, zone, cfg, 2, 17, &losses);
    REQUIRE(losses.size() == 150);
    auto window_mean = [&](int from, int to) {
        double s = 0.0;
        for (int i = from; i < to; ++i) s += losses[i];
        return s / (to - from);
    };
    const double first = window_mean(0, 50);
    const double second = window_mean(50, 100);
    const double third = window_mean(100, 150);
    CHECK(second <= first + 1e-6);
    CHECK(third <= second + 1e-6);
    CHECK(third < first);
}

TEST_CASE("predictions ignore everything outside the window") {
    const env::FocalState zone{6, 14};
    const auto samples = separable_toy(8, 20, zone, 61);
    ClassifierConfig cfg = tiny_config();
    cfg.iterations = 30;
    const WASLSTMModel m = train_classifier(samples, zone, cfg, 2, 19);

    ExpandedSample probe = samples[0];
    const nn::Mat before = predict_probs(m, {probe});
    for (int j = 0; j < 20; ++j)
        if (j < zone.start_idx || j >= zone.end_idx) probe.features[j] = 1e6 * (j + 1);
    const nn::Mat after = predict_probs(m, {probe});
    CHECK((before - after).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("a tiny model is reproduced by a by hand forward pass") {
    // One layer, hidden size 1, no fc stack: every intermediate quantity can
    // be recomputed with scalar arithmetic.
    const env::FocalState zone{0, 3};
    std::vector<ExpandedSample> samples;
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < 4; ++i) {
            ExpandedSample e;
            e.label = c;
            e.features = {0.1 * (i + 1) * (c ? -1.0 : 1.0), 0.2 * (i + 1), 0.3 - 0.1 * c, 9.9};
            samples.push_back(e);
        }
    ClassifierConfig cfg;
    cfg.lstm_layers = 1;
    cfg.hidden = 1;
    cfg.fc_layers = 0;
    cfg.fc_width = 1;
    cfg.batch = 4;
    cfg.iterations = 3;
    const WASLSTMModel m = train_classifier(samples, zone, cfg, 2, 23);

    const ExpandedSample& s = samples[2];
    const nn::Mat got = predict_probs(m, {s});

    // Scalar replay of the forward pass.
    const double Wxi = m.cells[0].W.value(0, 0), Whi = m.cells[0].W.value(0, 1);
    const double Wxf = m.cells[0].W.value(1, 0), Whf = m.cells[0].W.value(1, 1);
    const double Wxo = m.cells[0].W.value(2, 0), Who = m.cells[0].W.value(2, 1);
    const double Wxg = m.cells[0].W.value(3, 0), Whg = m.cells[0].W.value(3, 1);
    const double bi = m.cells[0].b.value(0, 0), bf = m.cells[0].b.value(1, 0);
    const double bo = m.cells[0].b.value(2, 0), bg = m.cells[0].b.value(3, 0);
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    double h = 0.0, c = 0.0, h_prev_pos = 0.0;
    for (int t = 0; t < 3; ++t) {
        const double x = (s.features[t] - m.norm_mean[t]) / m.norm_std[t];
        const double i_g = sig(Wxi * x + Whi * h + bi);
        const double f_g = sig(Wxf * x + Whf * h + bf + cfg.forget_bias);
        const double o_g = sig(Wxo * x + Who * h + bo);
        const double g_g = std::tanh(Wxg * x + Whg * h + bg);
        c = f_g * c + i_g * g_g;
        const double h_new = o_g * std::tanh(c);
        if (t == 1) h_prev_pos = h_new;
        h = h_new;
    }
    const double avg = 0.5 * (h_prev_pos + h);
    const double z0 = m.out.W.value(0, 0) * avg + m.out.b.value(0, 0);
    const double z1 = m.out.W.value(1, 0) * avg + m.out.b.value(1, 0);
    const double mx = std::max(z0, z1);
    const double e0 = std::exp(z0 - mx), e1 = std::exp(z1 - mx);
    CHECK(got(0, 0) == doctest::Approx(e0 / (e0 + e1)).epsilon(1e-12));
    CHECK(got(1, 0) == doctest::Approx(e1 / (e0 + e1)).epsilon(1e-12));
}

TEST_CASE("the full model passes a gradient check") {
    const env::FocalState zone{1, 13};
    std::vector<ExpandedSample> samples;
    Rng rng(71);
    for (int c = 0; c < 2; ++c) {
        ExpandedSample e;
        e.label = c;
        e.features.assign(16, 0.0);
        for (double& v : e.features) v = rng.normal();
        samples.push_back(e);
    }
    ClassifierConfig cfg;
    cfg.hidden = 5;
    cfg.fc_layers = 2;
    cfg.fc_width = 5;
    cfg.batch = 2;
    cfg.iterations = 1;
    cfg.lambda = 0.01;
    WASLSTMModel m = train_classifier(samples, zone, cfg, 2, 29);

    auto loss_fn = [&]() { return classifier_loss(m, samples, false); };
    auto grad_fn = [&]() { classifier_loss(m, samples, true); };
    const nn::GradCheckReport rep = nn::grad_check(loss_fn, grad_fn, m.params(), 1e-4, 300, rng);
    CHECK(rep.pass);
    CHECK(rep.max_rel_err < 1e-4);
    CHECK(rep.checked == 300);
}

TEST_CASE("training rejects degenerate inputs") {
    const env::FocalState zone{0, 8};
    auto samples = separable_toy(5, 12, zone, 81);
    const ClassifierConfig cfg = tiny_config();
    SUBCASE("single class") {
        std::vector<ExpandedSample> one;
        for (const auto& e : samples)
            if (e.label == 0) one.push_back(e);
        CHECK_THROWS_AS(train_classifier(one, zone, cfg, 2, 1), ValidationError);
    }
    SUBCASE("window outside the feature space") {
        CHECK_THROWS_AS(train_classifier(samples, {0, 13}, cfg, 2, 1), ValidationError);
        CHECK_THROWS_AS(train_classifier(samples, {-1, 8}, cfg, 2, 1), ValidationError);
    }
    SUBCASE("window too short") {
        CHECK_THROWS_AS(train_classifier(samples, {3, 4}, cfg, 2, 1), ValidationError);
    }
    SUBCASE("empty training set") {
        CHECK_THROWS_AS(train_classifier({}, zone, cfg, 2, 1), ValidationError);
    }
    SUBCASE("label outside range") {
        samples[0].label = 7;
        CHECK_THROWS_AS(train_classifier(samples, zone, cfg, 2, 1), ValidationError);
    }
    SUBCASE("mixed dimensions at prediction") {
        const WASLSTMModel m = train_classifier(samples, zone, cfg, 2, 1);
        ExpandedSample bad;
        bad.label = 0;
        bad.features.assign(5, 0.0);
        CHECK_THROWS_AS(predict_probs(m, {bad}), ValidationError);
    }
}

TEST_CASE("a window over the informative dims beats a window over noise") {
    const env::FocalState good{4, 14};
    const auto samples = separable_toy(15, 28, good, 91);
    std::vector<ExpandedSample> train(samples.begin(), samples.begin() + 20);
    std::vector<ExpandedSample> test(samples.begin() + 20, samples.end());
    // Deal classes evenly between the halves.
    train.clear();
    test.clear();
    for (std::size_t i = 0; i < samples.size(); ++i)
        (i % 3 == 0 ? test : train).push_back(samples[i]);
    ClassifierConfig cfg = tiny_config();
    cfg.iterations = 120;
    const double on_band = evaluate_zone_accuracy(train, test, good, cfg, 2, 33);
    const double off_band = evaluate_zone_accuracy(train, test, {16, 26}, cfg, 2, 33);
    CHECK(on_band > off_band);
    CHECK(on_band > 0.9);
}

TEST_CASE("probe configuration only reduces the iteration budget") {
    ClassifierConfig cfg = tiny_config();
    const ClassifierConfig probe = probe_config(cfg);
    CHECK(probe.iterations == cfg.probe_iterations);
    CHECK(probe.hidden == cfg.hidden);
    CHECK(probe.lr == cfg.lr);
}

TEST_CASE("classifier configuration is validated") {
    ClassifierConfig cfg = tiny_config();
    CHECK_NOTHROW(validate_classifier_config(cfg));
    ClassifierConfig bad = cfg;
    bad.lstm_layers = 0;
    CHECK_THROWS_AS(validate_classifier_config(bad), ValidationError);
    bad = cfg;
    bad.hidden = 0;
    CHECK_THROWS_AS(validate_classifier_config(bad), ValidationError);
    bad = cfg;
    bad.lr = 0.0;
    CHECK_THROWS_AS(validate_classifier_config(bad), ValidationError);
    bad = cfg;
    bad.lambda = -1.0;
    CHECK_THROWS_AS(validate_classifier_config(bad), ValidationError);
    bad = cfg;
    bad.batch = 0;
    CHECK_THROWS_AS(validate_classifier_config(bad), ValidationError);
    bad = cfg;
    bad.iterations = 0;
    CHECK_THROWS_AS(validate_classifier_config(bad), ValidationError);
}
