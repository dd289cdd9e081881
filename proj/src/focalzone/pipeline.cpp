#include "focalzone/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "focalzone/classifier.hpp"

namespace focalzone {

namespace {

// Rethrows stage failures with the stage name prepended, preserving the type.
template <typename Fn>
decltype(auto) with_stage(const std::string& stage, Fn&& fn) {
    try {
        return fn();
    } catch (const ValidationError& e) {
        throw ValidationError(stage + ": " + e.what());
    } catch (const FormatError& e) {
        throw FormatError(stage + ": " + e.what());
    } catch (const ParseError& e) {
        throw ParseError(stage + ": " + e.what());
    }
}

std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string g6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

Dataset load_dataset(const RunConfig& cfg) {
    if (cfg.has_synthetic) return generate_synthetic(cfg.synthetic, derive_seed(cfg.seed, "datagen"));
    return load_csv(cfg.csv_path);
}

struct Prepared {
    Dataset train;
    Dataset test;
    RSMap map;
    std::vector<ExpandedSample> train_x;
    std::vector<ExpandedSample> test_x;
};

Prepared prepare(const RunConfig& cfg, const Dataset& d) {
    Prepared p;
    std::tie(p.train, p.test) =
        with_stage("split", [&] { return split(d, cfg.train_fraction, derive_seed(cfg.seed, "split")); });
    with_stage("expand", [&] {
        p.map = make_rs_map(d.K, cfg.K_prime, derive_seed(cfg.seed, "rsmap"), cfg.rs_mode);
        p.train_x = apply_rs_all(p.train.samples, p.map);
        p.test_x = apply_rs_all(p.test.samples, p.map);
    });
    return p;
}

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

std::string svg_confusion(const ConfusionMatrix& cm, const std::vector<long long>& label_values) {
    const int C = cm.num_classes();
    const int cell = 56, margin = 70;
    const int size = margin + C * cell + 20;
    long long maxc = 1;
    for (const auto& row : cm.counts)
        for (long long v : row) maxc = std::max(maxc, v);

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\">\n";
    s << "<text x=\"" << margin + C * cell / 2 << "\" y=\"18\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"13\">predicted</text>\n";
    s << "<text x=\"16\" y=\"" << margin + C * cell / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
      << "transform=\"rotate(-90 16 " << margin + C * cell / 2 << ")\">true</text>\n";
    for (int t = 0; t < C; ++t) {
        for (int q = 0; q < C; ++q) {
            const double frac = static_cast<double>(cm.counts[t][q]) / maxc;
            const int shade = 255 - static_cast<int>(std::lround(frac * 190.0));
            const int x = margin + q * cell, y = margin + t * cell;
            s << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
              << "\" fill=\"rgb(" << shade << "," << shade << ",255)\" stroke=\"#444\"/>\n";
            s << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 5
              << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
              << cm.counts[t][q] << "</text>\n";
        }
        s << "<text x=\"" << margin - 8 << "\" y=\"" << margin + t * cell + cell / 2 + 5
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" << label_values[t]
          << "</text>\n";
        s << "<text x=\"" << margin + t * cell + cell / 2 << "\" y=\"" << margin - 10
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << label_values[t]
          << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

std::string svg_roc(const RocReport& roc, const std::vector<long long>& label_values) {
    const int plot = 400, margin = 50;
    const int w = plot + margin + 170, h = plot + 2 * margin;
    auto px = [&](double f) { return margin + f * plot; };
    auto py = [&](double t) { return margin + plot - t * plot; };

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
    s << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << plot << "\" height=\"" << plot
      << "\" fill=\"white\" stroke=\"#444\"/>\n";
    s << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\"" << py(1)
      << "\" stroke=\"#bbb\" stroke-dasharray=\"4 3\"/>\n";
    s << "<text x=\"" << margin + plot / 2 << "\" y=\"" << h - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">false positive rate</text>\n";
    s << "<text x=\"16\" y=\"" << margin + plot / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 16 "
      << margin + plot / 2 << ")\">true positive rate</text>\n";
    int row = 0;
    for (const RocCurve& c : roc.curves) {
        if (!c.valid) continue;
        const char* color = kPalette[row % kPaletteSize];
        s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < c.fpr.size(); ++i)
            s << g6(px(c.fpr[i])) << "," << g6(py(c.tpr[i])) << " ";
        s << "\"/>\n";
        s << "<text x=\"" << margin + plot + 12 << "\" y=\"" << margin + 16 + 18 * row
          << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << color << "\">class "
          << label_values[c.cls] << " (AUC=" << g6(c.auc) << ")</text>\n";
        ++row;
    }
    s << "</svg>\n";
    return s.str();
}

std::string svg_scatter(const std::vector<StudyRow>& rows) {
    const int plot = 400, margin = 60;
    const int w = plot + 2 * margin, h = plot + 2 * margin;
    double xmin = rows[0].reward, xmax = rows[0].reward;
    double ymin = rows[0].accuracy, ymax = rows[0].accuracy;
    for (const StudyRow& r : rows) {
        xmin = std::min(xmin, r.reward);
        xmax = std::max(xmax, r.reward);
        ymin = std::min(ymin, r.accuracy);
        ymax = std::max(ymax, r.accuracy);
    }
    const double xpad = (xmax - xmin) > 0 ? 0.05 * (xmax - xmin) : 0.5;
    const double ypad = (ymax - ymin) > 0 ? 0.05 * (ymax - ymin) : 0.05;
    xmin -= xpad, xmax += xpad, ymin -= ypad, ymax += ypad;
    auto px = [&](double v) { return margin + (v - xmin) / (xmax - xmin) * plot; };
    auto py = [&](double v) { return margin + plot - (v - ymin) / (ymax - ymin) * plot; };

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
    s << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << plot << "\" height=\"" << plot
      << "\" fill=\"white\" stroke=\"#444\"/>\n";
    s << "<text x=\"" << margin + plot / 2 << "\" y=\"" << h - 16
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">surrogate reward</text>\n";
    s << "<text x=\"18\" y=\"" << margin + plot / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 "
      << margin + plot / 2 << ")\">classifier accuracy</text>\n";
    s << "<text x=\"" << margin << "\" y=\"" << h - 40
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << g6(xmin) << "</text>\n";
    s << "<text x=\"" << margin + plot << "\" y=\"" << h - 40
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << g6(xmax) << "</text>\n";
    s << "<text x=\"" << margin - 6 << "\" y=\"" << margin + plot
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << g6(ymin) << "</text>\n";
    s << "<text x=\"" << margin - 6 << "\" y=\"" << margin + 10
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << g6(ymax) << "</text>\n";
    for (const StudyRow& r : rows)
        s << "<circle cx=\"" << g6(px(r.reward)) << "\" cy=\"" << g6(py(r.accuracy))
          << "\" r=\"4\" fill=\"#1f77b4\" fill-opacity=\"0.8\"/>\n";
    s << "</svg>\n";
    return s.str();
}

std::string join_path(const std::string& dir, const std::string& name) {
    if (dir.empty()) return name;
    return dir.back() == '/' ? dir + name : dir + "/" + name;
}

}  // namespace

void cmd_gen_data(const SyntheticSpec& spec, std::uint64_t seed, const std::string& out_path) {
    with_stage("generate", [&] {
        const Dataset d = generate_synthetic(spec, derive_seed(seed, "datagen"));
        save_csv(d, out_path);
    });
}

ModelArtifact cmd_train(RunConfig cfg, TrainSummary* out_summary) {
    const Dataset d = with_stage("load", [&] {
        Dataset ds = load_dataset(cfg);
        resolve_run_config(cfg, ds.K);
        validate_run_config(cfg, ds.K);
        if (cfg.out_dir.empty()) throw ValidationError("no output directory given");
        return ds;
    });
    log_line(LogLevel::Info, "loaded " + std::to_string(d.I()) + " samples, K=" + std::to_string(d.K) +
                                 ", classes=" + std::to_string(d.num_classes));

    Prepared p = prepare(cfg, d);
    log_line(LogLevel::Info, "split " + std::to_string(p.train.I()) + "/" + std::to_string(p.test.I()) +
                                 ", expanded to K'=" + std::to_string(cfg.K_prime));

    RewardEngine engine(p.train_x, cfg.reward, cfg.exec_mode);
    const AgentResult agent = with_stage("agent", [&] {
        return train_agent(
            cfg.envp, [&](const env::FocalState& s) { return engine.evaluate(s); }, cfg.agent,
            derive_seed(cfg.seed, "agent"));
    });
    log_line(LogLevel::Info, "window search done: best [" + std::to_string(agent.best_state.start_idx) +
                                 ", " + std::to_string(agent.best_state.end_idx) + ") reward " +
                                 g6(agent.best_reward) + " after " + std::to_string(engine.evaluations()) +
                                 " evaluations");

    const WASLSTMModel model = with_stage("classifier", [&] {
        return train_classifier(p.train_x, agent.best_state, cfg.classifier, d.num_classes,
                                derive_seed(cfg.seed, "classifier"));
    });

    TrainSummary summary;
    with_stage("report", [&] {
        summary.reward_evaluations = engine.evaluations();
        summary.best_state = agent.best_state;
        summary.best_reward = agent.best_reward;
        summary.best_ss = agent.best_ss;
        summary.train_accuracy = accuracy(model, p.train_x);
        summary.test_accuracy = accuracy(model, p.test_x);
        summary.num_train = p.train.I();
        summary.num_test = p.test.I();
        summary.K = d.K;
        summary.K_prime = cfg.K_prime;
        summary.num_classes = d.num_classes;
    });
    log_line(LogLevel::Info, "train accuracy " + g6(summary.train_accuracy) + ", test accuracy " +
                                 g6(summary.test_accuracy));

    ModelArtifact artifact;
    artifact.config = cfg;
    artifact.K = d.K;
    artifact.num_classes = d.num_classes;
    artifact.label_values = d.label_values;
    artifact.rs_map = p.map;
    artifact.best_state = agent.best_state;
    artifact.best_reward = agent.best_reward;
    artifact.best_ss = agent.best_ss;
    artifact.model = model;

    with_stage("write", [&] {
        save_csv(p.train, join_path(cfg.out_dir, "train.csv"));
        save_csv(p.test, join_path(cfg.out_dir, "test.csv"));

        std::ostringstream hist;
        hist << "step,start,end,ss,reward\n";
        for (const HistoryRow& r : agent.history)
            hist << r.step << "," << r.state.start_idx << "," << r.state.end_idx << "," << g17(r.ss) << ","
                 << g17(r.reward) << "\n";
        write_text_atomic(join_path(cfg.out_dir, "history.csv"), hist.str());

        json js;
        js["reward_evaluations"] = summary.reward_evaluations;
        js["best"] = json{{"start", summary.best_state.start_idx},
                          {"end", summary.best_state.end_idx},
                          {"reward", summary.best_reward},
                          {"ss", summary.best_ss}};
        js["train_accuracy"] = summary.train_accuracy;
        js["test_accuracy"] = summary.test_accuracy;
        js["num_train"] = summary.num_train;
        js["num_test"] = summary.num_test;
        js["K"] = summary.K;
        js["K_prime"] = summary.K_prime;
        js["num_classes"] = summary.num_classes;
        write_json_atomic(join_path(cfg.out_dir, "summary.json"), js);

        save_artifact(artifact, join_path(cfg.out_dir, "artifact.json"));
    });

    if (out_summary) *out_summary = summary;
    return artifact;
}

namespace {

// Loads the CSV, checks it against the artifact's schema, and returns the
// expanded samples with labels remapped to the artifact's dense indices.
std::vector<ExpandedSample> load_for_model(const ModelArtifact& a, const std::string& csv_path) {
    Dataset d = load_csv(csv_path);
    if (d.K != a.K)
        throw ValidationError("data has K=" + std::to_string(d.K) + ", the model expects K=" +
                              std::to_string(a.K));
    std::vector<int> remap(d.label_values.size());
    for (std::size_t i = 0; i < d.label_values.size(); ++i) {
        const auto it = std::find(a.label_values.begin(), a.label_values.end(), d.label_values[i]);
        if (it == a.label_values.end())
            throw ValidationError("label " + std::to_string(d.label_values[i]) +
                                  " missing from the model's label mapping");
        remap[i] = static_cast<int>(it - a.label_values.begin());
    }
    for (Sample& s : d.samples) s.label = remap[s.label];
    return apply_rs_all(d.samples, a.rs_map);
}

}  // namespace

EvalResult cmd_eval(const std::string& artifact_path, const std::string& csv_path,
                    const std::string& out_dir, bool plots) {
    const ModelArtifact a = with_stage("load", [&] {
        if (out_dir.empty()) throw ValidationError("no output directory given");
        return load_artifact(artifact_path);
    });
    const std::vector<ExpandedSample> samples =
        with_stage("data", [&] { return load_for_model(a, csv_path); });

    EvalResult res;
    with_stage("evaluate", [&] {
        const nn::Mat probs = predict_probs(a.model, samples);
        std::vector<std::pair<int, int>> pairs(samples.size());
        std::vector<std::vector<double>> scores(samples.size());
        std::vector<int> labels(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) {
            int best = 0;
            for (int c = 1; c < a.num_classes; ++c)
                if (probs(c, static_cast<Eigen::Index>(i)) > probs(best, static_cast<Eigen::Index>(i)))
                    best = c;
            pairs[i] = {samples[i].label, best};
            labels[i] = samples[i].label;
            scores[i].assign(probs.col(static_cast<Eigen::Index>(i)).data(),
                             probs.col(static_cast<Eigen::Index>(i)).data() + a.num_classes);
        }
        res.report = classification_report(pairs, a.num_classes);
        res.roc = roc_auc(scores, labels, a.num_classes);
    });

    with_stage("write", [&] {
        json pm = json::array();
        for (int c = 0; c < a.num_classes; ++c) {
            json e;
            e["label"] = a.label_values[c];
            e["precision"] = res.report.precision[c];
            e["recall"] = res.report.recall[c];
            e["f1"] = res.report.f1[c];
            if (res.roc.curves[c].valid)
                e["auc"] = res.roc.curves[c].auc;
            else
                e["auc"] = nullptr;
            pm.push_back(e);
        }
        json jm;
        jm["accuracy"] = res.report.accuracy;
        jm["precision_macro"] = res.report.precision_macro;
        jm["recall_macro"] = res.report.recall_macro;
        jm["f1_macro"] = res.report.f1_macro;
        jm["auc_macro"] = res.roc.auc_macro;
        jm["per_class"] = pm;
        write_json_atomic(join_path(out_dir, "metrics.json"), jm);

        std::ostringstream cm;
        cm << "true_label";
        for (int c = 0; c < a.num_classes; ++c) cm << ",pred_" << a.label_values[c];
        cm << "\n";
        for (int t = 0; t < a.num_classes; ++t) {
            cm << a.label_values[t];
            for (int q = 0; q < a.num_classes; ++q) cm << "," << res.report.confusion.counts[t][q];
            cm << "\n";
        }
        write_text_atomic(join_path(out_dir, "confusion.csv"), cm.str());

        std::ostringstream rc;
        rc << "class,fpr,tpr\n";
        for (const RocCurve& c : res.roc.curves) {
            if (!c.valid) continue;
            for (std::size_t i = 0; i < c.fpr.size(); ++i)
                rc << a.label_values[c.cls] << "," << g17(c.fpr[i]) << "," << g17(c.tpr[i]) << "\n";
        }
        write_text_atomic(join_path(out_dir, "roc.csv"), rc.str());

        if (plots) {
            write_text_atomic(join_path(out_dir, "confusion.svg"),
                              svg_confusion(res.report.confusion, a.label_values));
            write_text_atomic(join_path(out_dir, "roc.svg"), svg_roc(res.roc, a.label_values));
        }
    });
    return res;
}

void cmd_predict(const std::string& artifact_path, const std::string& csv_path,
                 const std::string& out_dir) {
    const ModelArtifact a = with_stage("load", [&] {
        if (out_dir.empty()) throw ValidationError("no output directory given");
        return load_artifact(artifact_path);
    });
    const std::vector<ExpandedSample> samples =
        with_stage("data", [&] { return load_for_model(a, csv_path); });

    with_stage("predict", [&] {
        const nn::Mat probs = predict_probs(a.model, samples);
        std::ostringstream out;
        out << "sample_index,true_label,predicted_label";
        for (int c = 0; c < a.num_classes; ++c) out << ",p_" << a.label_values[c];
        out << "\n";
        for (std::size_t i = 0; i < samples.size(); ++i) {
            int best = 0;
            for (int c = 1; c < a.num_classes; ++c)
                if (probs(c, static_cast<Eigen::Index>(i)) > probs(best, static_cast<Eigen::Index>(i)))
                    best = c;
            out << i << "," << a.label_values[samples[i].label] << "," << a.label_values[best];
            for (int c = 0; c < a.num_classes; ++c)
                out << "," << g17(probs(c, static_cast<Eigen::Index>(i)));
            out << "\n";
        }
        write_text_atomic(join_path(out_dir, "predictions.csv"), out.str());
    });
}

StudyReport cmd_reward_study(RunConfig cfg, int num_states, bool plots) {
    if (num_states < 3) throw ValidationError("reward-study: need at least 3 states");
    const Dataset d = with_stage("load", [&] {
        Dataset ds = load_dataset(cfg);
        resolve_run_config(cfg, ds.K);
        validate_run_config(cfg, ds.K);
        if (cfg.out_dir.empty()) throw ValidationError("no output directory given");
        return ds;
    });
    Prepared p = prepare(cfg, d);
    RewardEngine engine(p.train_x, cfg.reward, cfg.exec_mode);

    StudyReport rep;
    with_stage("study", [&] {
        Rng rng(derive_seed(cfg.seed, "study"));
        const int L_min = cfg.envp.L_min, K_prime = cfg.K_prime;
        const ClassifierConfig probe = probe_config(cfg.classifier);
        for (int i = 0; i < num_states; ++i) {
            // Lengths spread evenly over [L_min, K']; positions seeded.
            const int len =
                L_min + static_cast<int>(std::lround(static_cast<double>(i) * (K_prime - L_min) /
                                                     (num_states - 1)));
            const int start = static_cast<int>(rng.uniform_int(K_prime - len + 1));
            StudyRow row;
            row.state = {start, start + len};

            auto t0 = std::chrono::steady_clock::now();
            const RewardBreakdown rb = engine.evaluate(row.state);
            row.time_g_ms = ms_since(t0);
            row.ss = rb.ss;
            row.reward = rb.reward;

            t0 = std::chrono::steady_clock::now();
            row.accuracy = evaluate_zone_accuracy(p.train_x, p.test_x, row.state, probe, d.num_classes,
                                                  derive_seed(cfg.seed, "study-probe-" + std::to_string(i)));
            row.time_f_ms = ms_since(t0);
            rep.rows.push_back(row);
            log_line(LogLevel::Info, "state [" + std::to_string(row.state.start_idx) + ", " +
                                         std::to_string(row.state.end_idx) + "): reward " + g6(row.reward) +
                                         ", accuracy " + g6(row.accuracy));
        }
        std::vector<double> g, f;
        for (const StudyRow& r : rep.rows) {
            g.push_back(r.reward);
            f.push_back(r.accuracy);
            rep.time_g_total_ms += r.time_g_ms;
            rep.time_f_total_ms += r.time_f_ms;
        }
        try {
            rep.correlation = pearson(g, f);
        } catch (const ValidationError& e) {
            // Constant rewards or accuracies leave the correlation undefined;
            // report zero rather than aborting the whole study.
            log_line(LogLevel::Info, std::string("correlation undefined (") + e.what() + "), reporting 0");
            rep.correlation.r = 0.0;
            rep.correlation.n = static_cast<int>(rep.rows.size());
            rep.correlation.t_stat = 0.0;
            rep.correlation.p_two_sided = 1.0;
        }
        rep.speedup = rep.time_f_total_ms / rep.time_g_total_ms;
    });

    with_stage("write", [&] {
        std::ostringstream out;
        out << "start,end,ss,reward,accuracy,time_g_ms,time_f_ms\n";
        for (const StudyRow& r : rep.rows)
            out << r.state.start_idx << "," << r.state.end_idx << "," << g17(r.ss) << "," << g17(r.reward)
                << "," << g17(r.accuracy) << "," << g17(r.time_g_ms) << "," << g17(r.time_f_ms) << "\n";
        write_text_atomic(join_path(cfg.out_dir, "study.csv"), out.str());

        json jc;
        jc["r"] = rep.correlation.r;
        jc["n"] = rep.correlation.n;
        jc["t_stat"] = rep.correlation.t_stat;
        jc["p_two_sided"] = rep.correlation.p_two_sided;
        jc["speedup"] = rep.speedup;
        jc["time_g_total_ms"] = rep.time_g_total_ms;
        jc["time_f_total_ms"] = rep.time_f_total_ms;
        write_json_atomic(join_path(cfg.out_dir, "correlation.json"), jc);

        if (plots) write_text_atomic(join_path(cfg.out_dir, "study.svg"), svg_scatter(rep.rows));
    });
    return rep;
}

}  // namespace focalzone
