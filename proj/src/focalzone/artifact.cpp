#include "focalzone/artifact.hpp"

#include <filesystem>
#include <fstream>
#include <set>

namespace focalzone {

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& ctx) {
    if (!j.is_object()) throw ParseError("config: " + ctx + " must be an object");
    for (const auto& kv : j.items())
        if (!allowed.count(kv.key()))
            throw ParseError("config: unknown key '" + kv.key() + "' in " + ctx);
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("config: bad value for '" + key + "': " + e.what());
    }
}

json tensor_to_json(const nn::Tensor& t) {
    // data is the raw column-major layout.
    json j;
    j["name"] = t.name;
    j["rows"] = t.value.rows();
    j["cols"] = t.value.cols();
    j["data"] = std::vector<double>(t.value.data(), t.value.data() + t.value.size());
    return j;
}

void tensor_from_json(const json& j, nn::Tensor& t) {
    const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
    const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
    const std::vector<double> data = j.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw FormatError("artifact: tensor '" + j.value("name", std::string("?")) + "' data length mismatch");
    if (rows != t.value.rows() || cols != t.value.cols())
        throw FormatError("artifact: tensor '" + j.value("name", std::string("?")) + "' shape mismatch");
    std::copy(data.begin(), data.end(), t.value.data());
}

}  // namespace

RunConfig parse_run_config(const json& j) {
    check_keys(j, {"dataset", "seed", "K_prime", "initial_len", "rs_mode", "env", "reward", "agent",
                   "classifier", "train_fraction", "exec_mode", "out_dir"},
               "top level");
    RunConfig cfg;

    if (!j.contains("dataset")) throw ParseError("config: missing 'dataset'");
    const json& ds = j.at("dataset");
    check_keys(ds, {"csv", "synthetic"}, "dataset");
    if (ds.contains("csv") == ds.contains("synthetic"))
        throw ParseError("config: dataset needs exactly one of 'csv' or 'synthetic'");
    if (ds.contains("csv")) {
        cfg.csv_path = ds.at("csv").get<std::string>();
    } else {
        cfg.has_synthetic = true;
        const json& sy = ds.at("synthetic");
        check_keys(sy,
                   {"K", "num_classes", "samples_per_class", "band_start", "band_end", "ar_order",
                    "coeffs", "noise_std"},
                   "dataset.synthetic");
        SyntheticSpec& sp = cfg.synthetic;
        sp.K = get_or(sy, "K", sp.K);
        sp.num_classes = get_or(sy, "num_classes", sp.num_classes);
        sp.samples_per_class = get_or(sy, "samples_per_class", sp.samples_per_class);
        sp.band_start = get_or(sy, "band_start", sp.band_start);
        sp.band_end = get_or(sy, "band_end", sp.band_end);
        sp.ar_order = get_or(sy, "ar_order", sp.ar_order);
        sp.noise_std = get_or(sy, "noise_std", sp.noise_std);
        if (sy.contains("coeffs")) sp.coeffs = sy.at("coeffs").get<std::vector<std::vector<double>>>();
    }

    cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
    cfg.K_prime = get_or(j, "K_prime", cfg.K_prime);
    cfg.initial_len = get_or(j, "initial_len", cfg.initial_len);
    cfg.rs_mode = rs_mode_from_name(get_or<std::string>(j, "rs_mode", "shuffled"));
    cfg.train_fraction = get_or(j, "train_fraction", cfg.train_fraction);
    cfg.out_dir = get_or<std::string>(j, "out_dir", "");
    {
        const std::string mode = get_or<std::string>(j, "exec_mode", "parallel");
        if (mode == "serial")
            cfg.exec_mode = ExecMode::Serial;
        else if (mode == "parallel")
            cfg.exec_mode = ExecMode::Parallel;
        else
            throw ParseError("config: exec_mode must be serial|parallel");
    }

    if (j.contains("env")) {
        const json& e = j.at("env");
        check_keys(e, {"L_min", "shift_step", "resize_step"}, "env");
        cfg.envp.L_min = get_or(e, "L_min", cfg.envp.L_min);
        cfg.envp.shift_step = get_or(e, "shift_step", cfg.envp.shift_step);
        cfg.envp.resize_step = get_or(e, "resize_step", cfg.envp.resize_step);
    }
    if (j.contains("reward")) {
        const json& r = j.at("reward");
        check_keys(r, {"ar_order", "beta", "subsample"}, "reward");
        cfg.reward.p = get_or(r, "ar_order", cfg.reward.p);
        cfg.reward.beta = get_or(r, "beta", cfg.reward.beta);
        cfg.reward.subsample = get_or(r, "subsample", cfg.reward.subsample);
    }
    if (j.contains("agent")) {
        const json& a = j.at("agent");
        check_keys(a,
                   {"gamma", "epsilon", "lr", "episodes", "steps_per_episode", "memory", "batch",
                    "target_sync_every", "warmup"},
                   "agent");
        cfg.agent.gamma = get_or(a, "gamma", cfg.agent.gamma);
        cfg.agent.epsilon = get_or(a, "epsilon", cfg.agent.epsilon);
        cfg.agent.lr = get_or(a, "lr", cfg.agent.lr);
        cfg.agent.episodes = get_or(a, "episodes", cfg.agent.episodes);
        cfg.agent.steps_per_episode = get_or(a, "steps_per_episode", cfg.agent.steps_per_episode);
        cfg.agent.memory_capacity = get_or(a, "memory", cfg.agent.memory_capacity);
        cfg.agent.rl_batch = get_or(a, "batch", cfg.agent.rl_batch);
        cfg.agent.target_sync_every = get_or(a, "target_sync_every", cfg.agent.target_sync_every);
        cfg.agent.warmup = get_or(a, "warmup", cfg.agent.warmup);
    }
    if (j.contains("classifier")) {
        const json& c = j.at("classifier");
        check_keys(c,
                   {"lstm_layers", "hidden", "fc_layers", "fc_width", "lr", "lambda", "forget_bias",
                    "batch", "iterations", "probe_iterations"},
                   "classifier");
        cfg.classifier.lstm_layers = get_or(c, "lstm_layers", cfg.classifier.lstm_layers);
        cfg.classifier.hidden = get_or(c, "hidden", cfg.classifier.hidden);
        cfg.classifier.fc_layers = get_or(c, "fc_layers", cfg.classifier.fc_layers);
        cfg.classifier.fc_width = get_or(c, "fc_width", cfg.classifier.fc_width);
        cfg.classifier.lr = get_or(c, "lr", cfg.classifier.lr);
        cfg.classifier.lambda = get_or(c, "lambda", cfg.classifier.lambda);
        cfg.classifier.forget_bias = get_or(c, "forget_bias", cfg.classifier.forget_bias);
        cfg.classifier.batch = get_or(c, "batch", cfg.classifier.batch);
        cfg.classifier.iterations = get_or(c, "iterations", cfg.classifier.iterations);
        cfg.classifier.probe_iterations = get_or(c, "probe_iterations", cfg.classifier.probe_iterations);
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(load_json(path)); }

json run_config_to_json(const RunConfig& cfg) {
    json j;
    if (cfg.has_synthetic) {
        json sy;
        sy["K"] = cfg.synthetic.K;
        sy["num_classes"] = cfg.synthetic.num_classes;
        sy["samples_per_class"] = cfg.synthetic.samples_per_class;
        sy["band_start"] = cfg.synthetic.band_start;
        sy["band_end"] = cfg.synthetic.band_end;
        sy["ar_order"] = cfg.synthetic.ar_order;
        sy["coeffs"] = cfg.synthetic.coeffs;
        sy["noise_std"] = cfg.synthetic.noise_std;
        j["dataset"] = json{{"synthetic", sy}};
    } else {
        j["dataset"] = json{{"csv", cfg.csv_path}};
    }
    j["seed"] = cfg.seed;
    j["K_prime"] = cfg.K_prime;
    j["initial_len"] = cfg.initial_len;
    j["rs_mode"] = rs_mode_name(cfg.rs_mode);
    j["env"] = json{{"L_min", cfg.envp.L_min},
                    {"shift_step", cfg.envp.shift_step},
                    {"resize_step", cfg.envp.resize_step}};
    j["reward"] =
        json{{"ar_order", cfg.reward.p}, {"beta", cfg.reward.beta}, {"subsample", cfg.reward.subsample}};
    j["agent"] = json{{"gamma", cfg.agent.gamma},
                      {"epsilon", cfg.agent.epsilon},
                      {"lr", cfg.agent.lr},
                      {"episodes", cfg.agent.episodes},
                      {"steps_per_episode", cfg.agent.steps_per_episode},
                      {"memory", cfg.agent.memory_capacity},
                      {"batch", cfg.agent.rl_batch},
                      {"target_sync_every", cfg.agent.target_sync_every},
                      {"warmup", cfg.agent.warmup}};
    j["classifier"] = json{{"lstm_layers", cfg.classifier.lstm_layers},
                           {"hidden", cfg.classifier.hidden},
                           {"fc_layers", cfg.classifier.fc_layers},
                           {"fc_width", cfg.classifier.fc_width},
                           {"lr", cfg.classifier.lr},
                           {"lambda", cfg.classifier.lambda},
                           {"forget_bias", cfg.classifier.forget_bias},
                           {"batch", cfg.classifier.batch},
                           {"iterations", cfg.classifier.iterations},
                           {"probe_iterations", cfg.classifier.probe_iterations}};
    j["train_fraction"] = cfg.train_fraction;
    j["exec_mode"] = cfg.exec_mode == ExecMode::Serial ? "serial" : "parallel";
    // out_dir is a runtime destination, not a run parameter: identical runs
    // into different directories serialize identically.
    return j;
}

void resolve_run_config(RunConfig& cfg, int K) {
    if (cfg.K_prime == 0) cfg.K_prime = 4 * K;
    cfg.envp.K_prime = cfg.K_prime;
    cfg.reward.K_prime = cfg.K_prime;
    cfg.reward.seed = derive_seed(cfg.seed, "reward-subsample");
    cfg.agent.initial_len = cfg.initial_len;
}

void validate_run_config(const RunConfig& cfg, int K) {
    if (cfg.has_synthetic) validate_spec(cfg.synthetic);
    if (cfg.K_prime <= K)
        throw ValidationError("config: K_prime (" + std::to_string(cfg.K_prime) + ") must exceed K (" +
                              std::to_string(K) + ")");
    env::validate_params(cfg.envp);
    if (cfg.envp.L_min < 2 * cfg.reward.p + 2)
        throw ValidationError("config: L_min must be >= 2*ar_order+2 so every window supports the AR fits");
    if (cfg.reward.subsample < 2) throw ValidationError("config: reward.subsample must be at least 2");
    if (cfg.reward.beta < 0.0) throw ValidationError("config: reward.beta must be >= 0");
    validate_agent_config(cfg.agent, cfg.envp);
    validate_classifier_config(cfg.classifier);
    if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0))
        throw ValidationError("config: train_fraction must be in (0,1)");
}

json artifact_to_json(const ModelArtifact& a) {
    json j;
    j["version"] = a.version;
    j["config"] = run_config_to_json(a.config);
    j["K"] = a.K;
    j["num_classes"] = a.num_classes;
    j["label_values"] = a.label_values;
    j["rs"] = json{{"K", a.rs_map.K},
                   {"K_prime", a.rs_map.K_prime},
                   {"seed", a.rs_map.seed},
                   {"mode", rs_mode_name(a.rs_map.mode)},
                   {"map", a.rs_map.map}};
    j["best"] = json{{"start", a.best_state.start_idx},
                     {"end", a.best_state.end_idx},
                     {"reward", a.best_reward},
                     {"ss", a.best_ss}};

    json m;
    m["zone"] = json{{"start", a.model.zone.start_idx}, {"end", a.model.zone.end_idx}};
    m["K_prime"] = a.model.K_prime;
    m["num_classes"] = a.model.num_classes;
    m["norm_mean"] = a.model.norm_mean;
    m["norm_std"] = a.model.norm_std;
    json tensors = json::array();
    for (nn::Tensor* t : const_cast<WASLSTMModel&>(a.model).params()) tensors.push_back(tensor_to_json(*t));
    m["tensors"] = tensors;
    j["classifier"] = m;
    return j;
}

ModelArtifact artifact_from_json(const json& j) {
    ModelArtifact a;
    a.version = j.value("version", std::string());
    if (a.version != kArtifactVersion)
        throw FormatError("artifact: version '" + a.version + "' unsupported (expected '" +
                          kArtifactVersion + "')");
    a.config = parse_run_config(j.at("config"));
    a.K = j.at("K").get<int>();
    a.num_classes = j.at("num_classes").get<int>();
    a.label_values = j.at("label_values").get<std::vector<long long>>();
    resolve_run_config(a.config, a.K);

    const json& rs = j.at("rs");
    a.rs_map.K = rs.at("K").get<int>();
    a.rs_map.K_prime = rs.at("K_prime").get<int>();
    a.rs_map.seed = rs.at("seed").get<std::uint64_t>();
    a.rs_map.mode = rs_mode_from_name(rs.at("mode").get<std::string>());
    a.rs_map.map = rs.at("map").get<std::vector<int>>();
    validate_rs_map(a.rs_map);

    const json& b = j.at("best");
    a.best_state = {b.at("start").get<int>(), b.at("end").get<int>()};
    a.best_reward = b.at("reward").get<double>();
    a.best_ss = b.at("ss").get<double>();

    const json& m = j.at("classifier");
    WASLSTMModel& model = a.model;
    model.cfg = a.config.classifier;
    model.zone = {m.at("zone").at("start").get<int>(), m.at("zone").at("end").get<int>()};
    model.K_prime = m.at("K_prime").get<int>();
    model.num_classes = m.at("num_classes").get<int>();
    model.norm_mean = m.at("norm_mean").get<std::vector<double>>();
    model.norm_std = m.at("norm_std").get<std::vector<double>>();
    if (static_cast<int>(model.norm_mean.size()) != model.zone.length() ||
        static_cast<int>(model.norm_std.size()) != model.zone.length())
        throw FormatError("artifact: normalization stats length differs from the window length");

    const ClassifierConfig& cc = model.cfg;
    for (int l = 0; l < cc.lstm_layers; ++l)
        model.cells.emplace_back("lstm" + std::to_string(l), l == 0 ? 1 : cc.hidden, cc.hidden,
                                 cc.forget_bias);
    for (int l = 0; l < cc.fc_layers; ++l)
        model.fc.emplace_back("fc" + std::to_string(l), cc.fc_width, l == 0 ? cc.hidden : cc.fc_width,
                              nn::Activation::Sigmoid);
    model.out = nn::DenseLayer("out", model.num_classes, cc.fc_layers == 0 ? cc.hidden : cc.fc_width,
                               nn::Activation::Identity);

    auto params = model.params();
    const json& tensors = m.at("tensors");
    if (tensors.size() != params.size())
        throw FormatError("artifact: expected " + std::to_string(params.size()) + " tensors, found " +
                          std::to_string(tensors.size()));
    for (std::size_t k = 0; k < params.size(); ++k) tensor_from_json(tensors[k], *params[k]);
    return a;
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("'" + path + "': " + e.what());
    }
}

void save_artifact(const ModelArtifact& a, const std::string& path) {
    write_json_atomic(path, artifact_to_json(a));
}

ModelArtifact load_artifact(const std::string& path) {
    try {
        return artifact_from_json(load_json(path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("artifact '" + path + "': " + e.what());
    }
}

void write_json_atomic(const std::string& path, const json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

}  // namespace focalzone
