#include "focalzone/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace focalzone {

bool ar_stationary(const std::vector<double>& coeffs) {
    const int p = static_cast<int>(coeffs.size());
    if (p == 0) return true;
    if (p == 1) return std::abs(coeffs[0]) < 1.0;
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
    for (int j = 0; j < p; ++j) companion(0, j) = coeffs[j];
    for (int j = 1; j < p; ++j) companion(j, j - 1) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(companion, /*computeEigenvectors=*/false);
    double radius = 0.0;
    for (int j = 0; j < p; ++j) radius = std::max(radius, std::abs(es.eigenvalues()[j]));
    return radius < 1.0;
}

void validate_spec(const SyntheticSpec& spec) {
    if (spec.K < 1) throw ValidationError("synthetic spec: K must be positive");
    if (spec.num_classes < 2) throw ValidationError("synthetic spec: need at least 2 classes");
    if (spec.samples_per_class < 1) throw ValidationError("synthetic spec: samples_per_class must be positive");
    if (!(0 <= spec.band_start && spec.band_start < spec.band_end && spec.band_end <= spec.K))
        throw ValidationError("synthetic spec: band must satisfy 0 <= start < end <= K");
    if (spec.ar_order < 1) throw ValidationError("synthetic spec: ar_order must be positive");
    if (spec.band_end - spec.band_start < spec.ar_order + 2)
        throw ValidationError("synthetic spec: band width must be at least ar_order + 2");
    if (static_cast<int>(spec.coeffs.size()) != spec.num_classes)
        throw ValidationError("synthetic spec: need one coefficient vector per class");
    for (int c = 0; c < spec.num_classes; ++c) {
        if (static_cast<int>(spec.coeffs[c].size()) != spec.ar_order)
            throw ValidationError("synthetic spec: class " + std::to_string(c) +
                                  " coefficient vector must have length ar_order");
        if (!ar_stationary(spec.coeffs[c]))
            throw ValidationError("synthetic spec: class " + std::to_string(c) +
                                  " coefficients are non-stationary (companion spectral radius >= 1)");
    }
    for (int a = 0; a < spec.num_classes; ++a)
        for (int b = a + 1; b < spec.num_classes; ++b)
            if (spec.coeffs[a] == spec.coeffs[b])
                throw ValidationError("synthetic spec: classes " + std::to_string(a) + " and " +
                                      std::to_string(b) + " share identical coefficients");
    if (spec.noise_std < 0.0) throw ValidationError("synthetic spec: noise_std must be >= 0");
}

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    validate_spec(spec);
    Rng rng(seed);
    Dataset d;
    d.K = spec.K;
    d.num_classes = spec.num_classes;
    d.label_values.resize(spec.num_classes);
    for (int c = 0; c < spec.num_classes; ++c) d.label_values[c] = c;
    d.samples.reserve(static_cast<std::size_t>(spec.num_classes) * spec.samples_per_class);

    for (int c = 0; c < spec.num_classes; ++c) {
        const std::vector<double>& phi = spec.coeffs[c];
        for (int i = 0; i < spec.samples_per_class; ++i) {
            Sample s;
            s.label = c;
            s.features.resize(spec.K);
            for (int j = 0; j < spec.K; ++j) {
                if (j < spec.band_start || j >= spec.band_end) {
                    s.features[j] = rng.normal();
                    continue;
                }
                double v = 0.0;
                if (j == spec.band_start) {
                    v = 1.0;
                } else {
                    for (int m = 1; m <= spec.ar_order; ++m) {
                        const int src = j - m;
                        if (src >= spec.band_start) v += phi[m - 1] * s.features[src];
                    }
                }
                if (spec.noise_std > 0.0) v += spec.noise_std * rng.normal();
                s.features[j] = v;
            }
            d.samples.push_back(std::move(s));
        }
    }
    return d;
}

void validate_dataset(const Dataset& d) {
    if (d.samples.empty()) throw ValidationError("dataset: no samples");
    if (d.K < 1) throw ValidationError("dataset: K must be positive");
    if (d.num_classes < 1) throw ValidationError("dataset: num_classes must be positive");
    std::vector<int> seen(d.num_classes, 0);
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
        const Sample& s = d.samples[i];
        if (static_cast<int>(s.features.size()) != d.K)
            throw ValidationError("dataset: sample " + std::to_string(i) + " has wrong dimension");
        if (s.label < 0 || s.label >= d.num_classes)
            throw ValidationError("dataset: sample " + std::to_string(i) + " label out of range");
        seen[s.label] = 1;
    }
    for (int c = 0; c < d.num_classes; ++c)
        if (!seen[c]) throw ValidationError("dataset: class " + std::to_string(c) + " has no samples");
}

namespace {

bool parse_double(const std::string& tok, double& out) {
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

bool parse_int(const std::string& tok, long long& out) {
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) fields.push_back(trim(cur));
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

}  // namespace

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open '" + path + "'");

    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::size_t lineno = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        std::vector<std::string> fields = split_fields(t);
        if (first) {
            first = false;
            // Header detection: a first row with any non-numeric cell is a header.
            bool numeric = true;
            for (const std::string& f : fields) {
                double v;
                if (!parse_double(f, v)) {
                    numeric = false;
                    break;
                }
            }
            if (!numeric) continue;
        }
        rows.push_back(std::move(fields));
    }
    if (rows.empty()) throw FormatError("'" + path + "': no data rows");
    if (rows.size() < 2) throw FormatError("'" + path + "': need at least 2 data rows");

    const std::size_t ncols = rows[0].size();
    if (ncols < 2) throw FormatError("'" + path + "': rows need at least one feature and a label");
    const int K = static_cast<int>(ncols) - 1;

    std::vector<std::vector<double>> feats(rows.size());
    std::vector<long long> raw_labels(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != ncols)
            throw FormatError("'" + path + "': row " + std::to_string(r + 1) + " has " +
                              std::to_string(rows[r].size()) + " fields, expected " + std::to_string(ncols));
        feats[r].resize(K);
        for (int j = 0; j < K; ++j) {
            if (!parse_double(rows[r][j], feats[r][j]))
                throw ParseError("'" + path + "': row " + std::to_string(r + 1) + ", column " +
                                 std::to_string(j + 1) + ": '" + rows[r][j] + "' is not numeric");
        }
        if (!parse_int(rows[r][K], raw_labels[r]))
            throw ParseError("'" + path + "': row " + std::to_string(r + 1) + ": label '" + rows[r][K] +
                             "' is not an integer");
    }

    // Dense re-index preserving ascending order of the original label values.
    std::map<long long, int> dense;
    for (long long v : raw_labels) dense.emplace(v, 0);
    if (dense.size() < 2) throw ValidationError("'" + path + "': only one class present");
    int next = 0;
    for (auto& kv : dense) kv.second = next++;

    Dataset d;
    d.K = K;
    d.num_classes = static_cast<int>(dense.size());
    d.label_values.reserve(dense.size());
    for (const auto& kv : dense) d.label_values.push_back(kv.first);
    d.samples.resize(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        d.samples[r].features = std::move(feats[r]);
        d.samples[r].label = dense[raw_labels[r]];
    }
    return d;
}

void save_csv(const Dataset& d, const std::string& path) {
    validate_dataset(d);
    std::ostringstream out;
    for (int j = 0; j < d.K; ++j) out << "f" << j << ",";
    out << "label\n";
    char buf[64];
    for (const Sample& s : d.samples) {
        for (int j = 0; j < d.K; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", s.features[j]);
            out << buf << ",";
        }
        out << d.label_values[s.label] << "\n";
    }
    write_text_atomic(path, out.str());
}

std::pair<Dataset, Dataset> split(const Dataset& d, double train_fraction, std::uint64_t seed) {
    validate_dataset(d);
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ValidationError("split: train_fraction must be in (0,1)");
    const int I = d.I();
    const long long T = std::llround(I * train_fraction);
    if (T <= 0) throw ValidationError("split: train side would be empty");
    if (T >= I) throw ValidationError("split: test side would be empty");

    std::vector<std::vector<int>> by_class(d.num_classes);
    for (int i = 0; i < I; ++i) by_class[d.samples[i].label].push_back(i);

    // Per-class counts: round, clamp so each class lands on both sides, then
    // nudge toward the exact total by the classes with the largest rounding
    // slack.
    std::vector<long long> take(d.num_classes);
    long long sum = 0;
    for (int c = 0; c < d.num_classes; ++c) {
        const long long n_c = static_cast<long long>(by_class[c].size());
        if (n_c < 2)
            throw ValidationError("split: class " + std::to_string(c) +
                                  " has a single sample; cannot place it on both sides");
        take[c] = std::clamp(std::llround(n_c * train_fraction), 1LL, n_c - 1);
        sum += take[c];
    }
    while (sum != T) {
        int pick = -1;
        double best = 0.0;
        for (int c = 0; c < d.num_classes; ++c) {
            const long long n_c = static_cast<long long>(by_class[c].size());
            const double slack = take[c] - n_c * train_fraction;
            if (sum > T && take[c] > 1 && (pick < 0 || slack > best)) {
                pick = c;
                best = slack;
            } else if (sum < T && take[c] < n_c - 1 && (pick < 0 || slack < best)) {
                pick = c;
                best = slack;
            }
        }
        if (pick < 0)
            throw ValidationError("split: train_fraction incompatible with keeping every class on both sides");
        take[pick] += (sum > T) ? -1 : 1;
        sum += (sum > T) ? -1 : 1;
    }

    Rng rng(seed);
    std::vector<char> in_train(I, 0);
    for (int c = 0; c < d.num_classes; ++c) {
        std::vector<int> idx = by_class[c];
        rng.shuffle(idx);
        for (long long k = 0; k < take[c]; ++k) in_train[idx[k]] = 1;
    }

    Dataset train, test;
    train.K = test.K = d.K;
    train.num_classes = test.num_classes = d.num_classes;
    train.label_values = test.label_values = d.label_values;
    for (int i = 0; i < I; ++i) (in_train[i] ? train : test).samples.push_back(d.samples[i]);
    return {std::move(train), std::move(test)};
}

}  // namespace focalzone
