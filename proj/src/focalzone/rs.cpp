#include "focalzone/rs.hpp"

namespace focalzone {

const char* rs_mode_name(RSMode m) {
    switch (m) {
        case RSMode::Shuffled: return "shuffled";
        case RSMode::Block: return "block";
        case RSMode::Grouped: return "grouped";
    }
    throw ValidationError("rs: unknown mode");
}

RSMode rs_mode_from_name(const std::string& name) {
    if (name == "shuffled") return RSMode::Shuffled;
    if (name == "block") return RSMode::Block;
    if (name == "grouped") return RSMode::Grouped;
    throw ParseError("rs: unknown mode '" + name + "' (expected shuffled|block|grouped)");
}

int replication_count(int K, int K_prime) { return (K_prime + K - 1) / K; }

RSMap make_rs_map(int K, int K_prime, std::uint64_t seed, RSMode mode) {
    if (K < 2) throw ValidationError("rs: K must be at least 2");
    if (K_prime <= K) throw ValidationError("rs: K' must exceed K");
    const int h = replication_count(K, K_prime);

    std::vector<int> idx;
    idx.reserve(static_cast<std::size_t>(h) * K);
    if (mode == RSMode::Grouped) {
        for (int j = 0; j < K; ++j)
            for (int t = 0; t < h; ++t) idx.push_back(j);
    } else {
        for (int t = 0; t < h; ++t)
            for (int j = 0; j < K; ++j) idx.push_back(j);
    }
    if (mode == RSMode::Shuffled) {
        Rng rng(seed);
        rng.shuffle(idx);
    }
    idx.resize(K_prime);

    RSMap m;
    m.K = K;
    m.K_prime = K_prime;
    m.map = std::move(idx);
    m.seed = seed;
    m.mode = mode;
    return m;
}

void validate_rs_map(const RSMap& m) {
    if (m.K < 2 || m.K_prime <= m.K) throw ValidationError("rs map: need K >= 2 and K' > K");
    if (static_cast<int>(m.map.size()) != m.K_prime) throw ValidationError("rs map: wrong map length");
    const int h = replication_count(m.K, m.K_prime);
    std::vector<int> uses(m.K, 0);
    for (int j : m.map) {
        if (j < 0 || j >= m.K) throw ValidationError("rs map: entry out of range");
        if (++uses[j] > h) throw ValidationError("rs map: source index used more than ceil(K'/K) times");
    }
}

ExpandedSample apply_rs(const Sample& s, const RSMap& m) {
    if (static_cast<int>(s.features.size()) != m.K)
        throw ValidationError("rs: sample has " + std::to_string(s.features.size()) +
                              " dims, map expects " + std::to_string(m.K));
    ExpandedSample e;
    e.label = s.label;
    e.features.resize(m.K_prime);
    for (int j = 0; j < m.K_prime; ++j) e.features[j] = s.features[m.map[j]];
    return e;
}

std::vector<ExpandedSample> apply_rs_all(const std::vector<Sample>& samples, const RSMap& m) {
    std::vector<ExpandedSample> out;
    out.reserve(samples.size());
    for (const Sample& s : samples) out.push_back(apply_rs(s, m));
    return out;
}

}  // namespace focalzone
