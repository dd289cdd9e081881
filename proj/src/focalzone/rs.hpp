#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "focalzone/data.hpp"

namespace focalzone {

// Layout of the replicated index list before truncation to K' entries.
//   Shuffled: [0..K) repeated h times, then seeded uniform shuffle (production).
//   Block:    [0..K) repeated h times, no shuffle (test hook; K=2,K'=4 -> 0,1,0,1).
//   Grouped:  each index repeated h times consecutively, no shuffle (test hook;
//             keeps a source dimension range contiguous in expanded space).
enum class RSMode { Shuffled, Block, Grouped };

const char* rs_mode_name(RSMode m);
RSMode rs_mode_from_name(const std::string& name);

struct RSMap {
    int K = 0;
    int K_prime = 0;
    std::vector<int> map;  // length K', entries in [0, K)
    std::uint64_t seed = 0;
    RSMode mode = RSMode::Shuffled;
};

// h = ceil(K'/K) replications guarantee the replicated list is never shorter
// than K'.
int replication_count(int K, int K_prime);

RSMap make_rs_map(int K, int K_prime, std::uint64_t seed, RSMode mode = RSMode::Shuffled);

void validate_rs_map(const RSMap& m);

struct ExpandedSample {
    std::vector<double> features;  // length K'
    int label = 0;
};

ExpandedSample apply_rs(const Sample& s, const RSMap& m);
std::vector<ExpandedSample> apply_rs_all(const std::vector<Sample>& samples, const RSMap& m);

}  // namespace focalzone
