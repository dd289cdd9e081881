#include <algorithm>
#include <map>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "focalzone/rs.hpp"
#include "test_util.hpp"

using namespace focalzone;

TEST_CASE("replication count covers the expanded length") {
    CHECK(replication_count(14, 128) == 10);
    CHECK(replication_count(2, 4) == 2);
    CHECK(replication_count(16, 64) == 4);
    CHECK(replication_count(10, 25) == 3);
    for (int K = 2; K <= 20; ++K)
        for (int Kp = K + 1; Kp <= 4 * K; ++Kp) {
            const int h = replication_count(K, Kp);
            CHECK(h * K >= Kp);
            CHECK((h - 1) * K < Kp);
        }
}

TEST_CASE("block mode lays copies end to end without shuffling") {
    const RSMap m = make_rs_map(2, 4, 1, RSMode::Block);
    CHECK(m.map == std::vector<int>{0, 1, 0, 1});
    const RSMap m2 = make_rs_map(3, 7, 1, RSMode::Block);
    CHECK(m2.map == std::vector<int>{0, 1, 2, 0, 1, 2, 0});
}

TEST_CASE("grouped mode keeps each source dim contiguous") {
    const RSMap m = make_rs_map(16, 64, 1, RSMode::Grouped);
    REQUIRE(static_cast<int>(m.map.size()) == 64);
    for (int j = 0; j < 64; ++j) CHECK(m.map[j] == j / 4);
    // A source band [2, 8) therefore lands contiguously at [8, 32).
    for (int j = 8; j < 32; ++j) {
        CHECK(m.map[j] >= 2);
        CHECK(m.map[j] < 8);
    }
}

TEST_CASE("shuffled maps are deterministic per seed") {
    const RSMap a = make_rs_map(14, 128, 42, RSMode::Shuffled);
    const RSMap b = make_rs_map(14, 128, 42, RSMode::Shuffled);
    const RSMap c = make_rs_map(14, 128, 43, RSMode::Shuffled);
    CHECK(a.map == b.map);
    CHECK(a.map != c.map);
}

TEST_CASE("every map is a sub multiset of h copies of the source index set") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 99ULL}) {
        const RSMap m = make_rs_map(11, 40, seed, RSMode::Shuffled);
        const int h = replication_count(11, 40);
        std::map<int, int> uses;
        for (int v : m.map) {
            CHECK(v >= 0);
            CHECK(v < 11);
            ++uses[v];
        }
        for (auto& [idx, n] : uses) CHECK(n <= h);
        CHECK_NOTHROW(validate_rs_map(m));
    }
}

TEST_CASE("map construction rejects bad dimensions") {
    CHECK_THROWS_AS(make_rs_map(1, 4, 1, RSMode::Shuffled), ValidationError);
    CHECK_THROWS_AS(make_rs_map(4, 4, 1, RSMode::Shuffled), ValidationError);
    CHECK_THROWS_AS(make_rs_map(4, 3, 1, RSMode::Shuffled), ValidationError);
}

TEST_CASE("apply gathers source values through the map") {
    RSMap m;
    m.K = 2;
    m.K_prime = 4;
    m.map = {0, 1, 0, 1};
    const Sample s{{3.0, 5.0}, 1};
    const ExpandedSample e = apply_rs(s, m);
    CHECK(e.features == std::vector<double>{3.0, 5.0, 3.0, 5.0});
    CHECK(e.label == 1);
}

TEST_CASE("a constant map produces a constant expansion") {
    RSMap m;
    m.K = 3;
    m.K_prime = 5;
    m.map = {2, 2, 2, 2, 2};
    const ExpandedSample e = apply_rs(Sample{{1.0, 2.0, 7.0}, 0}, m);
    for (double v : e.features) CHECK(v == 7.0);
}

TEST_CASE("apply rejects dimension mismatches") {
    const RSMap m = make_rs_map(4, 8, 1, RSMode::Shuffled);
    CHECK_THROWS_AS(apply_rs(Sample{{1.0, 2.0, 3.0}, 0}, m), ValidationError);
}

TEST_CASE("expansion commutes with relabeling the source dims") {
    Rng rng(77);
    const int K = 9, Kp = 30;
    const RSMap m = make_rs_map(K, Kp, 5, RSMode::Shuffled);

    std::vector<int> perm(K);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);

    Sample s{{}, 0};
    for (int j = 0; j < K; ++j) s.features.push_back(rng.normal());
    Sample s2{std::vector<double>(K), 0};
    for (int j = 0; j < K; ++j) s2.features[perm[j]] = s.features[j];
    RSMap m2 = m;
    for (int& v : m2.map) v = perm[v];

    CHECK(apply_rs(s, m).features == apply_rs(s2, m2).features);
}

TEST_CASE("apply_rs_all expands every sample and keeps labels") {
    const RSMap m = make_rs_map(4, 10, 3, RSMode::Shuffled);
    std::vector<Sample> in;
    Rng rng(1);
    for (int i = 0; i < 6; ++i) {
        Sample s{{}, i % 2};
        for (int j = 0; j < 4; ++j) s.features.push_back(rng.normal());
        in.push_back(s);
    }
    const std::vector<ExpandedSample> out = apply_rs_all(in, m);
    REQUIRE(out.size() == in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
        CHECK(out[i].label == in[i].label);
        CHECK(static_cast<int>(out[i].features.size()) == 10);
        CHECK(out[i].features == apply_rs(in[i], m).features);
    }
}

TEST_CASE("mode names round trip") {
    for (RSMode mode : {RSMode::Shuffled, RSMode::Block, RSMode::Grouped})
        CHECK(rs_mode_from_name(rs_mode_name(mode)) == mode);
    CHECK_THROWS_AS(rs_mode_from_name("bogus"), ParseError);
}
