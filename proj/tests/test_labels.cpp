#include "test_util.hpp"
#include "data_gen.hpp"

#include <algorithm>
#include <set>

#include "pbank/pair_labels.hpp"

using namespace pbank;
using testutil::thrown_code;

namespace {

// Independent O(N^2 log N) oracle: full distance sort per query with the
// same (distance, index) tie rule.
std::set<std::pair<std::uint32_t, std::uint32_t>> brute_force_positives(const FeatureMatrix& x,
                                                                        std::size_t k) {
    const std::size_t n = x.n_samples();
    std::set<std::pair<std::uint32_t, std::uint32_t>> out;
    for (std::uint32_t i = 0; i < n; ++i) {
        std::vector<std::pair<double, std::uint32_t>> dist;
        for (std::uint32_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double d2 = 0.0;
            for (std::size_t t = 0; t < x.n_dims(); ++t) {
                const double diff =
                    static_cast<double>(x.at(i, t)) - static_cast<double>(x.at(j, t));
                d2 += diff * diff;
            }
            dist.emplace_back(d2, j);
        }
        std::sort(dist.begin(), dist.end());
        for (std::size_t t = 0; t < k; ++t)
            out.insert({std::min(i, dist[t].second), std::max(i, dist[t].second)});
    }
    return out;
}

}  // namespace

TEST_CASE("build_labels on three points on a line") {
    const FeatureMatrix x(3, 1, {0.0f, 0.1f, 10.0f});
    const auto labels = build_labels(x, 1);
    CHECK(labels.label(0, 1) == 1);
    CHECK(labels.label(1, 2) == 1);  // x1 is the nearest neighbor of x2
    CHECK(labels.label(0, 2) == -1);
    CHECK(labels.n_positive_pairs() == 2);
    for (std::uint32_t i = 0; i < 3; ++i) CHECK(labels.label(i, i) == 1);
}

TEST_CASE("build_labels matches the brute-force oracle") {
    for (std::uint64_t seed : {1u, 2u}) {
        const auto x = testgen::random_matrix(200, 8, seed);
        for (std::size_t k : {1u, 5u, 20u}) {
            const auto labels = build_labels(x, k);
            const auto oracle = brute_force_positives(x, k);
            const std::set<std::pair<std::uint32_t, std::uint32_t>> got(
                labels.positive_pairs().begin(), labels.positive_pairs().end());
            CHECK(got == oracle);
        }
    }
}

TEST_CASE("build_labels with k = N-1 marks every pair positive") {
    const auto x = testgen::random_matrix(12, 3, 4);
    const auto labels = build_labels(x, 11);
    CHECK(labels.n_positive_pairs() == 12 * 11 / 2);
    CHECK(labels.n_negative_pairs() == 0);
}

TEST_CASE("build_labels rejects k >= N") {
    const auto x = testgen::random_matrix(5, 2, 0);
    CHECK(thrown_code([&] { build_labels(x, 5); }) == errc::k_too_large);
    CHECK(thrown_code([&] { build_labels(x, 9); }) == errc::k_too_large);
}

TEST_CASE("labels are symmetric and reflexive (exhaustive small N)") {
    const auto x = testgen::random_matrix(50, 4, 21);
    const auto labels = build_labels(x, 7);
    for (std::uint32_t i = 0; i < 50; ++i) {
        CHECK(labels.label(i, i) == 1);
        for (std::uint32_t j = 0; j < 50; ++j) CHECK(labels.label(i, j) == labels.label(j, i));
    }
}

TEST_CASE("build_labels is thread-count invariant") {
    const auto x = testgen::random_matrix(60, 6, 3);
    const auto a = build_labels(x, 5, 1);
    const auto b = build_labels(x, 5, 4);
    CHECK(a.positive_pairs() == b.positive_pairs());
}

TEST_CASE("sample_pairs diagonal-only request") {
    const auto x = testgen::random_matrix(5, 2, 1);
    const auto labels = build_labels(x, 1);
    const auto pairs = sample_pairs(labels, 0, 0, true, 7);
    REQUIRE(pairs.size() == 5);
    for (std::uint32_t i = 0; i < 5; ++i) {
        CHECK(pairs[i].i == i);
        CHECK(pairs[i].j == i);
        CHECK(pairs[i].label == 1.0);
    }
}

TEST_CASE("sample_pairs is deterministic per seed") {
    const auto x = testgen::random_matrix(40, 3, 2);
    const auto labels = build_labels(x, 4);
    const auto a = sample_pairs(labels, 10, 10, true, 99);
    const auto b = sample_pairs(labels, 10, 10, true, 99);
    REQUIRE(a.size() == b.size());
    for (std::size_t t = 0; t < a.size(); ++t) {
        CHECK(a[t].i == b[t].i);
        CHECK(a[t].j == b[t].j);
        CHECK(a[t].label == b[t].label);
    }
    const auto c = sample_pairs(labels, 10, 10, true, 100);
    bool same = a.size() == c.size();
    if (same)
        for (std::size_t t = 0; t < a.size(); ++t)
            same = same && a[t].i == c[t].i && a[t].j == c[t].j;
    CHECK(!same);
}

TEST_CASE("sample_pairs on the three-point line is forced") {
    const FeatureMatrix x(3, 1, {0.0f, 0.1f, 10.0f});
    const auto labels = build_labels(x, 1);
    const auto pairs = sample_pairs(labels, 2, 1, false, 3);
    REQUIRE(pairs.size() == 3);
    std::set<std::pair<std::uint32_t, std::uint32_t>> pos, neg;
    for (const auto& p : pairs)
        (p.label > 0 ? pos : neg).insert({p.i, p.j});
    CHECK(pos == std::set<std::pair<std::uint32_t, std::uint32_t>>{{0, 1}, {1, 2}});
    CHECK(neg == std::set<std::pair<std::uint32_t, std::uint32_t>>{{0, 2}});
}

TEST_CASE("sample_pairs rejects oversized requests") {
    const FeatureMatrix x(3, 1, {0.0f, 0.1f, 10.0f});
    const auto labels = build_labels(x, 1);  // 2 positives, 1 negative
    CHECK(thrown_code([&] { sample_pairs(labels, 3, 0, false, 0); }) == errc::not_enough_pairs);
    CHECK(thrown_code([&] { sample_pairs(labels, 0, 2, false, 0); }) == errc::not_enough_pairs);
}

TEST_CASE("sampled pairs carry the label the set reports") {
    const auto x = testgen::random_matrix(80, 4, 6);
    const auto labels = build_labels(x, 6);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto pairs = sample_pairs(labels, 30, 30, true, seed);
        for (const auto& p : pairs)
            CHECK(static_cast<int>(p.label) == labels.label(p.i, p.j));
    }
}

TEST_CASE("sample_pairs handles the dense-negative regime") {
    // Requesting nearly all negatives goes through the enumeration path.
    const auto x = testgen::random_matrix(30, 2, 8);
    const auto labels = build_labels(x, 2);
    const std::size_t all_neg = labels.n_negative_pairs();
    const auto pairs = sample_pairs(labels, 0, all_neg, false, 1);
    REQUIRE(pairs.size() == all_neg);
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    for (const auto& p : pairs) {
        CHECK(labels.label(p.i, p.j) == -1);
        CHECK(seen.insert({p.i, p.j}).second);  // no duplicates
    }
}

TEST_CASE("restrict_to maps positives through the subset") {
    const FeatureMatrix x(4, 1, {0.0f, 0.1f, 10.0f, 10.1f});
    const auto labels = build_labels(x, 1);  // positives {0,1}, {2,3}
    const auto sub = labels.restrict_to({0, 1, 3});
    CHECK(sub.n_samples() == 3);
    CHECK(sub.label(0, 1) == 1);   // {0,1} kept
    CHECK(sub.label(0, 2) == -1);  // {0,3} was negative
    CHECK(sub.label(1, 2) == -1);  // {1,3} was negative
}
