#include "test_util.hpp"
#include "data_gen.hpp"

#include <algorithm>
#include <set>

#include "pbank/partition.hpp"

using namespace pbank;
using testutil::TempDir;
using testutil::thrown_code;

namespace {

// Exhaustive search over all 2-partitions of the dimensions, minimizing
// within-cluster SSE. Independent of the Lloyd implementation.
SubspacePartition brute_force_two_clusters(const FeatureMatrix& x) {
    const std::size_t D = x.n_dims();
    REQUIRE(D <= 16);
    double best_sse = std::numeric_limits<double>::infinity();
    std::uint32_t best_mask = 0;
    // Dimension 0 stays in cluster 0 so each split is visited once.
    for (std::uint32_t mask = 1; mask < (1u << D); mask += 2) {
        const std::uint32_t members_b = (~mask) & ((1u << D) - 1);
        if (members_b == 0) continue;
        std::vector<std::uint32_t> assignment(D);
        for (std::uint32_t dim = 0; dim < D; ++dim)
            assignment[dim] = (mask >> dim) & 1u ? 0 : 1;
        const auto p = SubspacePartition::from_assignment(D, 2, assignment);
        const double sse = within_cluster_sse(x, p);
        if (sse < best_sse) {
            best_sse = sse;
            best_mask = mask;
        }
    }
    std::vector<std::uint32_t> assignment(D);
    for (std::uint32_t dim = 0; dim < D; ++dim)
        assignment[dim] = (best_mask >> dim) & 1u ? 0 : 1;
    return SubspacePartition::from_assignment(D, 2, assignment);
}

bool same_grouping(const SubspacePartition& a, const SubspacePartition& b) {
    // Cluster ids may be permuted; compare member sets.
    std::set<std::vector<std::uint32_t>> sa(a.member_lists.begin(), a.member_lists.end());
    std::set<std::vector<std::uint32_t>> sb(b.member_lists.begin(), b.member_lists.end());
    return sa == sb;
}

// Matrix whose per-dimension rows are the given vectors (N = row length).
FeatureMatrix matrix_from_dim_rows(const std::vector<std::vector<float>>& rows) {
    const std::size_t D = rows.size();
    const std::size_t N = rows[0].size();
    std::vector<float> values(N * D);
    for (std::size_t dim = 0; dim < D; ++dim)
        for (std::size_t s = 0; s < N; ++s) values[s * D + dim] = rows[dim][s];
    return FeatureMatrix(N, D, std::move(values));
}

}  // namespace

TEST_CASE("cluster_dimensions groups near-identical dimension rows") {
    const auto x = matrix_from_dim_rows({{1, 1, 1}, {1, 1, 1.01f}, {-5, -5, -5}});
    const auto p = cluster_dimensions(x, 2, 0);
    CHECK(p.assignment[0] == p.assignment[1]);
    CHECK(p.assignment[0] != p.assignment[2]);
    CHECK(same_grouping(p, brute_force_two_clusters(x)));
}

TEST_CASE("cluster_dimensions matches the brute-force optimum on blocked dims") {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        const auto x = testgen::blocked_matrix(20, 10, 2, 3, 0.05, seed);
        const auto p = cluster_dimensions(x, 2, seed);
        CHECK(same_grouping(p, brute_force_two_clusters(x)));
    }
}

TEST_CASE("cluster_dimensions degenerate cluster counts") {
    const auto x = testgen::random_matrix(6, 5, 11);
    SECTION("d == D gives singletons") {
        const auto p = cluster_dimensions(x, 5, 3);
        for (const auto& members : p.member_lists) CHECK(members.size() == 1);
    }
    SECTION("d == 1 gives one full cluster") {
        const auto p = cluster_dimensions(x, 1, 3);
        REQUIRE(p.member_lists.size() == 1);
        CHECK(p.member_lists[0].size() == 5);
    }
    SECTION("d > D is rejected") {
        CHECK(thrown_code([&] { cluster_dimensions(x, 6, 3); }) == errc::too_many_clusters);
    }
}

TEST_CASE("cluster_dimensions always yields valid nonempty clusters") {
    // from_assignment would throw on an empty cluster; 100 seeds of a
    // harsh setting (many clusters, few distinct directions) exercise the
    // repair path.
    const auto x = testgen::random_matrix(20, 64, 77);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto p = cluster_dimensions(x, 16, seed);
        REQUIRE(p.n_subspaces == 16);
        std::size_t total = 0;
        for (const auto& members : p.member_lists) {
            CHECK(!members.empty());
            total += members.size();
        }
        CHECK(total == 64);
    }
}

TEST_CASE("cluster_dimensions is deterministic per seed") {
    const auto x = testgen::random_matrix(30, 24, 5);
    const auto a = cluster_dimensions(x, 6, 9);
    const auto b = cluster_dimensions(x, 6, 9);
    CHECK(a == b);
}

TEST_CASE("Lloyd iterations never increase the SSE") {
    const auto x = testgen::random_matrix(40, 32, 13);
    for (std::uint64_t seed : {0u, 1u, 2u}) {
        KmeansTrace trace;
        cluster_dimensions(x, 8, seed, 100, &trace);
        REQUIRE(!trace.sse_per_iter.empty());
        for (std::size_t t = 1; t < trace.sse_per_iter.size(); ++t)
            CHECK(trace.sse_per_iter[t] <= trace.sse_per_iter[t - 1] + 1e-9);
    }
}

TEST_CASE("random_split balances cluster sizes") {
    SECTION("D divisible by d") {
        const auto p = random_split(6, 3, 1);
        for (const auto& members : p.member_lists) CHECK(members.size() == 2);
    }
    SECTION("remainder spreads over the first clusters") {
        const auto p = random_split(7, 3, 1);
        std::vector<std::size_t> sizes;
        for (const auto& members : p.member_lists) sizes.push_back(members.size());
        std::sort(sizes.begin(), sizes.end());
        CHECK(sizes == std::vector<std::size_t>{2, 2, 3});
    }
    SECTION("deterministic per seed") {
        CHECK(random_split(40, 7, 4) == random_split(40, 7, 4));
        CHECK(!(random_split(40, 7, 4) == random_split(40, 7, 5)));
    }
    SECTION("d > D rejected") {
        CHECK(thrown_code([] { random_split(3, 4, 0); }) == errc::too_many_clusters);
    }
}

TEST_CASE("within_cluster_sse hand cases") {
    SECTION("identical rows give zero") {
        const auto x = matrix_from_dim_rows({{2, 2}, {2, 2}, {2, 2}});
        CHECK(within_cluster_sse(x, random_split(3, 2, 0)) == 0.0);
    }
    SECTION("two scalar dims, one cluster") {
        const auto x = matrix_from_dim_rows({{0}, {2}});
        const auto p = SubspacePartition::from_assignment(2, 1, {0, 0});
        CHECK(within_cluster_sse(x, p) == Catch::Approx(2.0));
    }
}

TEST_CASE("K-means beats the random split on SSE (median over seeds)") {
    std::size_t wins = 0;
    const std::size_t trials = 20;
    for (std::uint64_t seed = 0; seed < trials; ++seed) {
        const auto x = testgen::random_matrix(8, 5, 100 + seed);
        const double km = within_cluster_sse(x, cluster_dimensions(x, 2, seed));
        const double rs = within_cluster_sse(x, random_split(5, 2, seed));
        wins += km <= rs;
    }
    CHECK(wins * 2 >= trials);  // median comparison
}

TEST_CASE("partition file round trip") {
    TempDir dir;
    const auto p = cluster_dimensions(testgen::random_matrix(10, 12, 3), 4, 8);
    const auto path = dir.file("p.pbsp");
    save_partition(p, path);
    CHECK(load_partition(path) == p);

    SECTION("foreign magic rejected") {
        write_file_atomic(path, {'N', 'O', 'P', 'E', 0, 0, 0, 0});
        CHECK(thrown_code([&] { load_partition(path); }) == errc::bad_magic);
    }
}
