#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <vector>

#include "pbank/binary_io.hpp"
#include "pbank/error.hpp"
#include "pbank/matrix.hpp"
#include "pbank/rng.hpp"

namespace pbank {

/// Disjoint cover of the D original dimensions by d nonempty clusters
/// (the subspaces). assignment and member_lists are kept consistent.
struct SubspacePartition {
    std::size_t n_dims = 0;
    std::size_t n_subspaces = 0;
    std::vector<std::uint32_t> assignment;                // per dimension, in [0, d)
    std::vector<std::vector<std::uint32_t>> member_lists; // per cluster, ascending dims

    static SubspacePartition from_assignment(std::size_t n_dims, std::size_t n_subspaces,
                                             std::vector<std::uint32_t> assignment) {
        SubspacePartition p;
        p.n_dims = n_dims;
        p.n_subspaces = n_subspaces;
        p.assignment = std::move(assignment);
        require(p.assignment.size() == n_dims, errc::shape_mismatch,
                "assignment length != n_dims");
        p.member_lists.assign(n_subspaces, {});
        for (std::uint32_t dim = 0; dim < n_dims; ++dim) {
            const auto c = p.assignment[dim];
            require(c < n_subspaces, errc::shape_mismatch, "cluster index out of range");
            p.member_lists[c].push_back(dim);
        }
        for (std::size_t c = 0; c < n_subspaces; ++c)
            require(!p.member_lists[c].empty(), errc::shape_mismatch,
                    "cluster " + std::to_string(c) + " is empty");
        return p;
    }

    std::size_t cluster_size(std::size_t c) const { return member_lists[c].size(); }

    bool operator==(const SubspacePartition& other) const {
        return n_dims == other.n_dims && n_subspaces == other.n_subspaces &&
               assignment == other.assignment;
    }
};

namespace detail {

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace detail

struct KmeansTrace {
    std::vector<double> sse_per_iter;  // SSE after each centroid update
    std::size_t iterations = 0;
};

/// K-means over the D per-dimension rows (each a point in R^N): k-means++
/// seeding, Lloyd updates with squared Euclidean distance, assignment ties
/// broken toward the lowest cluster index. A cluster emptied by an update
/// is repaired with the dimension farthest from its current centroid, since
/// every subspace must produce a bit. Deterministic for a fixed seed.
///
/// sample_cap > 0 subsamples that many samples (columns of the data) before
/// clustering; default 0 clusters on the full rows.
inline SubspacePartition cluster_dimensions(const FeatureMatrix& x, std::size_t d,
                                            std::uint64_t seed, std::size_t max_iters = 100,
                                            KmeansTrace* trace = nullptr,
                                            std::size_t sample_cap = 0) {
    const std::size_t n_dims = x.n_dims();
    require(d >= 1, errc::invalid_argument, "need at least one cluster");
    require(d <= n_dims, errc::too_many_clusters,
            "d = " + std::to_string(d) + " exceeds D = " + std::to_string(n_dims));
    require(max_iters >= 1, errc::invalid_argument, "max_iters must be >= 1");

    auto rng = make_rng(seed);

    // Points: one row per original dimension.
    std::vector<std::vector<double>> points(n_dims);
    if (sample_cap > 0 && sample_cap < x.n_samples()) {
        std::vector<std::uint32_t> keep(x.n_samples());
        std::iota(keep.begin(), keep.end(), 0u);
        deterministic_shuffle(keep, rng);
        keep.resize(sample_cap);
        std::sort(keep.begin(), keep.end());
        for (std::size_t dim = 0; dim < n_dims; ++dim) {
            auto& p = points[dim];
            p.resize(sample_cap);
            for (std::size_t i = 0; i < sample_cap; ++i) p[i] = x.at(keep[i], dim);
        }
    } else {
        for (std::size_t dim = 0; dim < n_dims; ++dim) points[dim] = x.dim_values(dim);
    }
    const std::size_t point_len = points[0].size();

    // k-means++ seeding with a hand-rolled cumulative draw.
    std::vector<std::vector<double>> centroids;
    centroids.reserve(d);
    std::vector<char> is_center(n_dims, 0);
    {
        std::uniform_int_distribution<std::size_t> first(0, n_dims - 1);
        const std::size_t c0 = first(rng);
        centroids.push_back(points[c0]);
        is_center[c0] = 1;
        std::vector<double> min_d2(n_dims);
        for (std::size_t i = 0; i < n_dims; ++i) min_d2[i] = detail::sq_dist(points[i], centroids[0]);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        while (centroids.size() < d) {
            double total = 0.0;
            for (std::size_t i = 0; i < n_dims; ++i)
                if (!is_center[i]) total += min_d2[i];
            std::size_t chosen = n_dims;
            if (total > 0.0) {
                const double r = unit(rng) * total;
                double acc = 0.0;
                for (std::size_t i = 0; i < n_dims; ++i) {
                    if (is_center[i]) continue;
                    acc += min_d2[i];
                    if (acc >= r) {
                        chosen = i;
                        break;
                    }
                }
            }
            if (chosen == n_dims) {
                // All remaining points coincide with a center; take the
                // lowest-index free one.
                for (std::size_t i = 0; i < n_dims; ++i)
                    if (!is_center[i]) {
                        chosen = i;
                        break;
                    }
            }
            centroids.push_back(points[chosen]);
            is_center[chosen] = 1;
            for (std::size_t i = 0; i < n_dims; ++i)
                min_d2[i] = std::min(min_d2[i], detail::sq_dist(points[i], centroids.back()));
        }
    }

    std::vector<std::uint32_t> assignment(n_dims, 0);
    std::vector<std::size_t> sizes(d, 0);
    std::size_t iter = 0;
    for (; iter < max_iters; ++iter) {
        // Assignment step; ties go to the lowest cluster index.
        bool changed = false;
        std::fill(sizes.begin(), sizes.end(), 0);
        for (std::size_t i = 0; i < n_dims; ++i) {
            std::uint32_t best = 0;
            double best_d2 = std::numeric_limits<double>::infinity();
            for (std::uint32_t c = 0; c < d; ++c) {
                const double d2 = detail::sq_dist(points[i], centroids[c]);
                if (d2 < best_d2) {
                    best_d2 = d2;
                    best = c;
                }
            }
            if (iter == 0 || assignment[i] != best) changed = true;
            assignment[i] = best;
        }
        for (std::size_t i = 0; i < n_dims; ++i) ++sizes[assignment[i]];

        // Empty-cluster repair: donate the dimension farthest from its
        // current centroid, from a cluster that keeps at least one member.
        for (std::uint32_t c = 0; c < d; ++c) {
            if (sizes[c] > 0) continue;
            std::size_t donor = n_dims;
            double worst = -1.0;
            for (std::size_t i = 0; i < n_dims; ++i) {
                if (sizes[assignment[i]] < 2) continue;
                const double d2 = detail::sq_dist(points[i], centroids[assignment[i]]);
                if (d2 > worst) {
                    worst = d2;
                    donor = i;
                }
            }
            require(donor != n_dims, errc::too_many_clusters,
                    "cannot repair empty cluster: no donor with >= 2 members");
            --sizes[assignment[donor]];
            assignment[donor] = c;
            sizes[c] = 1;
            centroids[c] = points[donor];
            changed = true;
        }

        // Centroid update.
        for (auto& c : centroids) std::fill(c.begin(), c.end(), 0.0);
        for (std::size_t i = 0; i < n_dims; ++i) {
            auto& c = centroids[assignment[i]];
            const auto& p = points[i];
            for (std::size_t j = 0; j < point_len; ++j) c[j] += p[j];
        }
        for (std::uint32_t c = 0; c < d; ++c)
            for (std::size_t j = 0; j < point_len; ++j) centroids[c][j] /= static_cast<double>(sizes[c]);

        if (trace) {
            double sse = 0.0;
            for (std::size_t i = 0; i < n_dims; ++i)
                sse += detail::sq_dist(points[i], centroids[assignment[i]]);
            trace->sse_per_iter.push_back(sse);
        }
        if (!changed) break;
    }
    if (trace) trace->iterations = std::min(iter + 1, max_iters);

    return SubspacePartition::from_assignment(n_dims, d, std::move(assignment));
}

/// Baseline that shuffles the dimension indices and deals them round-robin
/// into d clusters; sizes differ by at most one.
inline SubspacePartition random_split(std::size_t n_dims, std::size_t d, std::uint64_t seed) {
    require(d >= 1, errc::invalid_argument, "need at least one cluster");
    require(d <= n_dims, errc::too_many_clusters,
            "d = " + std::to_string(d) + " exceeds D = " + std::to_string(n_dims));
    std::vector<std::uint32_t> dims(n_dims);
    std::iota(dims.begin(), dims.end(), 0u);
    auto rng = make_rng(seed);
    deterministic_shuffle(dims, rng);
    std::vector<std::uint32_t> assignment(n_dims);
    for (std::size_t i = 0; i < n_dims; ++i) assignment[dims[i]] = static_cast<std::uint32_t>(i % d);
    return SubspacePartition::from_assignment(n_dims, d, std::move(assignment));
}

/// Within-cluster sum of squared distances of the per-dimension rows to
/// their cluster means; the objective value K-means minimizes.
inline double within_cluster_sse(const FeatureMatrix& x, const SubspacePartition& p) {
    require(p.n_dims == x.n_dims(), errc::dimension_mismatch,
            "partition covers a different dimension count");
    double total = 0.0;
    std::vector<double> centroid(x.n_samples());
    for (std::size_t c = 0; c < p.n_subspaces; ++c) {
        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (auto dim : p.member_lists[c]) {
            for (std::size_t s = 0; s < x.n_samples(); ++s) centroid[s] += x.at(s, dim);
        }
        for (auto& v : centroid) v /= static_cast<double>(p.member_lists[c].size());
        for (auto dim : p.member_lists[c]) {
            for (std::size_t s = 0; s < x.n_samples(); ++s) {
                const double diff = x.at(s, dim) - centroid[s];
                total += diff * diff;
            }
        }
    }
    return total;
}

// --- partition file format --------------------------------------------------
// magic "PBSP", u32 version=1, u64 D, u64 d, then D u32 assignment entries.

inline constexpr char kPartitionMagic[4] = {'P', 'B', 'S', 'P'};
inline constexpr std::uint32_t kPartitionVersion = 1;

inline void write_partition(BinaryWriter& w, const SubspacePartition& p) {
    w.write_magic(kPartitionMagic);
    w.write_u32(kPartitionVersion);
    w.write_u64(p.n_dims);
    w.write_u64(p.n_subspaces);
    for (auto c : p.assignment) w.write_u32(c);
}

inline SubspacePartition read_partition(BinaryReader& r) {
    r.expect_magic(kPartitionMagic, "partition");
    const auto version = r.read_u32();
    require(version == kPartitionVersion, errc::bad_magic,
            "unsupported partition version " + std::to_string(version));
    const auto n_dims = r.read_u64();
    const auto d = r.read_u64();
    std::vector<std::uint32_t> assignment(n_dims);
    for (auto& c : assignment) c = r.read_u32();
    return SubspacePartition::from_assignment(n_dims, d, std::move(assignment));
}

inline void save_partition(const SubspacePartition& p, const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes;
    BinaryWriter w(bytes);
    write_partition(w, p);
    write_file_atomic(path, bytes);
}

inline SubspacePartition load_partition(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    BinaryReader r(bytes.data(), bytes.size());
    auto p = read_partition(r);
    require(r.at_end(), errc::shape_mismatch, "trailing bytes in partition file");
    return p;
}

}  // namespace pbank
