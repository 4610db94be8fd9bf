#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <sstream>
#include <unordered_set>
#include <vector>

#include "pbank/error.hpp"
#include "pbank/matrix.hpp"
#include "pbank/parallel.hpp"
#include "pbank/rng.hpp"

namespace pbank {

/// Sparse pairwise pseudo-labels: +1 for i==j and for stored positive
/// pairs (mutual-or k-NN), -1 for everything else. Immutable after
/// construction, shareable read-only across threads.
class PairLabelSet {
public:
    PairLabelSet(std::size_t n_samples, std::size_t k,
                 std::vector<std::pair<std::uint32_t, std::uint32_t>> positive_pairs)
        : n_samples_(n_samples), k_(k) {
        positives_.reserve(positive_pairs.size());
        lookup_.reserve(positive_pairs.size() * 2);
        for (auto [a, b] : positive_pairs) {
            require(a < n_samples_ && b < n_samples_, errc::shape_mismatch,
                    "pair endpoint out of range");
            require(a != b, errc::invalid_argument, "diagonal pairs are implicit");
            if (a > b) std::swap(a, b);
            if (lookup_.insert(key(a, b)).second) positives_.emplace_back(a, b);
        }
        std::sort(positives_.begin(), positives_.end());
    }

    std::size_t n_samples() const { return n_samples_; }
    std::size_t k() const { return k_; }

    /// +1 if i == j or {i,j} is a stored positive pair, else -1.
    int label(std::uint32_t i, std::uint32_t j) const {
        if (i == j) return 1;
        if (i > j) std::swap(i, j);
        return lookup_.count(key(i, j)) ? 1 : -1;
    }

    /// Canonical (i < j) positive pairs in ascending order.
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& positive_pairs() const {
        return positives_;
    }

    std::size_t n_positive_pairs() const { return positives_.size(); }

    std::size_t n_negative_pairs() const {
        return n_samples_ * (n_samples_ - 1) / 2 - positives_.size();
    }

    /// Label set over a subset of samples (e.g. the kernel basis): pair
    /// {a,b} of local indices is positive iff {subset[a], subset[b]} is
    /// positive here.
    PairLabelSet restrict_to(const std::vector<std::uint64_t>& subset) const {
        std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
        for (std::uint32_t a = 0; a < subset.size(); ++a) {
            for (std::uint32_t b = a + 1; b < subset.size(); ++b) {
                if (label(static_cast<std::uint32_t>(subset[a]),
                          static_cast<std::uint32_t>(subset[b])) > 0)
                    pairs.emplace_back(a, b);
            }
        }
        return PairLabelSet(subset.size(), k_, std::move(pairs));
    }

private:
    static std::uint64_t key(std::uint32_t a, std::uint32_t b) {
        return (static_cast<std::uint64_t>(a) << 32) | b;
    }

    std::size_t n_samples_;
    std::size_t k_;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> positives_;
    std::unordered_set<std::uint64_t> lookup_;
};

/// Exact k-NN pseudo-labels: {i,j} is positive when either sample is among
/// the other's k nearest by Euclidean distance in the full space. Self is
/// excluded from neighbor lists; distance ties break toward the lower index.
inline PairLabelSet build_labels(const FeatureMatrix& x, std::size_t k, unsigned threads = 1) {
    const std::size_t n = x.n_samples();
    require(k >= 1, errc::invalid_argument, "k must be >= 1");
    require(k < n, errc::k_too_large,
            "k = " + std::to_string(k) + " must be < N = " + std::to_string(n));

    std::vector<std::vector<std::uint32_t>> neighbors(n);
    parallel_for(n, threads, [&](std::size_t i) {
        std::vector<std::pair<double, std::uint32_t>> dist;
        dist.reserve(n - 1);
        const auto xi = x.row(i);
        for (std::uint32_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const auto xj = x.row(j);
            double d2 = 0.0;
            for (std::size_t t = 0; t < xi.size(); ++t) {
                const double diff = static_cast<double>(xi[t]) - static_cast<double>(xj[t]);
                d2 += diff * diff;
            }
            dist.emplace_back(d2, j);
        }
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
        auto& nn = neighbors[i];
        nn.resize(k);
        for (std::size_t t = 0; t < k; ++t) nn[t] = dist[t].second;
    });

    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    pairs.reserve(n * k);
    for (std::uint32_t i = 0; i < n; ++i)
        for (auto j : neighbors[i]) pairs.emplace_back(std::min(i, j), std::max(i, j));
    return PairLabelSet(n, k, std::move(pairs));
}

/// One labeled training pair by sample index.
struct IndexPair {
    std::uint32_t i;
    std::uint32_t j;
    double label;  // +1 or -1
};

/// Uniform without-replacement sample of n_pos positive and n_neg negative
/// pairs; with include_diagonal all N (i,i,+1) pairs are appended (they are
/// the margin constraints that keep every point outside the margin).
/// Deterministic per seed.
inline std::vector<IndexPair> sample_pairs(const PairLabelSet& labels, std::size_t n_pos,
                                           std::size_t n_neg, bool include_diagonal,
                                           std::uint64_t seed) {
    const std::size_t n = labels.n_samples();
    require(n_pos <= labels.n_positive_pairs(), errc::not_enough_pairs,
            "requested " + std::to_string(n_pos) + " positive pairs, only " +
                std::to_string(labels.n_positive_pairs()) + " exist");
    require(n_neg <= labels.n_negative_pairs(), errc::not_enough_pairs,
            "requested " + std::to_string(n_neg) + " negative pairs, only " +
                std::to_string(labels.n_negative_pairs()) + " exist");

    auto rng = make_rng(seed);
    std::vector<IndexPair> out;
    out.reserve(n_pos + n_neg + (include_diagonal ? n : 0));

    {
        std::vector<std::uint32_t> order(labels.n_positive_pairs());
        std::iota(order.begin(), order.end(), 0u);
        deterministic_shuffle(order, rng);
        for (std::size_t t = 0; t < n_pos; ++t) {
            const auto& pr = labels.positive_pairs()[order[t]];
            out.push_back({pr.first, pr.second, +1.0});
        }
    }

    if (n_neg > 0) {
        const std::size_t total_neg = labels.n_negative_pairs();
        std::unordered_set<std::uint64_t> taken;
        if (n <= 8192 && n_neg * 2 > total_neg) {
            // Dense regime: enumerate every negative and shuffle.
            std::vector<std::pair<std::uint32_t, std::uint32_t>> negatives;
            negatives.reserve(total_neg);
            for (std::uint32_t i = 0; i < n; ++i)
                for (std::uint32_t j = i + 1; j < n; ++j)
                    if (labels.label(i, j) < 0) negatives.emplace_back(i, j);
            deterministic_shuffle(negatives, rng);
            for (std::size_t t = 0; t < n_neg; ++t)
                out.push_back({negatives[t].first, negatives[t].second, -1.0});
        } else {
            std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n - 1));
            std::size_t got = 0;
            while (got < n_neg) {
                std::uint32_t i = pick(rng);
                std::uint32_t j = pick(rng);
                if (i == j) continue;
                if (i > j) std::swap(i, j);
                if (labels.label(i, j) > 0) continue;
                const std::uint64_t key = (static_cast<std::uint64_t>(i) << 32) | j;
                if (!taken.insert(key).second) continue;
                out.push_back({i, j, -1.0});
                ++got;
            }
        }
    }

    if (include_diagonal)
        for (std::uint32_t i = 0; i < n; ++i) out.push_back({i, i, +1.0});
    return out;
}

/// Debug dump of the positive-pair list as "i,j" CSV.
inline void dump_positive_pairs_csv(const PairLabelSet& labels,
                                    const std::filesystem::path& path) {
    std::ostringstream out;
    out << "i,j\n";
    for (const auto& [i, j] : labels.positive_pairs()) out << i << "," << j << "\n";
    write_text_atomic(path, out.str());
}

}  // namespace pbank
