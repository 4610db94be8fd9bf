#pragma once

// Shared synthetic-data builders for the unit and acceptance suites.

#include <algorithm>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "pbank/matrix.hpp"
#include "pbank/pair_labels.hpp"
#include "pbank/rng.hpp"

namespace testgen {

inline pbank::FeatureMatrix random_matrix(std::size_t n, std::size_t d, std::uint64_t seed,
                                          double scale = 1.0) {
    auto rng = pbank::make_rng(seed);
    std::normal_distribution<double> gauss(0.0, scale);
    std::vector<float> values(n * d);
    for (auto& v : values) v = static_cast<float>(gauss(rng));
    return pbank::FeatureMatrix(n, d, std::move(values));
}

/// Dimensions come in correlated blocks: each block shares a per-sample
/// latent value drawn from a small Gaussian mixture, plus independent
/// noise. Dimension clustering should recover the blocks, and per-block
/// subspaces are much easier to separate than the concatenated space.
inline pbank::FeatureMatrix blocked_matrix(std::size_t n, std::size_t n_dims,
                                           std::size_t n_blocks, std::size_t n_mix,
                                           double noise, std::uint64_t seed) {
    auto rng = pbank::make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick_mix(0, n_mix - 1);

    // Mixture centers per block.
    std::vector<std::vector<double>> centers(n_blocks, std::vector<double>(n_mix));
    for (auto& c : centers)
        for (auto& v : c) v = 2.0 * gauss(rng);

    std::vector<float> values(n * n_dims);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t mix = pick_mix(rng);
        for (std::size_t b = 0; b < n_blocks; ++b) {
            const double latent = centers[b][mix] + 0.3 * gauss(rng);
            const std::size_t begin = b * n_dims / n_blocks;
            const std::size_t end = (b + 1) * n_dims / n_blocks;
            for (std::size_t j = begin; j < end; ++j)
                values[i * n_dims + j] = static_cast<float>(latent + noise * gauss(rng));
        }
    }
    return pbank::FeatureMatrix(n, n_dims, std::move(values));
}

/// Two separated 1-D clusters at -center and +center; positive pairs
/// within a cluster, negative across. Linearly separable by construction.
struct SeparableData {
    pbank::FeatureMatrix matrix;
    pbank::PairLabelSet labels;
};

inline SeparableData separable_1d(std::size_t per_cluster, double center, double noise,
                                  std::uint64_t seed) {
    auto rng = pbank::make_rng(seed);
    std::normal_distribution<double> gauss(0.0, noise);
    const std::size_t n = 2 * per_cluster;
    std::vector<float> values(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double sign = i < per_cluster ? -1.0 : 1.0;
        values[i] = static_cast<float>(sign * center + gauss(rng));
    }
    std::vector<std::pair<std::uint32_t, std::uint32_t>> positives;
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = i + 1; j < n; ++j)
            if ((i < per_cluster) == (j < per_cluster)) positives.emplace_back(i, j);
    return {pbank::FeatureMatrix(n, 1, std::move(values)),
            pbank::PairLabelSet(n, 1, std::move(positives))};
}

/// XOR-structured data: every sample carries a global class; in each 2-D
/// subspace, class 0 sits near (+s,+s) quadrants and class 1 near (+s,-s)
/// quadrants (s = +-1 at random). Pairs within a class are positive,
/// across classes negative. No single hyperplane through the origin gives
/// same-sign products within a class, so the linear trainer is stuck while
/// an RBF expansion is not.
struct XorData {
    pbank::FeatureMatrix matrix;  // n x (2 * n_subspaces)
    pbank::PairLabelSet labels;
    std::vector<int> classes;
};

inline XorData xor_subspace_data(std::size_t per_class, std::size_t n_subspaces, double noise,
                                 std::uint64_t seed) {
    auto rng = pbank::make_rng(seed);
    std::normal_distribution<double> gauss(0.0, noise);
    std::uniform_int_distribution<int> coin(0, 1);
    const std::size_t n = 2 * per_class;
    const std::size_t n_dims = 2 * n_subspaces;

    std::vector<int> classes(n);
    for (std::size_t i = 0; i < n; ++i) classes[i] = i < per_class ? 0 : 1;

    std::vector<float> values(n * n_dims);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < n_subspaces; ++p) {
            const double s = coin(rng) ? 1.0 : -1.0;
            const double u = s;
            const double v = classes[i] == 0 ? s : -s;
            values[i * n_dims + 2 * p] = static_cast<float>(u + gauss(rng));
            values[i * n_dims + 2 * p + 1] = static_cast<float>(v + gauss(rng));
        }
    }

    std::vector<std::pair<std::uint32_t, std::uint32_t>> positives;
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = i + 1; j < n; ++j)
            if (classes[i] == classes[j]) positives.emplace_back(i, j);
    return {pbank::FeatureMatrix(n, n_dims, std::move(values)),
            pbank::PairLabelSet(n, 1, std::move(positives)), std::move(classes)};
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[(v.size() - 1) / 2];
}

}  // namespace testgen
