#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "pbank/codes.hpp"
#include "pbank/kernel_trainer.hpp"
#include "pbank/linear_trainer.hpp"
#include "pbank/matrix.hpp"
#include "pbank/parallel.hpp"
#include "pbank/rng.hpp"

namespace pbank {

/// Instrumentation counters backing the storage/coding-cost contract:
/// the linear encoder performs exactly D multiply-accumulates per sample,
/// and the kernel encoder n*d kernel evaluations per sample.
struct EncodeStats {
    std::uint64_t multiply_accumulates = 0;
    std::uint64_t kernel_evaluations = 0;
};

namespace detail {

inline std::uint64_t tagged_fingerprint(const std::string& tag,
                                        std::initializer_list<std::uint64_t> params) {
    std::vector<std::uint8_t> bytes(tag.begin(), tag.end());
    BinaryWriter w(bytes);
    for (auto p : params) w.write_u64(p);
    return fnv1a64(bytes);
}

}  // namespace detail

/// Bit p of sample i is 1 iff w_(p) . x_i(p) >= 0 (sign of 0 counts as
/// positive so codes stay deterministic).
inline BinaryCodeSet encode_linear(const LinearBank& bank, const FeatureMatrix& x,
                                   EncodeStats* stats = nullptr, unsigned threads = 1) {
    require(x.n_dims() == bank.partition.n_dims, errc::dimension_mismatch,
            "matrix has D = " + std::to_string(x.n_dims()) + ", bank expects D = " +
                std::to_string(bank.partition.n_dims));
    BinaryCodeSet codes(x.n_samples(), bank.n_bits(), bank_fingerprint(bank));
    std::vector<std::uint64_t> macs(x.n_samples(), 0);
    parallel_for(x.n_samples(), threads, [&](std::size_t i) {
        const auto row = x.row(i);
        for (std::size_t p = 0; p < bank.n_bits(); ++p) {
            const auto& w = bank.weights[p];
            const auto& dims = bank.partition.member_lists[p];
            double acc = 0.0;
            for (std::size_t t = 0; t < dims.size(); ++t) acc += w[t] * row[dims[t]];
            macs[i] += dims.size();
            if (bank.augmented) {
                acc += w[dims.size()] * -1.0;
                macs[i] += 1;
            }
            codes.set_bit(i, p, acc >= 0.0);
        }
    });
    if (stats)
        for (auto m : macs) stats->multiply_accumulates += m;
    return codes;
}

/// Bit p of sample i is 1 iff g_p(x_i(p)) >= 0.
inline BinaryCodeSet encode_kernel(const KernelBank& bank, const FeatureMatrix& x,
                                   EncodeStats* stats = nullptr, unsigned threads = 1) {
    require(x.n_dims() == bank.partition.n_dims, errc::dimension_mismatch,
            "matrix has D = " + std::to_string(x.n_dims()) + ", bank expects D = " +
                std::to_string(bank.partition.n_dims));
    BinaryCodeSet codes(x.n_samples(), bank.n_bits(), bank_fingerprint(bank));
    std::vector<std::uint64_t> evals(x.n_samples(), 0);
    parallel_for(x.n_samples(), threads, [&](std::size_t i) {
        const auto row = x.row(i);
        std::vector<double> x_sub;
        for (std::size_t p = 0; p < bank.n_bits(); ++p) {
            const auto& dims = bank.partition.member_lists[p];
            x_sub.resize(dims.size());
            for (std::size_t t = 0; t < dims.size(); ++t) x_sub[t] = row[dims[t]];
            const double g = predict_kernel(bank, p, x_sub, &evals[i]);
            codes.set_bit(i, p, g >= 0.0);
        }
    });
    if (stats)
        for (auto e : evals) stats->kernel_evaluations += e;
    return codes;
}

/// Baseline: D bits per sample, bit j = 1 iff x_ij >= 0.
inline BinaryCodeSet encode_sign_baseline(const FeatureMatrix& x) {
    BinaryCodeSet codes(x.n_samples(), x.n_dims(),
                        detail::tagged_fingerprint("pbank.sign", {x.n_dims()}));
    for (std::size_t i = 0; i < x.n_samples(); ++i) {
        const auto row = x.row(i);
        for (std::size_t j = 0; j < x.n_dims(); ++j) codes.set_bit(i, j, row[j] >= 0.0f);
    }
    return codes;
}

/// Seeded Gaussian matrix G (row-major D x d) behind the LSH baseline;
/// exposed so its codes can be checked against an explicit multiply.
inline std::vector<double> lsh_projection(std::size_t n_dims, std::size_t d,
                                          std::uint64_t seed) {
    auto rng = make_rng(seed, 0x15135ull);
    std::vector<double> projection(n_dims * d);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& v : projection) v = gauss(rng);
    return projection;
}

/// Baseline: seeded Gaussian projection matrix G (D x d); bit p = 1 iff
/// (G' x)_p >= 0. Random-hyperplane hashing at an equal bit budget.
inline BinaryCodeSet encode_lsh_baseline(const FeatureMatrix& x, std::size_t d,
                                         std::uint64_t seed, unsigned threads = 1) {
    require(d >= 1, errc::invalid_argument, "need at least one bit");
    const std::size_t D = x.n_dims();
    const std::vector<double> projection = lsh_projection(D, d, seed);

    BinaryCodeSet codes(x.n_samples(), d,
                        detail::tagged_fingerprint("pbank.lsh", {D, d, seed}));
    parallel_for(x.n_samples(), threads, [&](std::size_t i) {
        const auto row = x.row(i);
        for (std::size_t p = 0; p < d; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < D; ++j) acc += projection[j * d + p] * row[j];
            codes.set_bit(i, p, acc >= 0.0);
        }
    });
    return codes;
}

}  // namespace pbank
