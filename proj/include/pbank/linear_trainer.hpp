#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pbank/agd.hpp"
#include "pbank/binary_io.hpp"
#include "pbank/hinge.hpp"
#include "pbank/pair_labels.hpp"
#include "pbank/parallel.hpp"
#include "pbank/partition.hpp"

namespace pbank {

/// One max-margin weight vector per subspace; their sign outputs
/// concatenate into a d-bit code. Stores exactly D scalars total
/// (D + d when trained with the bias coordinate).
struct LinearBank {
    SubspacePartition partition;
    std::vector<std::vector<double>> weights;  // [p], length m_p (+1 if augmented)
    bool augmented = false;

    std::size_t n_bits() const { return partition.n_subspaces; }

    std::size_t stored_scalars() const {
        std::size_t total = 0;
        for (const auto& w : weights) total += w.size();
        return total;
    }
};

/// Per-bank training diagnostics: one AGD trace per subspace.
struct BankTrainReport {
    std::vector<AgdTrace> traces;

    std::vector<std::size_t> degenerate_subspaces() const {
        std::vector<std::size_t> out;
        for (std::size_t p = 0; p < traces.size(); ++p)
            if (traces[p].degenerate) out.push_back(p);
        return out;
    }
};

namespace detail {

/// Hinge-pair problem over a row-major double matrix, as consumed by
/// agd_minimize. Dot products are cached per evaluation epoch so each
/// batch pass touches every involved sample once.
class LinearPairProblem {
public:
    LinearPairProblem(const std::vector<double>& data, std::size_t n_samples, std::size_t dim,
                      const PairLabelSet& labels, const TrainerConfig& cfg)
        : data_(&data), n_(n_samples), dim_(dim), labels_(&labels), lambda_(cfg.lambda),
          batch_cfg_(cfg.pair_batch), dot_cache_(n_samples, 0.0), stamp_(n_samples, 0) {
        eff_pos_ = std::min(batch_cfg_.n_pos, labels.n_positive_pairs());
        eff_neg_ = std::min(batch_cfg_.n_neg, labels.n_negative_pairs());
    }

    std::size_t dim() const { return dim_; }

    void sample_batch(std::mt19937_64& rng) {
        batch_ = sample_pairs(*labels_, eff_pos_, eff_neg_, batch_cfg_.include_diagonal, rng());
    }

    const std::vector<IndexPair>& batch() const { return batch_; }

    bool has_zero_margin(const std::vector<double>& w) const {
        begin_epoch();
        for (const auto& p : batch_) {
            if (1.0 - p.label * cached_dot(w, p.i) * cached_dot(w, p.j) == 0.0) return true;
        }
        return false;
    }

    double batch_objective(const std::vector<double>& w) const {
        begin_epoch();
        double obj = 0.5 * dot(w, w);
        for (const auto& p : batch_) {
            const double margin = 1.0 - p.label * cached_dot(w, p.i) * cached_dot(w, p.j);
            if (margin > 0.0) obj += lambda_ * margin;
        }
        return obj;
    }

    // Full gradient w + lambda * sum of active-pair hinge gradients.
    std::vector<double> batch_gradient(const std::vector<double>& w) const {
        begin_epoch();
        std::vector<double> g = w;
        for (const auto& p : batch_) {
            const double di = cached_dot(w, p.i);
            const double dj = cached_dot(w, p.j);
            if (1.0 - p.label * di * dj <= 0.0) continue;
            const double ci = -lambda_ * p.label * dj;
            const double cj = -lambda_ * p.label * di;
            const double* xi = row(p.i);
            const double* xj = row(p.j);
            for (std::size_t t = 0; t < dim_; ++t) g[t] += ci * xi[t] + cj * xj[t];
        }
        return g;
    }

private:
    const double* row(std::uint32_t i) const { return data_->data() + i * dim_; }

    void begin_epoch() const { ++epoch_; }

    double cached_dot(const std::vector<double>& w, std::uint32_t i) const {
        if (stamp_[i] != epoch_) {
            stamp_[i] = epoch_;
            const double* r = row(i);
            double s = 0.0;
            for (std::size_t t = 0; t < dim_; ++t) s += w[t] * r[t];
            dot_cache_[i] = s;
        }
        return dot_cache_[i];
    }

    const std::vector<double>* data_;
    std::size_t n_;
    std::size_t dim_;
    const PairLabelSet* labels_;
    double lambda_;
    PairBatchConfig batch_cfg_;
    std::size_t eff_pos_ = 0;
    std::size_t eff_neg_ = 0;
    std::vector<IndexPair> batch_;
    mutable std::vector<double> dot_cache_;
    mutable std::vector<std::uint64_t> stamp_;
    mutable std::uint64_t epoch_ = 0;
};

inline bool all_rows_identical(const FeatureMatrix& x) {
    const auto first = x.row(0);
    for (std::size_t i = 1; i < x.n_samples(); ++i) {
        const auto r = x.row(i);
        for (std::size_t t = 0; t < r.size(); ++t)
            if (r[t] != first[t]) return false;
    }
    return true;
}

inline std::vector<double> widen_rows(const FeatureMatrix& x, bool augment_bias) {
    const std::size_t dim = x.n_dims() + (augment_bias ? 1 : 0);
    std::vector<double> data(x.n_samples() * dim);
    for (std::size_t i = 0; i < x.n_samples(); ++i) {
        const auto r = x.row(i);
        double* dst = data.data() + i * dim;
        for (std::size_t t = 0; t < r.size(); ++t) dst[t] = r[t];
        if (augment_bias) dst[x.n_dims()] = -1.0;
    }
    return data;
}

}  // namespace detail

/// Trains one subspace's weight vector on the given (already restricted)
/// data. A subspace where every sample is identical cannot carry a useful
/// bit: it gets a fixed unit vector and the trace is flagged degenerate.
inline std::vector<double> train_subspace(const FeatureMatrix& x_sub, const PairLabelSet& labels,
                                          const TrainerConfig& cfg, AgdTrace* trace = nullptr) {
    cfg.validate();
    require(labels.n_samples() == x_sub.n_samples(), errc::shape_mismatch,
            "label set covers a different sample count");
    const std::size_t dim = x_sub.n_dims() + (cfg.augment_bias ? 1 : 0);

    if (detail::all_rows_identical(x_sub)) {
        if (trace) trace->degenerate = true;
        std::vector<double> w(dim, 0.0);
        w[0] = 1.0;
        return w;
    }

    const auto data = detail::widen_rows(x_sub, cfg.augment_bias);
    detail::LinearPairProblem problem(data, x_sub.n_samples(), dim, labels, cfg);
    auto rng = make_rng(cfg.seed);
    return agd_minimize(problem, cfg, rng, trace);
}

/// Trains every subspace independently (embarrassingly parallel); subspace
/// p uses the seed cfg.seed ^ p so banks are reproducible regardless of
/// thread count.
inline LinearBank train_bank(const FeatureMatrix& x, const SubspacePartition& partition,
                             const PairLabelSet& labels, const TrainerConfig& cfg,
                             unsigned threads = 1, BankTrainReport* report = nullptr) {
    cfg.validate();
    require(partition.n_dims == x.n_dims(), errc::dimension_mismatch,
            "partition covers D = " + std::to_string(partition.n_dims) + ", matrix has D = " +
                std::to_string(x.n_dims()));

    LinearBank bank;
    bank.partition = partition;
    bank.augmented = cfg.augment_bias;
    bank.weights.resize(partition.n_subspaces);
    if (report) report->traces.assign(partition.n_subspaces, {});

    parallel_for(partition.n_subspaces, threads, [&](std::size_t p) {
        FeatureMatrix x_sub = x.restrict_to_dims(partition.member_lists[p]);
        TrainerConfig sub_cfg = cfg;
        sub_cfg.seed = cfg.seed ^ static_cast<std::uint64_t>(p);
        bank.weights[p] =
            train_subspace(x_sub, labels, sub_cfg, report ? &report->traces[p] : nullptr);
    });
    return bank;
}

// --- linear bank file format -------------------------------------------------
// magic "PBLB", u32 version=1, u8 flags (bit0 = bias-augmented),
// embedded partition, then per-subspace weight vectors as float64
// (m_p scalars each; m_p + 1 when augmented).

inline constexpr char kLinearBankMagic[4] = {'P', 'B', 'L', 'B'};
inline constexpr std::uint32_t kLinearBankVersion = 1;

inline std::vector<std::uint8_t> serialize_linear_bank(const LinearBank& bank) {
    std::vector<std::uint8_t> bytes;
    BinaryWriter w(bytes);
    w.write_magic(kLinearBankMagic);
    w.write_u32(kLinearBankVersion);
    w.write_u8(bank.augmented ? 1 : 0);
    write_partition(w, bank.partition);
    for (const auto& wp : bank.weights) w.write_f64_vec(wp);
    return bytes;
}

inline void save_linear_bank(const LinearBank& bank, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_linear_bank(bank));
}

inline LinearBank load_linear_bank(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    BinaryReader r(bytes.data(), bytes.size());
    r.expect_magic(kLinearBankMagic, "linear bank");
    const auto version = r.read_u32();
    require(version == kLinearBankVersion, errc::bad_magic,
            "unsupported linear-bank version " + std::to_string(version));
    LinearBank bank;
    bank.augmented = (r.read_u8() & 1) != 0;
    bank.partition = read_partition(r);
    bank.weights.resize(bank.partition.n_subspaces);
    for (std::size_t p = 0; p < bank.partition.n_subspaces; ++p) {
        const std::size_t len = bank.partition.cluster_size(p) + (bank.augmented ? 1 : 0);
        bank.weights[p] = r.read_f64_vec(len);
        for (double v : bank.weights[p])
            require(std::isfinite(v), errc::non_finite_value, "non-finite bank weight");
    }
    require(r.at_end(), errc::shape_mismatch, "trailing bytes in bank file");
    return bank;
}

/// 8-byte fingerprint binding code sets to the bank that produced them.
inline std::uint64_t bank_fingerprint(const LinearBank& bank) {
    return fnv1a64(serialize_linear_bank(bank));
}

}  // namespace pbank
