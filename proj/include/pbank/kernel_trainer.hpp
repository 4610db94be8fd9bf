#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pbank/agd.hpp"
#include "pbank/binary_io.hpp"
#include "pbank/kernel.hpp"
#include "pbank/linear_trainer.hpp"
#include "pbank/pair_labels.hpp"
#include "pbank/parallel.hpp"
#include "pbank/partition.hpp"

namespace pbank {

/// Kernelized bank: per subspace, a coefficient vector over the shared n
/// basis samples plus the zero-centering bias b = a.mu. The basis data is
/// carried along so encoding never needs the training matrix.
struct KernelBank {
    KernelSpec spec;  // as requested; sigma may have been "auto"
    SubspacePartition partition;
    std::vector<std::uint64_t> basis_indices;     // n ascending training indices
    std::vector<std::vector<double>> basis_data;  // [p]: n x m_p row-major
    std::vector<std::vector<double>> mu;          // [p]: length n
    std::vector<std::vector<double>> coeffs;      // [p]: length n
    std::vector<double> bias;                     // [p]: a . mu
    std::vector<double> resolved_sigma;           // [p]; 0 for polynomial kernels

    std::size_t n_basis() const { return basis_indices.size(); }
    std::size_t n_bits() const { return partition.n_subspaces; }

    /// Concrete kernel for subspace p (auto sigma already resolved).
    KernelSpec subspace_spec(std::size_t p) const {
        if (spec.kind == KernelKind::rbf) return spec.with_sigma(resolved_sigma[p]);
        return spec;
    }
};

/// g_p(x) = sum_i a_i kappa(basis_i, x) - b. Counts one kernel evaluation
/// per basis sample when a stats counter is supplied.
inline double predict_kernel(const KernelBank& bank, std::size_t p, std::span<const double> x_sub,
                             std::uint64_t* kernel_eval_count = nullptr) {
    const std::size_t n = bank.n_basis();
    const std::size_t m = bank.partition.cluster_size(p);
    require(x_sub.size() == m, errc::dimension_mismatch,
            "input has " + std::to_string(x_sub.size()) + " dims, subspace has " +
                std::to_string(m));
    const KernelSpec spec = bank.subspace_spec(p);
    const auto& basis = bank.basis_data[p];
    const auto& a = bank.coeffs[p];
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += a[i] * kernel_eval(spec, {basis.data() + i * m, m}, x_sub);
    }
    if (kernel_eval_count) *kernel_eval_count += n;
    return acc - bank.bias[p];
}

/// 0.5 a'Ka + lambda * sum of hinge terms over basis-local pairs, with
/// g_i = a.k_i - b and b = a.mu.
inline double kernel_objective(const std::vector<double>& a, const KernelMatrix& K,
                               const std::vector<IndexPair>& pairs, const std::vector<double>& mu,
                               double lambda) {
    const std::size_t n = a.size();
    require(K.n == n && mu.size() == n, errc::shape_mismatch, "kernel objective shape mismatch");
    double quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += K.at(i, j) * a[j];
        quad += a[i] * s;
    }
    double obj = 0.5 * quad;
    const double b = dot({a.data(), n}, {mu.data(), n});
    for (const auto& p : pairs) {
        const double gi = dot({a.data(), n}, K.column(p.i)) - b;
        const double gj = dot({a.data(), n}, K.column(p.j)) - b;
        const double margin = 1.0 - p.label * gi * gj;
        if (margin > 0.0) obj += lambda * margin;
    }
    return obj;
}

/// Gradient of kernel_objective: Ka plus, per active pair,
/// -lambda * l * (g_j (k_i - mu) + g_i (k_j - mu)).
inline std::vector<double> kernel_gradient(const std::vector<double>& a, const KernelMatrix& K,
                                           const std::vector<IndexPair>& pairs,
                                           const std::vector<double>& mu, double lambda) {
    const std::size_t n = a.size();
    require(K.n == n && mu.size() == n, errc::shape_mismatch, "kernel gradient shape mismatch");
    std::vector<double> g(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += K.at(i, j) * a[j];
        g[i] = s;
    }
    const double b = dot({a.data(), n}, {mu.data(), n});
    for (const auto& p : pairs) {
        const double gi = dot({a.data(), n}, K.column(p.i)) - b;
        const double gj = dot({a.data(), n}, K.column(p.j)) - b;
        if (1.0 - p.label * gi * gj <= 0.0) continue;
        const auto ki = K.column(p.i);
        const auto kj = K.column(p.j);
        const double ci = -lambda * p.label * gj;
        const double cj = -lambda * p.label * gi;
        for (std::size_t t = 0; t < n; ++t)
            g[t] += ci * (ki[t] - mu[t]) + cj * (kj[t] - mu[t]);
    }
    return g;
}

namespace detail {

/// Kernel-side hinge problem for agd_minimize; mirrors LinearPairProblem
/// with prediction values g_i cached per evaluation epoch.
class KernelPairProblem {
public:
    KernelPairProblem(const KernelMatrix& K, const std::vector<double>& mu,
                      const PairLabelSet& labels, const TrainerConfig& cfg)
        : K_(&K), mu_(&mu), labels_(&labels), lambda_(cfg.lambda), batch_cfg_(cfg.pair_batch),
          g_cache_(K.n, 0.0), stamp_(K.n, 0) {
        eff_pos_ = std::min(batch_cfg_.n_pos, labels.n_positive_pairs());
        eff_neg_ = std::min(batch_cfg_.n_neg, labels.n_negative_pairs());
    }

    std::size_t dim() const { return K_->n; }

    void sample_batch(std::mt19937_64& rng) {
        batch_ = sample_pairs(*labels_, eff_pos_, eff_neg_, batch_cfg_.include_diagonal, rng());
    }

    bool has_zero_margin(const std::vector<double>& a) const {
        begin_epoch(a);
        for (const auto& p : batch_)
            if (1.0 - p.label * cached_g(a, p.i) * cached_g(a, p.j) == 0.0) return true;
        return false;
    }

    double batch_objective(const std::vector<double>& a) const {
        begin_epoch(a);
        const std::size_t n = K_->n;
        double quad = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += K_->at(i, j) * a[j];
            quad += a[i] * s;
        }
        double obj = 0.5 * quad;
        for (const auto& p : batch_) {
            const double margin = 1.0 - p.label * cached_g(a, p.i) * cached_g(a, p.j);
            if (margin > 0.0) obj += lambda_ * margin;
        }
        return obj;
    }

    std::vector<double> batch_gradient(const std::vector<double>& a) const {
        begin_epoch(a);
        const std::size_t n = K_->n;
        std::vector<double> g(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += K_->at(i, j) * a[j];
            g[i] = s;
        }
        const auto& mu = *mu_;
        for (const auto& p : batch_) {
            const double gi = cached_g(a, p.i);
            const double gj = cached_g(a, p.j);
            if (1.0 - p.label * gi * gj <= 0.0) continue;
            const auto ki = K_->column(p.i);
            const auto kj = K_->column(p.j);
            const double ci = -lambda_ * p.label * gj;
            const double cj = -lambda_ * p.label * gi;
            for (std::size_t t = 0; t < n; ++t)
                g[t] += ci * (ki[t] - mu[t]) + cj * (kj[t] - mu[t]);
        }
        return g;
    }

private:
    void begin_epoch(const std::vector<double>& a) const {
        ++epoch_;
        bias_ = dot({a.data(), a.size()}, {mu_->data(), mu_->size()});
    }

    double cached_g(const std::vector<double>& a, std::uint32_t i) const {
        if (stamp_[i] != epoch_) {
            stamp_[i] = epoch_;
            const auto ki = K_->column(i);
            double s = 0.0;
            for (std::size_t t = 0; t < a.size(); ++t) s += a[t] * ki[t];
            g_cache_[i] = s - bias_;
        }
        return g_cache_[i];
    }

    const KernelMatrix* K_;
    const std::vector<double>* mu_;
    const PairLabelSet* labels_;
    double lambda_;
    PairBatchConfig batch_cfg_;
    std::size_t eff_pos_ = 0;
    std::size_t eff_neg_ = 0;
    std::vector<IndexPair> batch_;
    mutable double bias_ = 0.0;
    mutable std::vector<double> g_cache_;
    mutable std::vector<std::uint64_t> stamp_;
    mutable std::uint64_t epoch_ = 0;
};

}  // namespace detail

/// Trains the kernelized bank: shared basis sample selection, per-subspace
/// Gram matrix, mu and bias, and the same AGD schedule as the linear
/// trainer. Pair constraints are restricted to basis-sample pairs.
inline KernelBank train_kernel_bank(const FeatureMatrix& x, const SubspacePartition& partition,
                                    const PairLabelSet& labels, const KernelSpec& spec,
                                    std::size_t n, const TrainerConfig& cfg, unsigned threads = 1,
                                    BankTrainReport* report = nullptr) {
    cfg.validate();
    require(partition.n_dims == x.n_dims(), errc::dimension_mismatch,
            "partition covers a different dimension count");
    require(labels.n_samples() == x.n_samples(), errc::shape_mismatch,
            "label set covers a different sample count");

    KernelBank bank;
    bank.spec = spec;
    bank.partition = partition;
    bank.basis_indices = select_basis(x.n_samples(), n, cfg.seed);
    const PairLabelSet basis_labels = labels.restrict_to(bank.basis_indices);

    const std::size_t d = partition.n_subspaces;
    bank.basis_data.resize(d);
    bank.mu.resize(d);
    bank.coeffs.resize(d);
    bank.bias.assign(d, 0.0);
    bank.resolved_sigma.assign(d, spec.kind == KernelKind::rbf && !spec.sigma_auto ? spec.sigma : 0.0);
    if (report) report->traces.assign(d, {});

    parallel_for(d, threads, [&](std::size_t p) {
        const auto& dims = partition.member_lists[p];
        const std::size_t m = dims.size();
        auto& basis = bank.basis_data[p];
        basis.resize(n * m);
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = x.row(bank.basis_indices[i]);
            for (std::size_t t = 0; t < m; ++t) basis[i * m + t] = row[dims[t]];
        }

        KernelSpec sub_spec = spec;
        if (spec.kind == KernelKind::rbf && spec.sigma_auto)
            sub_spec = spec.with_sigma(median_pairwise_distance(basis, n, m));
        if (spec.kind == KernelKind::rbf) bank.resolved_sigma[p] = sub_spec.sigma;

        const auto K = build_kernel_matrix(sub_spec, basis, n, m);
        bank.mu[p] = mu_from_matrix(K, cfg.kernel_mu_full_n ? x.n_samples() : 0);

        AgdTrace* trace = report ? &report->traces[p] : nullptr;

        // Degenerate subspace: all basis rows identical -> fixed unit
        // coefficient vector, same convention as the linear trainer.
        bool identical = true;
        for (std::size_t i = 1; i < n && identical; ++i)
            for (std::size_t t = 0; t < m; ++t)
                if (basis[i * m + t] != basis[t]) {
                    identical = false;
                    break;
                }
        if (identical) {
            if (trace) trace->degenerate = true;
            bank.coeffs[p].assign(n, 0.0);
            bank.coeffs[p][0] = 1.0;
        } else {
            TrainerConfig sub_cfg = cfg;
            sub_cfg.seed = cfg.seed ^ static_cast<std::uint64_t>(p);
            detail::KernelPairProblem problem(K, bank.mu[p], basis_labels, sub_cfg);
            auto rng = make_rng(sub_cfg.seed);
            bank.coeffs[p] = agd_minimize(problem, sub_cfg, rng, trace);
        }
        bank.bias[p] = dot({bank.coeffs[p].data(), n}, {bank.mu[p].data(), n});
    });
    return bank;
}

// --- kernel bank file format ---------------------------------------------------
// magic "PBKB", u32 version=1, kernel spec (kind u8, tau u32, sigma f64;
// sigma 0 where unused or auto), n u64, embedded partition, basis_indices
// (n x u64), then per subspace: basis_data (n*m_p f64), mu (n f64),
// a (n f64), b (f64), resolved sigma (f64).

inline constexpr char kKernelBankMagic[4] = {'P', 'B', 'K', 'B'};
inline constexpr std::uint32_t kKernelBankVersion = 1;

inline std::vector<std::uint8_t> serialize_kernel_bank(const KernelBank& bank) {
    std::vector<std::uint8_t> bytes;
    BinaryWriter w(bytes);
    w.write_magic(kKernelBankMagic);
    w.write_u32(kKernelBankVersion);
    w.write_u8(static_cast<std::uint8_t>(bank.spec.kind));
    w.write_u32(bank.spec.tau);
    w.write_f64(bank.spec.sigma_auto ? 0.0 : bank.spec.sigma);
    w.write_u64(bank.n_basis());
    write_partition(w, bank.partition);
    for (auto idx : bank.basis_indices) w.write_u64(idx);
    for (std::size_t p = 0; p < bank.partition.n_subspaces; ++p) {
        w.write_f64_vec(bank.basis_data[p]);
        w.write_f64_vec(bank.mu[p]);
        w.write_f64_vec(bank.coeffs[p]);
        w.write_f64(bank.bias[p]);
        w.write_f64(bank.resolved_sigma[p]);
    }
    return bytes;
}

inline void save_kernel_bank(const KernelBank& bank, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_kernel_bank(bank));
}

inline KernelBank load_kernel_bank(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    BinaryReader r(bytes.data(), bytes.size());
    r.expect_magic(kKernelBankMagic, "kernel bank");
    const auto version = r.read_u32();
    require(version == kKernelBankVersion, errc::bad_magic,
            "unsupported kernel-bank version " + std::to_string(version));
    KernelBank bank;
    const auto kind = r.read_u8();
    require(kind <= 1, errc::bad_magic, "unknown kernel kind " + std::to_string(kind));
    bank.spec.kind = static_cast<KernelKind>(kind);
    bank.spec.tau = r.read_u32();
    bank.spec.sigma = r.read_f64();
    bank.spec.sigma_auto = bank.spec.kind == KernelKind::rbf && bank.spec.sigma == 0.0;
    const auto n = r.read_u64();
    bank.partition = read_partition(r);
    bank.basis_indices.resize(n);
    for (auto& idx : bank.basis_indices) idx = r.read_u64();
    const std::size_t d = bank.partition.n_subspaces;
    bank.basis_data.resize(d);
    bank.mu.resize(d);
    bank.coeffs.resize(d);
    bank.bias.resize(d);
    bank.resolved_sigma.resize(d);
    for (std::size_t p = 0; p < d; ++p) {
        const std::size_t m = bank.partition.cluster_size(p);
        bank.basis_data[p] = r.read_f64_vec(n * m);
        bank.mu[p] = r.read_f64_vec(n);
        bank.coeffs[p] = r.read_f64_vec(n);
        bank.bias[p] = r.read_f64();
        bank.resolved_sigma[p] = r.read_f64();
        const double recomputed =
            dot({bank.coeffs[p].data(), bank.coeffs[p].size()}, {bank.mu[p].data(), n});
        require(recomputed == bank.bias[p], errc::shape_mismatch,
                "stored bias is inconsistent with coefficients and mu");
    }
    require(r.at_end(), errc::shape_mismatch, "trailing bytes in kernel bank file");
    return bank;
}

inline std::uint64_t bank_fingerprint(const KernelBank& bank) {
    return fnv1a64(serialize_kernel_bank(bank));
}

}  // namespace pbank
