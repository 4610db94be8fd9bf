#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "pbank/error.hpp"
#include "pbank/rng.hpp"

namespace pbank {

enum class KernelKind : std::uint8_t { polynomial = 0, rbf = 1 };

/// Kernel selection. For RBF the bandwidth may be left on "auto", in which
/// case training resolves it per subspace via the median heuristic and
/// records the resolved value.
struct KernelSpec {
    KernelKind kind = KernelKind::rbf;
    std::uint32_t tau = 2;    // polynomial degree; meaningful for kind==polynomial
    double sigma = 0.0;       // RBF bandwidth; meaningful for kind==rbf
    bool sigma_auto = false;

    static KernelSpec polynomial(std::uint32_t tau) {
        require(tau >= 1, errc::invalid_argument, "polynomial degree must be >= 1");
        return {KernelKind::polynomial, tau, 0.0, false};
    }

    static KernelSpec rbf(double sigma) {
        require(sigma > 0.0, errc::invalid_argument, "sigma must be > 0");
        return {KernelKind::rbf, 0, sigma, false};
    }

    static KernelSpec rbf_auto() { return {KernelKind::rbf, 0, 0.0, true}; }

    bool resolved() const {
        return kind == KernelKind::polynomial ? tau >= 1 : (!sigma_auto && sigma > 0.0);
    }

    KernelSpec with_sigma(double sigma) const {
        KernelSpec s = *this;
        s.sigma = sigma;
        s.sigma_auto = false;
        return s;
    }

    const char* name() const { return kind == KernelKind::polynomial ? "poly" : "rbf"; }
};

/// kappa(u, v): (u.v + 1)^tau for the polynomial kernel,
/// exp(-||u - v||^2 / sigma^2) for RBF. The spec must be resolved.
inline double kernel_eval(const KernelSpec& spec, std::span<const double> u,
                          std::span<const double> v) {
    require(u.size() == v.size(), errc::dimension_mismatch, "kernel inputs differ in length");
    require(spec.resolved(), errc::invalid_argument, "kernel sigma is unresolved");
    if (spec.kind == KernelKind::polynomial) {
        double base = 1.0;
        for (std::size_t t = 0; t < u.size(); ++t) base += u[t] * v[t];
        double acc = 1.0;
        for (std::uint32_t e = 0; e < spec.tau; ++e) acc *= base;
        return acc;
    }
    double d2 = 0.0;
    for (std::size_t t = 0; t < u.size(); ++t) {
        const double diff = u[t] - v[t];
        d2 += diff * diff;
    }
    return std::exp(-d2 / (spec.sigma * spec.sigma));
}

/// Uniform without-replacement draw of n basis-sample indices, returned in
/// ascending order; the same indices serve all subspaces.
inline std::vector<std::uint64_t> select_basis(std::size_t n_total, std::size_t n,
                                               std::uint64_t seed) {
    require(n >= 1, errc::invalid_argument, "need at least one basis sample");
    require(n <= n_total, errc::n_too_large,
            "n = " + std::to_string(n) + " exceeds available " + std::to_string(n_total));
    std::vector<std::uint64_t> all(n_total);
    std::iota(all.begin(), all.end(), 0ull);
    auto rng = make_rng(seed, 0xBA515ull);
    deterministic_shuffle(all, rng);
    all.resize(n);
    std::sort(all.begin(), all.end());
    return all;
}

/// Symmetric kernel Gram matrix over n row-major points of width m.
struct KernelMatrix {
    std::size_t n = 0;
    std::vector<double> values;  // n x n row-major

    double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }

    /// k_i = [kappa(x_1, x_i), ..., kappa(x_n, x_i)]; equals row i by symmetry.
    std::span<const double> column(std::size_t i) const { return {values.data() + i * n, n}; }
};

inline KernelMatrix build_kernel_matrix(const KernelSpec& spec, const std::vector<double>& points,
                                        std::size_t n, std::size_t m) {
    KernelMatrix K;
    K.n = n;
    K.values.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::span<const double> xi{points.data() + i * m, m};
        for (std::size_t j = i; j < n; ++j) {
            const std::span<const double> xj{points.data() + j * m, m};
            const double v = kernel_eval(spec, xi, xj);
            K.values[i * n + j] = v;
            K.values[j * n + i] = v;
        }
    }
    return K;
}

/// mu_i = (1/denom) sum_j kappa(x_i, x_j) over the basis points; denom
/// defaults to the basis count n, which is exactly what makes the encoded
/// bits zero-centered over the basis set. denom_override > 0 substitutes a
/// different normalizer (e.g. the full training count).
inline std::vector<double> compute_mu(const KernelSpec& spec, const std::vector<double>& basis,
                                      std::size_t n, std::size_t m,
                                      std::size_t denom_override = 0) {
    require(n >= 1, errc::invalid_argument, "basis must be nonempty");
    const auto K = build_kernel_matrix(spec, basis, n, m);
    const double denom = static_cast<double>(denom_override > 0 ? denom_override : n);
    std::vector<double> mu(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += K.at(i, j);
        mu[i] = s / denom;
    }
    return mu;
}

inline std::vector<double> mu_from_matrix(const KernelMatrix& K, std::size_t denom_override = 0) {
    const double denom = static_cast<double>(denom_override > 0 ? denom_override : K.n);
    std::vector<double> mu(K.n, 0.0);
    for (std::size_t i = 0; i < K.n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < K.n; ++j) s += K.at(i, j);
        mu[i] = s / denom;
    }
    return mu;
}

/// Median of pairwise Euclidean distances (lower median); the standard
/// heuristic behind sigma = "auto". Falls back to 1.0 when all points
/// coincide.
inline double median_pairwise_distance(const std::vector<double>& points, std::size_t n,
                                       std::size_t m) {
    if (n < 2) return 1.0;
    std::vector<double> dists;
    dists.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double d2 = 0.0;
            for (std::size_t t = 0; t < m; ++t) {
                const double diff = points[i * m + t] - points[j * m + t];
                d2 += diff * diff;
            }
            dists.push_back(std::sqrt(d2));
        }
    }
    const std::size_t mid = (dists.size() - 1) / 2;
    std::nth_element(dists.begin(), dists.begin() + mid, dists.end());
    const double med = dists[mid];
    return med > 0.0 ? med : 1.0;
}

}  // namespace pbank
