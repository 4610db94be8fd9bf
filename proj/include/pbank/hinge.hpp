#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "pbank/error.hpp"

namespace pbank {

/// One training pair as views into subspace data, with its +-1 label.
struct LabeledPair {
    std::span<const double> xi;
    std::span<const double> xj;
    double label;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) s += a[t] * b[t];
    return s;
}

/// 1 - l (w.xi)(w.xj); the hinge is active when this is positive.
inline double margin_expression(std::span<const double> w, std::span<const double> xi,
                                std::span<const double> xj, double label) {
    return 1.0 - label * dot(w, xi) * dot(w, xj);
}

/// max(0, 1 - l (w.xi)(w.xj))
inline double hinge_term(std::span<const double> w, std::span<const double> xi,
                         std::span<const double> xj, double label) {
    return std::max(0.0, margin_expression(w, xi, xj, label));
}

/// Gradient of hinge_term w.r.t. w: zero when the hinge is inactive,
/// otherwise -l ((w.xj) xi + (w.xi) xj). At an exactly-zero margin the
/// trainer perturbs w instead of consuming a subgradient, so the zero
/// vector returned there is never used.
inline std::vector<double> hinge_gradient(std::span<const double> w, std::span<const double> xi,
                                          std::span<const double> xj, double label) {
    std::vector<double> g(w.size(), 0.0);
    const double di = dot(w, xi);
    const double dj = dot(w, xj);
    if (1.0 - label * di * dj <= 0.0) return g;
    for (std::size_t t = 0; t < w.size(); ++t) g[t] = -label * (dj * xi[t] + di * xj[t]);
    return g;
}

/// 0.5 ||w||^2 + lambda * sum of hinge terms over the pair list.
inline double objective(std::span<const double> w, std::span<const LabeledPair> pairs,
                        double lambda) {
    double obj = 0.5 * dot(w, w);
    for (const auto& p : pairs) obj += lambda * hinge_term(w, p.xi, p.xj, p.label);
    return obj;
}

}  // namespace pbank
