#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "pbank/codes.hpp"
#include "pbank/error.hpp"
#include "pbank/linear_trainer.hpp"
#include "pbank/pair_labels.hpp"
#include "pbank/parallel.hpp"

namespace pbank {

struct PrPoint {
    std::size_t cutoff = 0;
    double precision = 0.0;
    double recall = 0.0;
};

/// Per-query ranked gallery indices with Hamming distances (non-decreasing
/// within each query), plus metric slots filled by the evaluation ops.
struct RetrievalResult {
    std::size_t k = 0;
    std::vector<std::vector<std::uint32_t>> indices;
    std::vector<std::vector<std::uint32_t>> distances;
    std::vector<std::pair<std::size_t, double>> precision_table;
    std::vector<PrPoint> pr_points;
    double auc = -1.0;  // negative until computed
};

struct GroundTruth {
    std::vector<std::int64_t> gallery_labels;
    std::vector<std::int64_t> query_labels;
};

/// Exact top-k by Hamming distance via popcount over the packed rows;
/// distance ties break toward the lower gallery index.
inline RetrievalResult hamming_search(const BinaryCodeSet& gallery, const BinaryCodeSet& queries,
                                      std::size_t k, unsigned threads = 1) {
    require(gallery.n_bits() == queries.n_bits(), errc::bit_width_mismatch,
            "gallery has " + std::to_string(gallery.n_bits()) + " bits, queries have " +
                std::to_string(queries.n_bits()));
    require(gallery.fingerprint() == queries.fingerprint(), errc::fingerprint_mismatch,
            "gallery and query codes come from different banks");
    require(k >= 1, errc::invalid_argument, "k must be >= 1");
    k = std::min(k, gallery.n_samples());

    RetrievalResult result;
    result.k = k;
    result.indices.resize(queries.n_samples());
    result.distances.resize(queries.n_samples());
    const std::size_t row_bytes = gallery.row_bytes();

    parallel_for(queries.n_samples(), threads, [&](std::size_t q) {
        std::vector<std::pair<std::uint32_t, std::uint32_t>> scored(gallery.n_samples());
        const std::uint8_t* qrow = queries.row(q);
        for (std::uint32_t g = 0; g < gallery.n_samples(); ++g)
            scored[g] = {hamming_distance(qrow, gallery.row(g), row_bytes), g};
        std::partial_sort(scored.begin(), scored.begin() + k, scored.end());
        auto& idx = result.indices[q];
        auto& dist = result.distances[q];
        idx.resize(k);
        dist.resize(k);
        for (std::size_t t = 0; t < k; ++t) {
            dist[t] = scored[t].first;
            idx[t] = scored[t].second;
        }
    });
    return result;
}

/// Mean over queries of (matching labels in the top k) / k.
inline double precision_at_k(const RetrievalResult& result, const GroundTruth& gt, std::size_t k) {
    require(k >= 1 && k <= result.k, errc::invalid_argument,
            "k must be within the ranked depth");
    require(gt.query_labels.size() == result.indices.size(), errc::shape_mismatch,
            "query label count does not match result");
    double total = 0.0;
    for (std::size_t q = 0; q < result.indices.size(); ++q) {
        std::size_t hits = 0;
        for (std::size_t t = 0; t < k; ++t)
            if (gt.gallery_labels[result.indices[q][t]] == gt.query_labels[q]) ++hits;
        total += static_cast<double>(hits) / static_cast<double>(k);
    }
    return total / static_cast<double>(result.indices.size());
}

struct PrCurve {
    std::vector<PrPoint> points;  // one per cutoff 1..gallery size
    double auc = 0.0;
};

/// Macro-averaged precision/recall at every cutoff, with AUC by the
/// trapezoid rule over recall (anchored at recall 0 with the precision of
/// the first cutoff). Requires rankings to the full gallery depth and at
/// least one relevant gallery item per query.
inline PrCurve precision_recall_curve(const RetrievalResult& result, const GroundTruth& gt) {
    const std::size_t n_queries = result.indices.size();
    const std::size_t depth = result.k;
    require(depth == gt.gallery_labels.size(), errc::invalid_argument,
            "PR curve needs rankings over the entire gallery");

    std::vector<std::size_t> relevant(n_queries, 0);
    for (std::size_t q = 0; q < n_queries; ++q) {
        for (auto label : gt.gallery_labels)
            if (label == gt.query_labels[q]) ++relevant[q];
        require(relevant[q] > 0, errc::no_relevant_items,
                "query " + std::to_string(q) + " has no relevant gallery item");
    }

    PrCurve curve;
    curve.points.resize(depth);
    std::vector<std::size_t> hits(n_queries, 0);
    for (std::size_t c = 0; c < depth; ++c) {
        double precision = 0.0;
        double recall = 0.0;
        for (std::size_t q = 0; q < n_queries; ++q) {
            if (gt.gallery_labels[result.indices[q][c]] == gt.query_labels[q]) ++hits[q];
            precision += static_cast<double>(hits[q]) / static_cast<double>(c + 1);
            recall += static_cast<double>(hits[q]) / static_cast<double>(relevant[q]);
        }
        curve.points[c] = {c + 1, precision / static_cast<double>(n_queries),
                           recall / static_cast<double>(n_queries)};
    }

    double auc = 0.0;
    double prev_recall = 0.0;
    double prev_precision = curve.points.front().precision;
    for (const auto& pt : curve.points) {
        auc += (pt.recall - prev_recall) * (pt.precision + prev_precision) * 0.5;
        prev_recall = pt.recall;
        prev_precision = pt.precision;
    }
    curve.auc = auc;
    return curve;
}

// --- pairwise-error census ------------------------------------------------------

/// Fraction of all N^2 ordered pairs whose predicted sign product
/// sgn(s_i) sgn(s_j) disagrees with the pseudo-label. Exact integer count,
/// O(N + positives) via the inclusion-exclusion over predicted/labelled
/// positive sets.
inline double pairwise_sign_error(const std::vector<std::int8_t>& signs,
                                  const PairLabelSet& labels) {
    const std::size_t n = signs.size();
    require(labels.n_samples() == n, errc::shape_mismatch, "sign/label size mismatch");
    std::size_t n_plus = 0;
    for (auto s : signs) n_plus += (s > 0);

    std::vector<std::vector<std::uint32_t>> adjacency(n);
    for (const auto& [i, j] : labels.positive_pairs()) {
        adjacency[i].push_back(j);
        adjacency[j].push_back(i);
    }

    std::uint64_t errors = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t pred_pos = (signs[i] > 0) ? n_plus : n - n_plus;
        const std::size_t label_pos = 1 + adjacency[i].size();
        std::size_t both = 1;  // the diagonal pair is always predicted and labelled positive
        for (auto j : adjacency[i]) both += (signs[j] == signs[i]);
        errors += (pred_pos - both) + (label_pos - both);
    }
    return static_cast<double>(errors) / (static_cast<double>(n) * static_cast<double>(n));
}

inline std::vector<std::int8_t> projection_signs(const std::vector<double>& w,
                                                 const FeatureMatrix& x,
                                                 const std::vector<std::uint32_t>& dims) {
    std::vector<std::int8_t> signs(x.n_samples());
    for (std::size_t i = 0; i < x.n_samples(); ++i) {
        const auto row = x.row(i);
        double acc = 0.0;
        for (std::size_t t = 0; t < dims.size(); ++t) acc += w[t] * row[dims[t]];
        signs[i] = acc >= 0.0 ? 1 : -1;
    }
    return signs;
}

struct DiagnosticResult {
    double e_avg = 0.0;  // mean per-subspace pairwise error
    double e_org = 0.0;  // pairwise error of one full-space classifier
};

/// Trains per-subspace classifiers and one full-space classifier with the
/// same configuration, then compares their exact pairwise error over all
/// N^2 pairs. The census is deliberately exhaustive, hence the sample cap.
inline DiagnosticResult pairwise_error_diagnostic(const FeatureMatrix& x,
                                                  const SubspacePartition& partition,
                                                  const PairLabelSet& labels,
                                                  const TrainerConfig& cfg, double lambda,
                                                  unsigned threads = 1) {
    require(x.n_samples() <= 2000, errc::too_many_pairs,
            "diagnostic enumerates N^2 pairs; N capped at 2000");
    TrainerConfig run_cfg = cfg;
    run_cfg.lambda = lambda;
    require(!run_cfg.augment_bias, errc::invalid_argument,
            "diagnostic compares plain linear classifiers");

    const LinearBank bank = train_bank(x, partition, labels, run_cfg, threads);
    double total = 0.0;
    for (std::size_t p = 0; p < partition.n_subspaces; ++p) {
        const auto signs = projection_signs(bank.weights[p], x, partition.member_lists[p]);
        total += pairwise_sign_error(signs, labels);
    }

    std::vector<std::uint32_t> all_dims(x.n_dims());
    std::iota(all_dims.begin(), all_dims.end(), 0u);
    const auto w_full = train_subspace(x, labels, run_cfg);
    const auto full_signs = projection_signs(w_full, x, all_dims);

    DiagnosticResult result;
    result.e_avg = total / static_cast<double>(partition.n_subspaces);
    result.e_org = pairwise_sign_error(full_signs, labels);
    return result;
}

// --- CSV emission -----------------------------------------------------------------

struct PrecisionRow {
    std::string method;
    std::size_t bits = 0;
    std::size_t k = 0;
    double precision = 0.0;
};

inline void write_precision_csv(const std::vector<PrecisionRow>& rows,
                                const std::filesystem::path& path) {
    std::ostringstream out;
    out << "method,bits,k,precision\n";
    out.precision(10);
    for (const auto& r : rows)
        out << r.method << "," << r.bits << "," << r.k << "," << r.precision << "\n";
    write_text_atomic(path, out.str());
}

struct PrCurveRow {
    std::string method;
    std::size_t bits = 0;
    PrPoint point;
};

inline void write_pr_curve_csv(const std::vector<PrCurveRow>& rows,
                               const std::filesystem::path& path) {
    std::ostringstream out;
    out << "method,bits,cutoff,precision,recall\n";
    out.precision(10);
    for (const auto& r : rows)
        out << r.method << "," << r.bits << "," << r.point.cutoff << "," << r.point.precision
            << "," << r.point.recall << "\n";
    write_text_atomic(path, out.str());
}

struct DiagnosticRow {
    std::size_t d = 0;
    double e_avg = 0.0;
    double e_org = 0.0;
};

inline void write_diagnostic_csv(const std::vector<DiagnosticRow>& rows,
                                 const std::filesystem::path& path) {
    std::ostringstream out;
    out << "d,e_avg,e_org\n";
    out.precision(10);
    for (const auto& r : rows) out << r.d << "," << r.e_avg << "," << r.e_org << "\n";
    write_text_atomic(path, out.str());
}

}  // namespace pbank
