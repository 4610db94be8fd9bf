#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "pbank/binary_io.hpp"
#include "pbank/error.hpp"
#include "pbank/rng.hpp"

namespace pbank {

/// Dense N x D feature matrix, row-major (one sample per row). Scalars are
/// stored as float32, matching the on-disk width; numeric routines widen to
/// double at the point of use. Immutable by convention after construction
/// and safe to share across threads for reading.
class FeatureMatrix {
public:
    FeatureMatrix() = default;

    FeatureMatrix(std::size_t n_samples, std::size_t n_dims, std::vector<float> values,
                  std::vector<std::uint64_t> ids = {})
        : n_samples_(n_samples), n_dims_(n_dims), values_(std::move(values)), ids_(std::move(ids)) {
        require(n_samples_ >= 1 && n_dims_ >= 1, errc::invalid_argument,
                "matrix must have at least one sample and one dimension");
        require(values_.size() == n_samples_ * n_dims_, errc::shape_mismatch,
                "value count " + std::to_string(values_.size()) + " != " +
                    std::to_string(n_samples_) + " x " + std::to_string(n_dims_));
        require(ids_.empty() || ids_.size() == n_samples_, errc::shape_mismatch,
                "id count does not match sample count");
        for (std::size_t i = 0; i < values_.size(); ++i) {
            require(std::isfinite(values_[i]), errc::non_finite_value,
                    "non-finite value at sample " + std::to_string(i / n_dims_) + ", dim " +
                        std::to_string(i % n_dims_));
        }
    }

    std::size_t n_samples() const { return n_samples_; }
    std::size_t n_dims() const { return n_dims_; }

    float at(std::size_t sample, std::size_t dim) const {
        return values_[sample * n_dims_ + dim];
    }

    std::span<const float> row(std::size_t sample) const {
        return {values_.data() + sample * n_dims_, n_dims_};
    }

    const std::vector<float>& values() const { return values_; }
    const std::vector<std::uint64_t>& ids() const { return ids_; }

    /// Column `dim` across all samples, widened to double. This is the
    /// per-dimension point fed to dimension clustering.
    std::vector<double> dim_values(std::size_t dim) const {
        std::vector<double> out(n_samples_);
        for (std::size_t i = 0; i < n_samples_; ++i) out[i] = values_[i * n_dims_ + dim];
        return out;
    }

    /// Sub-matrix restricted to the given dimensions (in the given order),
    /// widened to double, row-major. Trainers consume these views.
    std::vector<double> gather_dims(const std::vector<std::uint32_t>& dims) const {
        std::vector<double> out(n_samples_ * dims.size());
        for (std::size_t i = 0; i < n_samples_; ++i) {
            const float* src = values_.data() + i * n_dims_;
            double* dst = out.data() + i * dims.size();
            for (std::size_t j = 0; j < dims.size(); ++j) dst[j] = src[dims[j]];
        }
        return out;
    }

    /// Sub-matrix restricted to the given dimensions, as a FeatureMatrix.
    FeatureMatrix restrict_to_dims(const std::vector<std::uint32_t>& dims) const {
        std::vector<float> out(n_samples_ * dims.size());
        for (std::size_t i = 0; i < n_samples_; ++i) {
            const float* src = values_.data() + i * n_dims_;
            float* dst = out.data() + i * dims.size();
            for (std::size_t j = 0; j < dims.size(); ++j) dst[j] = src[dims[j]];
        }
        return FeatureMatrix(n_samples_, dims.size(), std::move(out));
    }

    /// Copy with a constant -1 coordinate appended to every sample; lets a
    /// downstream linear classifier absorb a bias term.
    FeatureMatrix with_bias_coordinate() const {
        std::vector<float> values;
        values.reserve(n_samples_ * (n_dims_ + 1));
        for (std::size_t i = 0; i < n_samples_; ++i) {
            const float* src = values_.data() + i * n_dims_;
            values.insert(values.end(), src, src + n_dims_);
            values.push_back(-1.0f);
        }
        return FeatureMatrix(n_samples_, n_dims_ + 1, std::move(values), ids_);
    }

    bool operator==(const FeatureMatrix& other) const {
        return n_samples_ == other.n_samples_ && n_dims_ == other.n_dims_ &&
               values_ == other.values_;
    }

private:
    std::size_t n_samples_ = 0;
    std::size_t n_dims_ = 0;
    std::vector<float> values_;
    std::vector<std::uint64_t> ids_;
};

// --- feature-matrix file format ------------------------------------------
// magic "PBFM", u32 version=1, u64 n_samples, u64 n_dims,
// then n_samples*n_dims float32 row-major.

inline constexpr char kMatrixMagic[4] = {'P', 'B', 'F', 'M'};
inline constexpr std::uint32_t kMatrixVersion = 1;

inline std::vector<std::uint8_t> serialize_matrix(const FeatureMatrix& m) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(24 + m.values().size() * 4);
    BinaryWriter w(bytes);
    w.write_magic(kMatrixMagic);
    w.write_u32(kMatrixVersion);
    w.write_u64(m.n_samples());
    w.write_u64(m.n_dims());
    w.write_bytes(m.values().data(), m.values().size() * sizeof(float));
    return bytes;
}

inline void save_matrix(const FeatureMatrix& m, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_matrix(m));
}

inline FeatureMatrix load_matrix(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    BinaryReader r(bytes.data(), bytes.size());
    r.expect_magic(kMatrixMagic, "feature matrix");
    const auto version = r.read_u32();
    require(version == kMatrixVersion, errc::bad_magic,
            "unsupported feature-matrix version " + std::to_string(version));
    const auto n_samples = r.read_u64();
    const auto n_dims = r.read_u64();
    require(n_samples >= 1 && n_dims >= 1, errc::shape_mismatch, "empty matrix header");
    const std::size_t expected = n_samples * n_dims * sizeof(float);
    require(r.remaining() == expected, errc::shape_mismatch,
            "payload holds " + std::to_string(r.remaining() / sizeof(float)) +
                " scalars, header declares " + std::to_string(n_samples * n_dims));
    std::vector<float> values(n_samples * n_dims);
    r.read_bytes(values.data(), expected);
    for (std::size_t i = 0; i < values.size(); ++i) {
        require(std::isfinite(values[i]), errc::non_finite_value,
                path.string() + ": non-finite value at sample " + std::to_string(i / n_dims) +
                    ", dim " + std::to_string(i % n_dims));
    }
    return FeatureMatrix(n_samples, n_dims, std::move(values));
}

// --- synthetic data --------------------------------------------------------

/// Train/gallery/query split with per-sample integer class labels; the
/// labels of gallery/query are the retrieval ground truth.
struct DatasetSplit {
    FeatureMatrix train;
    FeatureMatrix gallery;
    FeatureMatrix query;
    std::vector<std::int64_t> train_labels;
    std::vector<std::int64_t> gallery_labels;
    std::vector<std::int64_t> query_labels;
};

/// Gaussian-mixture generator: cluster centers uniform in [-1,1]^D,
/// isotropic noise, stratified 80/10/10 train/gallery/query split per
/// cluster (so every cluster appears in every split). Deterministic for a
/// fixed seed.
inline DatasetSplit generate_synthetic(std::size_t n_clusters, std::size_t samples_per_cluster,
                                       std::size_t n_dims, double noise_scale,
                                       std::uint64_t seed) {
    require(n_clusters >= 1 && n_dims >= 1, errc::invalid_argument,
            "cluster and dimension counts must be >= 1");
    require(samples_per_cluster >= 3, errc::invalid_argument,
            "need >= 3 samples per cluster to populate train/gallery/query");
    require(noise_scale > 0.0, errc::invalid_argument, "noise_scale must be > 0");

    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const std::size_t per_side = std::max<std::size_t>(1, samples_per_cluster / 10);
    const std::size_t query_n = per_side;
    const std::size_t gallery_n = per_side;
    const std::size_t train_n = samples_per_cluster - query_n - gallery_n;
    require(train_n >= 1, errc::invalid_argument, "split leaves no training samples");

    std::vector<float> train_vals, gallery_vals, query_vals;
    DatasetSplit out;
    train_vals.reserve(n_clusters * train_n * n_dims);
    gallery_vals.reserve(n_clusters * gallery_n * n_dims);
    query_vals.reserve(n_clusters * query_n * n_dims);

    std::vector<double> center(n_dims);
    std::vector<float> sample(n_dims);
    for (std::size_t c = 0; c < n_clusters; ++c) {
        for (auto& x : center) x = unit(rng);
        for (std::size_t s = 0; s < samples_per_cluster; ++s) {
            for (std::size_t j = 0; j < n_dims; ++j)
                sample[j] = static_cast<float>(center[j] + noise_scale * gauss(rng));
            if (s < train_n) {
                train_vals.insert(train_vals.end(), sample.begin(), sample.end());
                out.train_labels.push_back(static_cast<std::int64_t>(c));
            } else if (s < train_n + gallery_n) {
                gallery_vals.insert(gallery_vals.end(), sample.begin(), sample.end());
                out.gallery_labels.push_back(static_cast<std::int64_t>(c));
            } else {
                query_vals.insert(query_vals.end(), sample.begin(), sample.end());
                out.query_labels.push_back(static_cast<std::int64_t>(c));
            }
        }
    }

    out.train = FeatureMatrix(out.train_labels.size(), n_dims, std::move(train_vals));
    out.gallery = FeatureMatrix(out.gallery_labels.size(), n_dims, std::move(gallery_vals));
    out.query = FeatureMatrix(out.query_labels.size(), n_dims, std::move(query_vals));
    return out;
}

// --- label CSV ("index,label") ---------------------------------------------

inline void save_labels_csv(const std::vector<std::int64_t>& labels,
                            const std::filesystem::path& path) {
    std::ostringstream out;
    out << "index,label\n";
    for (std::size_t i = 0; i < labels.size(); ++i) out << i << "," << labels[i] << "\n";
    write_text_atomic(path, out.str());
}

inline std::vector<std::int64_t> load_labels_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), errc::io_failure, "cannot open " + path.string());
    std::vector<std::int64_t> labels;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        require(comma != std::string::npos, errc::io_failure,
                "malformed label row in " + path.string() + ": " + line);
        labels.push_back(std::stoll(line.substr(comma + 1)));
    }
    require(!labels.empty(), errc::io_failure, "no labels in " + path.string());
    return labels;
}

}  // namespace pbank
