#include "test_util.hpp"
#include "data_gen.hpp"

#include <cmath>
#include <limits>

#include "pbank/matrix.hpp"

using namespace pbank;
using testutil::TempDir;
using testutil::thrown_code;

namespace {

std::vector<std::uint8_t> raw_matrix_file(std::uint64_t n, std::uint64_t d,
                                          const std::vector<float>& payload,
                                          const char* magic = "PBFM") {
    std::vector<std::uint8_t> bytes;
    BinaryWriter w(bytes);
    w.write_magic(magic);
    w.write_u32(1);
    w.write_u64(n);
    w.write_u64(d);
    for (float v : payload) w.write_f32(v);
    return bytes;
}

}  // namespace

TEST_CASE("load_matrix reads header-declared shapes") {
    TempDir dir;
    const auto path = dir.file("m.pbfm");
    write_file_atomic(path, raw_matrix_file(2, 3, {1, 2, 3, 4, 5, 6}));
    const auto m = load_matrix(path);
    REQUIRE(m.n_samples() == 2);
    REQUIRE(m.n_dims() == 3);
    CHECK(m.at(0, 0) == 1.0f);
    CHECK(m.at(0, 2) == 3.0f);
    CHECK(m.at(1, 0) == 4.0f);
    CHECK(m.at(1, 2) == 6.0f);
}

TEST_CASE("load_matrix rejects short payloads") {
    TempDir dir;
    const auto path = dir.file("short.pbfm");
    write_file_atomic(path, raw_matrix_file(2, 3, {1, 2, 3, 4, 5}));
    CHECK(thrown_code([&] { load_matrix(path); }) == errc::shape_mismatch);
}

TEST_CASE("load_matrix rejects foreign magic") {
    TempDir dir;
    const auto path = dir.file("other.bin");
    write_file_atomic(path, raw_matrix_file(1, 1, {0.0f}, "XXXX"));
    CHECK(thrown_code([&] { load_matrix(path); }) == errc::bad_magic);
}

TEST_CASE("load_matrix rejects non-finite values and reports the index") {
    TempDir dir;
    const auto path = dir.file("nan.pbfm");
    write_file_atomic(path,
                      raw_matrix_file(2, 2, {1.0f, 2.0f, std::numeric_limits<float>::quiet_NaN(),
                                             4.0f}));
    try {
        load_matrix(path);
        FAIL("expected non_finite_value");
    } catch (const Error& e) {
        CHECK(e.code() == errc::non_finite_value);
        CHECK(std::string(e.what()).find("sample 1") != std::string::npos);
        CHECK(std::string(e.what()).find("dim 0") != std::string::npos);
    }
}

TEST_CASE("matrix construction rejects empty shapes") {
    CHECK(thrown_code([] { FeatureMatrix(0, 3, {}); }) == errc::invalid_argument);
    CHECK(thrown_code([] { FeatureMatrix(1, 2, {1.0f}); }) == errc::shape_mismatch);
}

TEST_CASE("save/load round trip is bit exact") {
    TempDir dir;
    const auto path = dir.file("rt.pbfm");

    SECTION("1x1 matrix") {
        const FeatureMatrix m(1, 1, {0.0f});
        save_matrix(m, path);
        CHECK(load_matrix(path) == m);
    }
    SECTION("random matrices") {
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            const auto m = testgen::random_matrix(100, 64, seed);
            save_matrix(m, path);
            CHECK(load_matrix(path) == m);
        }
        const auto wide = testgen::random_matrix(50, 128, 9);
        save_matrix(wide, path);
        CHECK(load_matrix(path) == wide);
    }
}

TEST_CASE("generate_synthetic: single cluster yields one label everywhere") {
    const auto split = generate_synthetic(1, 10, 4, 0.1, 7);
    CHECK(split.train.n_samples() + split.gallery.n_samples() + split.query.n_samples() == 10);
    for (auto l : split.train_labels) CHECK(l == 0);
    for (auto l : split.gallery_labels) CHECK(l == 0);
    for (auto l : split.query_labels) CHECK(l == 0);
}

TEST_CASE("generate_synthetic is deterministic down to the bytes") {
    const auto a = generate_synthetic(3, 30, 8, 0.2, 42);
    const auto b = generate_synthetic(3, 30, 8, 0.2, 42);
    CHECK(serialize_matrix(a.train) == serialize_matrix(b.train));
    CHECK(serialize_matrix(a.gallery) == serialize_matrix(b.gallery));
    CHECK(serialize_matrix(a.query) == serialize_matrix(b.query));
    const auto c = generate_synthetic(3, 30, 8, 0.2, 43);
    CHECK(serialize_matrix(a.train) != serialize_matrix(c.train));
}

TEST_CASE("generate_synthetic clusters are 1-NN separable") {
    const auto split = generate_synthetic(10, 200, 512, 0.05, 1);
    // Brute-force 1-NN classification of queries against the gallery.
    std::size_t correct = 0;
    for (std::size_t q = 0; q < split.query.n_samples(); ++q) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_g = 0;
        const auto qr = split.query.row(q);
        for (std::size_t g = 0; g < split.gallery.n_samples(); ++g) {
            const auto gr = split.gallery.row(g);
            double d2 = 0.0;
            for (std::size_t t = 0; t < qr.size(); ++t) {
                const double diff = static_cast<double>(qr[t]) - static_cast<double>(gr[t]);
                d2 += diff * diff;
            }
            if (d2 < best) {
                best = d2;
                best_g = g;
            }
        }
        correct += split.gallery_labels[best_g] == split.query_labels[q];
    }
    const double accuracy =
        static_cast<double>(correct) / static_cast<double>(split.query.n_samples());
    CHECK(accuracy > 0.95);
}

TEST_CASE("label CSV round trip") {
    TempDir dir;
    const std::vector<std::int64_t> labels{3, 1, 4, 1, 5};
    const auto path = dir.file("labels.csv");
    save_labels_csv(labels, path);
    CHECK(load_labels_csv(path) == labels);
}

TEST_CASE("restrict_to_dims gathers columns in order") {
    const FeatureMatrix m(2, 4, {0, 1, 2, 3, 4, 5, 6, 7});
    const auto sub = m.restrict_to_dims({3, 1});
    CHECK(sub.at(0, 0) == 3.0f);
    CHECK(sub.at(0, 1) == 1.0f);
    CHECK(sub.at(1, 0) == 7.0f);
    CHECK(sub.at(1, 1) == 5.0f);
}

TEST_CASE("with_bias_coordinate appends -1") {
    const FeatureMatrix m(2, 2, {1, 2, 3, 4});
    const auto aug = m.with_bias_coordinate();
    REQUIRE(aug.n_dims() == 3);
    CHECK(aug.at(0, 2) == -1.0f);
    CHECK(aug.at(1, 2) == -1.0f);
    CHECK(aug.at(1, 1) == 4.0f);
}
