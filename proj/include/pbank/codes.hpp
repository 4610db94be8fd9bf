#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <vector>

#include "pbank/binary_io.hpp"
#include "pbank/error.hpp"

namespace pbank {

/// Bit-packed binary codes, sample-major, each row padded to whole bytes
/// with zero padding bits. Packing is little-endian within bytes: bit p of
/// a code lives in byte p/8 at bit position p%8. The fingerprint binds the
/// codes to the bank (or baseline parameters) that produced them.
class BinaryCodeSet {
public:
    BinaryCodeSet() = default;

    BinaryCodeSet(std::size_t n_samples, std::size_t n_bits, std::uint64_t fingerprint)
        : n_samples_(n_samples), n_bits_(n_bits), stride_((n_bits + 7) / 8),
          fingerprint_(fingerprint), bits_(n_samples * ((n_bits + 7) / 8), 0) {
        require(n_samples >= 1 && n_bits >= 1, errc::invalid_argument,
                "code set needs at least one sample and one bit");
    }

    std::size_t n_samples() const { return n_samples_; }
    std::size_t n_bits() const { return n_bits_; }
    std::size_t row_bytes() const { return stride_; }
    std::uint64_t fingerprint() const { return fingerprint_; }

    void set_bit(std::size_t sample, std::size_t bit, bool value) {
        auto& byte = bits_[sample * stride_ + bit / 8];
        const std::uint8_t mask = static_cast<std::uint8_t>(1u << (bit % 8));
        if (value)
            byte |= mask;
        else
            byte &= static_cast<std::uint8_t>(~mask);
    }

    bool get_bit(std::size_t sample, std::size_t bit) const {
        return (bits_[sample * stride_ + bit / 8] >> (bit % 8)) & 1u;
    }

    const std::uint8_t* row(std::size_t sample) const { return bits_.data() + sample * stride_; }
    const std::vector<std::uint8_t>& bytes() const { return bits_; }

    /// Row as a 0/1 vector; the unpack side of the pack/unpack round trip.
    std::vector<std::uint8_t> unpack_row(std::size_t sample) const {
        std::vector<std::uint8_t> out(n_bits_);
        for (std::size_t b = 0; b < n_bits_; ++b) out[b] = get_bit(sample, b) ? 1 : 0;
        return out;
    }

    bool operator==(const BinaryCodeSet& other) const {
        return n_samples_ == other.n_samples_ && n_bits_ == other.n_bits_ &&
               fingerprint_ == other.fingerprint_ && bits_ == other.bits_;
    }

private:
    std::size_t n_samples_ = 0;
    std::size_t n_bits_ = 0;
    std::size_t stride_ = 0;
    std::uint64_t fingerprint_ = 0;
    std::vector<std::uint8_t> bits_;
};

inline std::uint32_t hamming_distance(const std::uint8_t* a, const std::uint8_t* b,
                                      std::size_t n_bytes) {
    std::uint32_t dist = 0;
    std::size_t i = 0;
    for (; i + 8 <= n_bytes; i += 8) {
        std::uint64_t x, y;
        std::memcpy(&x, a + i, 8);
        std::memcpy(&y, b + i, 8);
        dist += static_cast<std::uint32_t>(std::popcount(x ^ y));
    }
    for (; i < n_bytes; ++i)
        dist += static_cast<std::uint32_t>(std::popcount(static_cast<unsigned>(a[i] ^ b[i])));
    return dist;
}

// --- code file format ---------------------------------------------------------
// magic "PBBC", u32 version=1, u64 n_samples, u64 n_bits,
// 8-byte bank fingerprint, then packed rows.

inline constexpr char kCodesMagic[4] = {'P', 'B', 'B', 'C'};
inline constexpr std::uint32_t kCodesVersion = 1;

inline std::vector<std::uint8_t> serialize_codes(const BinaryCodeSet& codes) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(32 + codes.bytes().size());
    BinaryWriter w(bytes);
    w.write_magic(kCodesMagic);
    w.write_u32(kCodesVersion);
    w.write_u64(codes.n_samples());
    w.write_u64(codes.n_bits());
    w.write_u64(codes.fingerprint());
    w.write_bytes(codes.bytes().data(), codes.bytes().size());
    return bytes;
}

inline void save_codes(const BinaryCodeSet& codes, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_codes(codes));
}

inline BinaryCodeSet load_codes(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    BinaryReader r(bytes.data(), bytes.size());
    r.expect_magic(kCodesMagic, "binary codes");
    const auto version = r.read_u32();
    require(version == kCodesVersion, errc::bad_magic,
            "unsupported code-file version " + std::to_string(version));
    const auto n_samples = r.read_u64();
    const auto n_bits = r.read_u64();
    const auto fingerprint = r.read_u64();
    BinaryCodeSet codes(n_samples, n_bits, fingerprint);
    const std::size_t payload = n_samples * codes.row_bytes();
    require(r.remaining() == payload, errc::shape_mismatch,
            "code payload length does not match header");
    std::vector<std::uint8_t> raw(payload);
    r.read_bytes(raw.data(), payload);
    // Re-pack through set_bit and check the zero-padding invariant.
    for (std::size_t s = 0; s < n_samples; ++s) {
        for (std::size_t b = 0; b < n_bits; ++b) {
            const std::uint8_t byte = raw[s * codes.row_bytes() + b / 8];
            codes.set_bit(s, b, (byte >> (b % 8)) & 1u);
        }
        for (std::size_t b = n_bits; b < codes.row_bytes() * 8; ++b) {
            const std::uint8_t byte = raw[s * codes.row_bytes() + b / 8];
            require(((byte >> (b % 8)) & 1u) == 0, errc::shape_mismatch,
                    "nonzero padding bit in code row " + std::to_string(s));
        }
    }
    return codes;
}

}  // namespace pbank
