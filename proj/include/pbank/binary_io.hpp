#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "pbank/error.hpp"

// Little-endian binary readers/writers shared by all on-disk formats, plus
// the temp-file/rename discipline that keeps failed runs from leaving
// partial outputs behind.

namespace pbank {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian; big-endian hosts need byte swaps");

class BinaryWriter {
public:
    explicit BinaryWriter(std::vector<std::uint8_t>& sink) : sink_(&sink) {}

    void write_bytes(const void* data, std::size_t size) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        sink_->insert(sink_->end(), p, p + size);
    }

    void write_magic(const char magic[4]) { write_bytes(magic, 4); }
    void write_u8(std::uint8_t v) { write_bytes(&v, 1); }
    void write_u32(std::uint32_t v) { write_bytes(&v, 4); }
    void write_u64(std::uint64_t v) { write_bytes(&v, 8); }
    void write_f32(float v) { write_bytes(&v, 4); }
    void write_f64(double v) { write_bytes(&v, 8); }

    void write_f64_vec(const std::vector<double>& v) {
        write_bytes(v.data(), v.size() * sizeof(double));
    }

private:
    std::vector<std::uint8_t>* sink_;
};

class BinaryReader {
public:
    BinaryReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

    void read_bytes(void* out, std::size_t size) {
        require(pos_ + size <= size_, errc::shape_mismatch,
                "file truncated: need " + std::to_string(size) + " more bytes at offset " +
                    std::to_string(pos_));
        std::memcpy(out, data_ + pos_, size);
        pos_ += size;
    }

    void expect_magic(const char magic[4], const std::string& what) {
        char got[4] = {};
        require(pos_ + 4 <= size_, errc::bad_magic, what + ": file too short for magic");
        std::memcpy(got, data_ + pos_, 4);
        pos_ += 4;
        require(std::memcmp(got, magic, 4) == 0, errc::bad_magic,
                what + ": magic mismatch (got \"" + std::string(got, 4) + "\")");
    }

    std::uint8_t read_u8() { std::uint8_t v; read_bytes(&v, 1); return v; }
    std::uint32_t read_u32() { std::uint32_t v; read_bytes(&v, 4); return v; }
    std::uint64_t read_u64() { std::uint64_t v; read_bytes(&v, 8); return v; }
    float read_f32() { float v; read_bytes(&v, 4); return v; }
    double read_f64() { double v; read_bytes(&v, 8); return v; }

    std::vector<double> read_f64_vec(std::size_t count) {
        std::vector<double> v(count);
        read_bytes(v.data(), count * sizeof(double));
        return v;
    }

    std::size_t remaining() const { return size_ - pos_; }
    bool at_end() const { return pos_ == size_; }

private:
    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), errc::io_failure, "cannot open " + path.string());
    in.seekg(0, std::ios::end);
    const auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> bytes(size);
    if (size > 0) in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
    require(in.good(), errc::io_failure, "read failed for " + path.string());
    return bytes;
}

/// Writes via a sibling temp file and renames into place, so a failed run
/// never leaves a half-written output at the target path.
inline void write_file_atomic(const std::filesystem::path& path,
                              const std::vector<std::uint8_t>& bytes) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::random_device rd;
    fs::path tmp = path;
    tmp += ".tmp" + std::to_string(rd() % 1000000);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(out.good(), errc::io_failure, "cannot open " + tmp.string() + " for writing");
        if (!bytes.empty())
            out.write(reinterpret_cast<const char*>(bytes.data()),
                      static_cast<std::streamsize>(bytes.size()));
        out.flush();
        require(out.good(), errc::io_failure, "write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        raise(errc::io_failure, "rename to " + path.string() + " failed");
    }
}

inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    std::vector<std::uint8_t> bytes(text.begin(), text.end());
    write_file_atomic(path, bytes);
}

/// FNV-1a over a byte buffer; used for the 8-byte bank fingerprints that
/// bind code sets to the bank that produced them.
inline std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size,
                             std::uint64_t seed = 1469598103934665603ull) {
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= data[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::vector<std::uint8_t>& bytes) {
    return fnv1a64(bytes.data(), bytes.size());
}

}  // namespace pbank
