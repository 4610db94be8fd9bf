#pragma once

#include <stdexcept>
#include <string>

namespace pbank {

/// Error categories surfaced by the library. The CLI maps these to exit
/// code 1 with a machine-readable "error: <code>: <message>" line.
enum class errc {
    bad_magic,
    shape_mismatch,
    non_finite_value,
    io_failure,
    too_many_clusters,
    k_too_large,
    not_enough_pairs,
    n_too_large,
    dimension_mismatch,
    fingerprint_mismatch,
    bit_width_mismatch,
    no_relevant_items,
    too_many_pairs,
    invalid_argument,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::bad_magic: return "bad_magic";
        case errc::shape_mismatch: return "shape_mismatch";
        case errc::non_finite_value: return "non_finite_value";
        case errc::io_failure: return "io_failure";
        case errc::too_many_clusters: return "too_many_clusters";
        case errc::k_too_large: return "k_too_large";
        case errc::not_enough_pairs: return "not_enough_pairs";
        case errc::n_too_large: return "n_too_large";
        case errc::dimension_mismatch: return "dimension_mismatch";
        case errc::fingerprint_mismatch: return "fingerprint_mismatch";
        case errc::bit_width_mismatch: return "bit_width_mismatch";
        case errc::no_relevant_items: return "no_relevant_items";
        case errc::too_many_pairs: return "too_many_pairs";
        case errc::invalid_argument: return "invalid_argument";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool cond, errc code, const std::string& message) {
    if (!cond) raise(code, message);
}

}  // namespace pbank
