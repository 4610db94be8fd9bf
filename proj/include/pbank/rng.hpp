#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace pbank {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Decorrelated per-task stream: mixes a user seed with a task index
/// (subspace id, iteration counter, ...) before seeding the engine.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    return std::mt19937_64(splitmix64(seed ^ splitmix64(stream)));
}

inline std::vector<double> gaussian_vector(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = gauss(rng);
    return v;
}

/// Gaussian direction scaled to the requested norm (nonzero for n >= 1).
inline std::vector<double> random_direction(std::size_t n, double norm, std::mt19937_64& rng) {
    std::vector<double> v = gaussian_vector(n, rng);
    double len = 0.0;
    for (double x : v) len += x * x;
    len = std::sqrt(len);
    if (len == 0.0) {
        v[0] = norm;
        return v;
    }
    for (auto& x : v) x *= norm / len;
    return v;
}

/// Fisher-Yates with an explicit engine; fully specified so shuffles are
/// reproducible independent of library internals.
template <typename T>
void deterministic_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(items[i - 1], items[pick(rng)]);
    }
}

}  // namespace pbank
