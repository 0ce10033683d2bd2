#pragma once

// Seeding and portable random variates. Distributions come from Boost.Random
// so that a given seed yields the same stream with any standard library.

#include <cstdint>
#include <random>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace orthoev {

using Engine = std::mt19937_64;

/// One SplitMix64 step: advances state and returns the mixed output.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Independent stream seed for (seed, i, j): one SplitMix64 mix per key.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t i, std::uint64_t j = 0) {
    std::uint64_t s = seed;
    std::uint64_t out = splitmix64(s);
    s = out ^ (i + 0x632BE59BD9B4E019ULL);
    out = splitmix64(s);
    s = out ^ (j + 0x85157AF5ULL);
    return splitmix64(s);
}

inline Engine make_engine(std::uint64_t seed, std::uint64_t i = 0, std::uint64_t j = 0) {
    return Engine(derive_seed(seed, i, j));
}

template <class Rng>
double draw_uniform(Rng& rng) {
    return boost::random::uniform_01<double>()(rng);
}

/// Uniform on the open interval (0, 1).
template <class Rng>
double draw_open_uniform(Rng& rng) {
    double v = 0.0;
    while (v == 0.0) v = draw_uniform(rng);
    return v;
}

template <class Rng>
double draw_normal(Rng& rng) {
    return boost::random::normal_distribution<double>(0.0, 1.0)(rng);
}

template <class Rng>
std::uint64_t draw_poisson(Rng& rng, double mean) {
    return boost::random::poisson_distribution<std::uint64_t, double>(mean)(rng);
}

template <class Rng>
std::size_t draw_index(Rng& rng, std::size_t n) {
    return boost::random::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace orthoev
