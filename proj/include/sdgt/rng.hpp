// Deterministic random number streams.
//
// std::mt19937_64 supplies the raw bits, but all distribution logic
// (uniforms, normals, bounded integers, sampling without replacement) is
// implemented here rather than through <random> distribution classes, whose
// output is not pinned by the standard and varies across library vendors.
// Every draw is therefore reproducible bit-for-bit on any conforming
// platform with IEEE-754 doubles.
//
// Streams form a tree: substream(name, index) derives an independent child
// stream from the parent's seed, a label hash, and an index.  Derivation
// touches no engine state, so the order in which substreams are created or
// consumed does not matter.
#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace sdgt {

class RngStream {
public:
    explicit RngStream(std::uint64_t seed);

    // Independent child stream identified by (name, index).
    RngStream substream(std::string_view name, std::uint64_t index = 0) const;

    // Uniform double in [0, 1) with 53 bits of precision.
    double uniform();

    // Uniform double in [lo, hi).
    double uniform(double lo, double hi);

    // Standard normal deviate (Marsaglia polar method).
    double normal();

    // Uniform integer in [0, n), n >= 1, by rejection (no modulo bias).
    std::uint64_t uniform_int(std::uint64_t n);

    // k distinct indices from [0, n), in draw order (partial Fisher-Yates).
    std::vector<int> sample_without_replacement(int n, int k);

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

// FNV-1a hash of a label, used for substream derivation.
std::uint64_t fnv1a64(std::string_view s);

// splitmix64 finalizer, used to decorrelate derived seeds.
std::uint64_t splitmix64(std::uint64_t x);

} // namespace sdgt
