#include "sdgt/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace sdgt {

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

RngStream RngStream::substream(std::string_view name, std::uint64_t index) const {
    std::uint64_t child = splitmix64(seed_ ^ fnv1a64(name) ^ splitmix64(index));
    return RngStream(child);
}

double RngStream::uniform() {
    // Top 53 bits of one engine output -> double in [0, 1).
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double RngStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    // Marsaglia polar method: deterministic given the uniform sequence.
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_normal_ = v * m;
    has_spare_ = true;
    return u * m;
}

std::uint64_t RngStream::uniform_int(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_int: n must be >= 1");
    if (n == 1) return 0;
    // Rejection sampling to avoid modulo bias: accept r below the largest
    // multiple of n that fits in 64 bits.
    std::uint64_t zone = std::uint64_t(-1) - (std::uint64_t(-1) % n + 1) % n;
    for (;;) {
        std::uint64_t r = engine_();
        if (r <= zone) return r % n;
    }
}

std::vector<int> RngStream::sample_without_replacement(int n, int k) {
    if (k < 0 || k > n) throw std::invalid_argument("sample_without_replacement: need 0 <= k <= n");
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(k));
    // Partial Fisher-Yates: swap a random remaining element to the front.
    for (int i = 0; i < k; ++i) {
        int j = i + static_cast<int>(uniform_int(static_cast<std::uint64_t>(n - i)));
        std::swap(pool[i], pool[j]);
        out.push_back(pool[i]);
    }
    return out;
}

} // namespace sdgt
