#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace qphase {

/// SplitMix64 finalizer; used to derive independent stream seeds from a counter.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed for item `index` of stream `stream` under a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
    return splitmix64(splitmix64(master ^ splitmix64(stream)) + index);
}

class GaussianSource {
public:
    explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

    double operator()() { return dist_(engine_); }

    std::vector<double> draw(std::size_t n) {
        std::vector<double> out(n);
        for (auto& v : out) v = dist_(engine_);
        return out;
    }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> dist_{0.0, 1.0};
};

} // namespace qphase
