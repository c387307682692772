#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace uqfarm {

// Stateless 64-bit mix, used to derive independent substream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream + 0x51ed2701ULL));
}

// Seeded generator with a fixed uniform/normal mapping so that identical
// seeds give identical draws independent of the standard library's
// distribution implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in the open interval (0, 1).
    double uniform01() {
        double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        return u > 0.0 ? u : 0x1.0p-53;
    }

    double normal(double mean, double std_dev);

    // Fisher-Yates shuffle of [0, n).
    template <typename Index>
    void shuffle(std::vector<Index>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(engine_() % i);
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 engine_;
};

// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Inverse standard normal CDF, p in (0,1). Acklam's rational approximation
// followed by one Halley refinement; accurate to ~1e-15.
double inv_normal_cdf(double p);

inline double Rng::normal(double mean, double std_dev) {
    return mean + std_dev * inv_normal_cdf(uniform01());
}

} // namespace uqfarm
