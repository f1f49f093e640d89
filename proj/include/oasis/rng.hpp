#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace oasis {

/// Derives a decorrelated seed for a named substream of one root seed.
/// Runs split their randomness into named substreams (stream generation,
/// memory sampling, gating, ...) so toggling one component does not
/// perturb the draws of another.
std::uint64_t derive_seed(std::uint64_t root_seed, std::string_view stream_name);

/// Deterministic random source. All draws go through explicit algorithms
/// (never std::*_distribution) so sequences are identical across platforms
/// and standard-library versions.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01();

    /// Standard normal draw (Box-Muller; the second value of each pair is cached).
    double normal();

    /// Unbiased uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_below(std::uint64_t n);

    /// k distinct indices from [0, n), uniformly (Floyd's algorithm). k <= n.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[uniform_below(i)]);
        }
    }

  private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace oasis
