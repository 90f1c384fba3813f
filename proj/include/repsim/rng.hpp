#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace repsim {

// Seeded random source. The generator is mt19937_64 and normals come
// from a hand-rolled Box-Muller transform, so the same seed reproduces
// the same stream on every platform this builds on.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1). 53-bit mantissa fill.
    double next_double() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, bound) by rejection, bound > 0.
    std::uint64_t next_below(std::uint64_t bound);

    // Standard normal via Box-Muller; the pair's second value is cached.
    double next_gauss();

    // Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct indices from [0, n), returned sorted ascending.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

  private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace repsim
