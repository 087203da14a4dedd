#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace metricuq {

// Seeded random stream with explicitly coded draw algorithms so results are
// reproducible across standard library implementations.  Substreams are
// derived statelessly from (seed, index), which lets parallel code consume
// independent streams that do not depend on scheduling order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  static std::uint64_t mix(std::uint64_t a, std::uint64_t b);

  // Independent stream for a (seed, index) pair.
  static Rng substream(std::uint64_t seed, std::uint64_t index) {
    return Rng(mix(seed, index));
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform draw in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the spare value is cached.
  double normal();

  // Uniform integer in [0, bound) without modulo bias.
  std::uint64_t below(std::uint64_t bound);

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace metricuq
