#pragma once

#include <cstdint>
#include <vector>

namespace reprog {

// Seeded xoshiro256++ stream with splitmix64 state expansion. The generator,
// the seeding procedure and every derived draw below are fixed by this header:
// equal seeds give bit-identical streams on every platform. No libstdc++
// distributions are used anywhere (their streams are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // [0,1) with 53 random bits.
  double next_double();
  // [0,1) with 24 random bits.
  float next_float();

  double uniform(double lo, double hi);

  // Standard normal via Box-Muller; consumes exactly two doubles per call.
  double normal();

  // Integer in [0, n) via 128-bit multiply-high; n > 0.
  std::uint64_t below(std::uint64_t n);
  int below_int(int n);

  // Fisher-Yates, descending index order.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::vector<int> permutation(int n);

  std::uint64_t seed() const { return seed_; }

  // Stateless substream derivation: mixes (seed, tag, index) through
  // splitmix64 so substreams are decorrelated and order-independent.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0);

 private:
  std::uint64_t seed_;
  std::uint64_t state_[4];
};

}  // namespace reprog
