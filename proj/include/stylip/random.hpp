#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace stylip {

// splitmix64 finalizer; mixes a seed path into one 64-bit seed.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts);

/// Seeded generator with platform-independent distributions. The standard
/// distribution classes are implementation-defined, so they are avoided to
/// keep checkpoints byte-identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();                        // [0, 1)
  double uniform(double lo, double hi);
  double normal();                         // standard normal, Box-Muller
  std::size_t index(std::size_t n);        // [0, n)

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[index(i)]);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace stylip
