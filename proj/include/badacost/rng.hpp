#pragma once

#include <cstdint>
#include <vector>

namespace badacost {

/// Derives an independent 64-bit key for `stream` from a root seed.
/// Every random consumer in the library asks for its own stream, so the
/// order in which modules draw numbers never perturbs another module.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream);

/// SplitMix64 generator. Output is identical across compilers and standard
/// libraries, unlike std::*_distribution.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : state_(key) {}

  std::uint64_t next();
  /// Uniform double in [0, 1).
  double uniform();
  /// Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller.
  double normal();

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace badacost
