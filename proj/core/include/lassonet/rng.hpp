#pragma once

#include <cstdint>
#include <vector>

#include "lassonet/numeric.hpp"

namespace lassonet {

/// Counter-based deterministic random stream (splitmix64 finalizer applied to
/// seed + counter). Same seed gives the same sequence on every platform; child
/// streams derived with split() are independent, so parallel tasks never share
/// an instance.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();

  /// Uniform in [0, 1), 53-bit resolution.
  double next_double();

  double next_uniform(double lo, double hi);

  /// Marsaglia polar method; exactly `mean` when std == 0.
  double next_gaussian(double mean, double stddev);

  /// Unbiased integer in [0, n). n must be positive.
  std::size_t next_index(std::size_t n);

  /// Child stream keyed by (seed, stream id).
  Rng split(std::uint64_t stream) const;

  template <typename T>
  void shuffle(std::vector<T>& v) {
    // Fisher-Yates, fixed order for cross-platform reproducibility
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = next_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// i.i.d. normal entries, deterministic given the stream state.
Matrix rng_gaussian(Rng& rng, std::size_t rows, std::size_t cols, double mean, double stddev);

}  // namespace lassonet
