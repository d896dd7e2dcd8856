#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "rpmixer/tensor.hpp"

namespace rpmixer {

/// Deterministic random stream.
///
/// Bits come from std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Uniform doubles take the top 53 bits; normals use the Box-Muller
/// transform (both values of each pair are consumed, cosine branch first).
/// Distribution objects from <random> are avoided because their algorithms are
/// implementation-defined.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, bound).
  std::uint64_t below(std::uint64_t bound);
  double normal();

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

/// I.i.d. standard normal entries, unscaled.
template <typename T>
BasicTensor<T> randn(SeededRng& rng, const Shape& shape);

/// I.i.d. uniform entries on [lo, hi).
template <typename T>
BasicTensor<T> rand_uniform(SeededRng& rng, const Shape& shape, double lo, double hi);

}  // namespace rpmixer
