#include "rpmixer/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace rpmixer {

double SeededRng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t SeededRng::below(std::uint64_t bound) {
  if (bound == 0) return 0;
  // Rejection sampling keeps the result unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % bound;
}

double SeededRng::normal() {
  if (spare_normal_) {
    const double v = *spare_normal_;
    spare_normal_.reset();
    return v;
  }
  // 1 - u lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_normal_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

template <typename T>
BasicTensor<T> randn(SeededRng& rng, const Shape& shape) {
  BasicTensor<T> out(shape);
  for (T& v : out.data()) v = static_cast<T>(rng.normal());
  return out;
}

template <typename T>
BasicTensor<T> rand_uniform(SeededRng& rng, const Shape& shape, double lo, double hi) {
  BasicTensor<T> out(shape);
  for (T& v : out.data()) v = static_cast<T>(rng.uniform(lo, hi));
  return out;
}

template BasicTensor<float> randn(SeededRng&, const Shape&);
template BasicTensor<double> randn(SeededRng&, const Shape&);
template BasicTensor<float> rand_uniform(SeededRng&, const Shape&, double, double);
template BasicTensor<double> rand_uniform(SeededRng&, const Shape&, double, double);

}  // namespace rpmixer
