#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "rpmixer/tensor.hpp"

namespace rpmixer {

/// One-sided spectrum of a real signal: the last axis holds floor(t/2)+1 bins,
/// DC first.
template <typename T>
struct ComplexSpectrum {
  BasicTensor<T> real;
  BasicTensor<T> imag;

  std::size_t bins() const noexcept { return real.cols(); }
};

/// Number of one-sided bins for a real signal of the given length.
constexpr std::size_t bin_count(std::size_t length) noexcept { return length / 2 + 1; }

/// Complex FFT of a fixed length.
///
/// Lengths whose prime factors are all <= 31 run a recursive mixed-radix
/// Cooley-Tukey decimation in time. Anything else goes through Bluestein's
/// chirp-z algorithm on a power-of-two convolution. Twiddles are computed in
/// double precision regardless of the tensor type.
class FftPlan {
 public:
  using Complex = std::complex<double>;

  explicit FftPlan(std::size_t length);
  ~FftPlan();
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  std::size_t size() const noexcept { return length_; }
  bool uses_bluestein() const noexcept { return bluestein_ != nullptr; }
  const std::vector<std::size_t>& factors() const noexcept { return factors_; }

  /// In-place forward transform, exp(-2*pi*i*j*k/n) kernel, unnormalized.
  void forward(std::span<Complex> data) const;
  /// In-place inverse transform, exp(+2*pi*i*j*k/n) kernel, unnormalized.
  void inverse(std::span<Complex> data) const;

  /// Process-wide plan cache; thread-safe.
  static const FftPlan& cached(std::size_t length);

 private:
  struct Bluestein;

  void mixed_radix(const Complex* in, std::size_t stride, Complex* out, std::size_t n,
                   std::size_t factor_index) const;
  void run(std::span<Complex> data) const;

  std::size_t length_;
  std::vector<std::size_t> factors_;
  std::vector<Complex> twiddles_;  // exp(-2*pi*i*j/n), j in [0, n)
  std::unique_ptr<Bluestein> bluestein_;
};

/// One-sided DFT along the last axis. Forward transform is unnormalized.
template <typename T>
ComplexSpectrum<T> rfft(const BasicTensor<T>& signal);

/// Inverse of rfft for signals of `length` samples, scaled by 1/length.
/// Imaginary parts at DC (and at Nyquist for even lengths) cannot come from a
/// real signal; they contribute nothing to the real output.
template <typename T>
BasicTensor<T> irfft(const ComplexSpectrum<T>& spectrum, std::size_t length);

}  // namespace rpmixer
