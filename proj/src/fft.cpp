#include "rpmixer/fft.hpp"

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace rpmixer {
namespace {

using Complex = FftPlan::Complex;

constexpr std::size_t kMaxRadix = 31;
// Below this length the real transforms use a precomputed DFT matrix instead of
// the complex plan; for a handful of samples that is cheaper than recursion.
constexpr std::size_t kDirectMaxLength = 32;

Complex unit_root(std::size_t j, std::size_t n) {
  const double angle = -2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
  return {std::cos(angle), std::sin(angle)};
}

std::vector<std::size_t> factorize(std::size_t n) {
  std::vector<std::size_t> factors;
  while (n % 4 == 0) {
    factors.push_back(4);
    n /= 4;
  }
  while (n % 2 == 0) {
    factors.push_back(2);
    n /= 2;
  }
  for (std::size_t p = 3; p * p <= n; p += 2) {
    while (n % p == 0) {
      factors.push_back(p);
      n /= p;
    }
  }
  if (n > 1) factors.push_back(n);
  return factors;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t m = 1;
  while (m < n) m <<= 1;
  return m;
}

// cos/sin tables for the direct real DFT of a short length.
struct RealDftTable {
  std::size_t length;
  std::size_t bins;
  std::vector<double> cos_kj;  // [bins x length]
  std::vector<double> sin_kj;  // [bins x length]
  std::vector<double> cos_jk;  // transposed copies, [length x bins]
  std::vector<double> sin_jk;
  std::vector<double> weight;  // one-sided inverse weights: 1 at DC/Nyquist, else 2

  explicit RealDftTable(std::size_t n) : length(n), bins(bin_count(n)) {
    cos_kj.resize(bins * n);
    sin_kj.resize(bins * n);
    weight.assign(bins, 2.0);
    weight[0] = 1.0;
    if (n % 2 == 0) weight[bins - 1] = 1.0;
    for (std::size_t k = 0; k < bins; ++k) {
      for (std::size_t j = 0; j < n; ++j) {
        const Complex w = unit_root((k * j) % n, n);
        cos_kj[k * n + j] = w.real();
        sin_kj[k * n + j] = -w.imag();
      }
    }
    cos_jk.resize(bins * n);
    sin_jk.resize(bins * n);
    for (std::size_t k = 0; k < bins; ++k)
      for (std::size_t j = 0; j < n; ++j) {
        cos_jk[j * bins + k] = cos_kj[k * n + j];
        sin_jk[j * bins + k] = sin_kj[k * n + j];
      }
  }

  static const RealDftTable& cached(std::size_t n) {
    static std::mutex mutex;
    static std::map<std::size_t, std::unique_ptr<RealDftTable>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<RealDftTable>(n);
    return *slot;
  }
};

}  // namespace

struct FftPlan::Bluestein {
  std::size_t conv_length;
  std::vector<Complex> chirp;           // exp(-i*pi*k^2/n)
  std::vector<Complex> kernel_spectrum;  // FFT of the conjugate chirp, wrapped
  std::unique_ptr<FftPlan> inner;
};

FftPlan::FftPlan(std::size_t length) : length_(length) {
  if (length == 0) throw DimensionError("fft: length must be positive");
  factors_ = factorize(length);
  const bool needs_bluestein = !factors_.empty() && factors_.back() > kMaxRadix;
  if (!needs_bluestein) {
    twiddles_.resize(length);
    for (std::size_t j = 0; j < length; ++j) twiddles_[j] = unit_root(j, length);
    return;
  }

  auto bs = std::make_unique<Bluestein>();
  bs->conv_length = next_pow2(2 * length - 1);
  bs->inner = std::make_unique<FftPlan>(bs->conv_length);
  bs->chirp.resize(length);
  const std::size_t period = 2 * length;
  for (std::size_t k = 0; k < length; ++k) {
    // k^2 mod 2n keeps the angle argument small and exact.
    const std::size_t k2 = (k * k) % period;
    bs->chirp[k] = unit_root(k2, period);
  }
  std::vector<Complex> kernel(bs->conv_length, Complex{0.0, 0.0});
  kernel[0] = std::conj(bs->chirp[0]);
  for (std::size_t k = 1; k < length; ++k) {
    kernel[k] = std::conj(bs->chirp[k]);
    kernel[bs->conv_length - k] = std::conj(bs->chirp[k]);
  }
  bs->inner->forward(kernel);
  bs->kernel_spectrum = std::move(kernel);
  bluestein_ = std::move(bs);
}

FftPlan::~FftPlan() = default;

const FftPlan& FftPlan::cached(std::size_t length) {
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<FftPlan>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[length];
  if (!slot) slot = std::make_unique<FftPlan>(length);
  return *slot;
}

void FftPlan::mixed_radix(const Complex* in, std::size_t stride, Complex* out, std::size_t n,
                          std::size_t factor_index) const {
  if (n == 1) {
    out[0] = in[0];
    return;
  }
  const std::size_t p = factors_[factor_index];
  const std::size_t m = n / p;
  for (std::size_t r = 0; r < p; ++r)
    mixed_radix(in + r * stride, stride * p, out + r * m, m, factor_index + 1);

  const std::size_t step_n = length_ / n;  // twiddle stride for W_n
  const std::size_t step_p = length_ / p;  // twiddle stride for W_p
  std::array<Complex, kMaxRadix> scaled{};
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t r = 0; r < p; ++r)
      scaled[r] = out[r * m + k] * twiddles_[(r * k * step_n) % length_];
    if (p == 2) {
      out[k] = scaled[0] + scaled[1];
      out[m + k] = scaled[0] - scaled[1];
      continue;
    }
    for (std::size_t q = 0; q < p; ++q) {
      Complex acc = scaled[0];
      for (std::size_t r = 1; r < p; ++r) acc += scaled[r] * twiddles_[((r * q) % p) * step_p];
      out[q * m + k] = acc;
    }
  }
}

void FftPlan::run(std::span<Complex> data) const {
  if (data.size() != length_) {
    throw DimensionError("fft: plan length " + std::to_string(length_) + ", buffer length " +
                         std::to_string(data.size()));
  }
  if (!bluestein_) {
    std::vector<Complex> input(data.begin(), data.end());
    mixed_radix(input.data(), 1, data.data(), length_, 0);
    return;
  }
  const Bluestein& bs = *bluestein_;
  std::vector<Complex> work(bs.conv_length, Complex{0.0, 0.0});
  for (std::size_t k = 0; k < length_; ++k) work[k] = data[k] * bs.chirp[k];
  bs.inner->forward(work);
  for (std::size_t k = 0; k < bs.conv_length; ++k) work[k] *= bs.kernel_spectrum[k];
  bs.inner->inverse(work);
  const double scale = 1.0 / static_cast<double>(bs.conv_length);
  for (std::size_t k = 0; k < length_; ++k) data[k] = work[k] * bs.chirp[k] * scale;
}

void FftPlan::forward(std::span<Complex> data) const { run(data); }

void FftPlan::inverse(std::span<Complex> data) const {
  // conj(F(conj(x))) flips the kernel sign.
  for (Complex& z : data) z = std::conj(z);
  run(data);
  for (Complex& z : data) z = std::conj(z);
}

template <typename T>
ComplexSpectrum<T> rfft(const BasicTensor<T>& signal) {
  if (signal.rank() == 0 || signal.cols() == 0) {
    throw DimensionError("rfft: signal needs a non-empty last axis, got " +
                         shape_string(signal.shape()));
  }
  const std::size_t n = signal.cols();
  const std::size_t bins = bin_count(n);
  const std::size_t rows = signal.rows();
  Shape shape = signal.shape();
  shape.back() = bins;
  ComplexSpectrum<T> out{BasicTensor<T>(shape), BasicTensor<T>(shape)};

  if (n <= kDirectMaxLength) {
    const RealDftTable& table = RealDftTable::cached(n);
    std::vector<double> acc_re(bins), acc_im(bins);
    for (std::size_t r = 0; r < rows; ++r) {
      const T* x = signal.data().data() + r * n;
      std::fill(acc_re.begin(), acc_re.end(), 0.0);
      std::fill(acc_im.begin(), acc_im.end(), 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        const double xj = static_cast<double>(x[j]);
        const double* c = table.cos_jk.data() + j * bins;
        const double* sn = table.sin_jk.data() + j * bins;
        for (std::size_t k = 0; k < bins; ++k) {
          acc_re[k] += c[k] * xj;
          acc_im[k] -= sn[k] * xj;
        }
      }
      T* re = out.real.data().data() + r * bins;
      T* im = out.imag.data().data() + r * bins;
      for (std::size_t k = 0; k < bins; ++k) {
        re[k] = static_cast<T>(acc_re[k]);
        im[k] = static_cast<T>(acc_im[k]);
      }
    }
    return out;
  }

  const FftPlan& plan = FftPlan::cached(n);
  std::vector<Complex> buffer(n);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* x = signal.data().data() + r * n;
    for (std::size_t j = 0; j < n; ++j) buffer[j] = Complex(static_cast<double>(x[j]), 0.0);
    plan.forward(buffer);
    T* re = out.real.data().data() + r * bins;
    T* im = out.imag.data().data() + r * bins;
    for (std::size_t k = 0; k < bins; ++k) {
      re[k] = static_cast<T>(buffer[k].real());
      im[k] = static_cast<T>(buffer[k].imag());
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> irfft(const ComplexSpectrum<T>& spectrum, std::size_t length) {
  require_same_shape(spectrum.real.shape(), spectrum.imag.shape(), "irfft");
  if (length == 0) throw DimensionError("irfft: length must be positive");
  const std::size_t bins = spectrum.bins();
  if (spectrum.real.rank() == 0 || bins != bin_count(length)) {
    throw DimensionError("irfft: length " + std::to_string(length) + " needs " +
                         std::to_string(bin_count(length)) + " bins, spectrum has " +
                         std::to_string(bins));
  }
  const std::size_t rows = spectrum.real.rows();
  Shape shape = spectrum.real.shape();
  shape.back() = length;
  BasicTensor<T> out(shape);
  const double inv_n = 1.0 / static_cast<double>(length);

  if (length <= kDirectMaxLength) {
    const RealDftTable& table = RealDftTable::cached(length);
    std::vector<double> wr(bins);
    std::vector<double> wi(bins);
    std::vector<double> acc(length);
    for (std::size_t r = 0; r < rows; ++r) {
      const T* re = spectrum.real.data().data() + r * bins;
      const T* im = spectrum.imag.data().data() + r * bins;
      for (std::size_t k = 0; k < bins; ++k) {
        wr[k] = table.weight[k] * inv_n * static_cast<double>(re[k]);
        wi[k] = table.weight[k] * inv_n * static_cast<double>(im[k]);
      }
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t k = 0; k < bins; ++k) {
        const double* c = table.cos_kj.data() + k * length;
        const double* sn = table.sin_kj.data() + k * length;
        for (std::size_t j = 0; j < length; ++j) acc[j] += wr[k] * c[j] - wi[k] * sn[j];
      }
      T* y = out.data().data() + r * length;
      for (std::size_t j = 0; j < length; ++j) y[j] = static_cast<T>(acc[j]);
    }
    return out;
  }

  const FftPlan& plan = FftPlan::cached(length);
  std::vector<Complex> buffer(length);
  const bool even = length % 2 == 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const T* re = spectrum.real.data().data() + r * bins;
    const T* im = spectrum.imag.data().data() + r * bins;
    for (std::size_t k = 0; k < bins; ++k)
      buffer[k] = Complex(static_cast<double>(re[k]), static_cast<double>(im[k]));
    buffer[0].imag(0.0);
    if (even) buffer[bins - 1].imag(0.0);
    for (std::size_t k = bins; k < length; ++k) buffer[k] = std::conj(buffer[length - k]);
    plan.inverse(buffer);
    T* y = out.data().data() + r * length;
    for (std::size_t j = 0; j < length; ++j) y[j] = static_cast<T>(buffer[j].real() * inv_n);
  }
  return out;
}

template ComplexSpectrum<float> rfft(const BasicTensor<float>&);
template ComplexSpectrum<double> rfft(const BasicTensor<double>&);
template BasicTensor<float> irfft(const ComplexSpectrum<float>&, std::size_t);
template BasicTensor<double> irfft(const ComplexSpectrum<double>&, std::size_t);

}  // namespace rpmixer
