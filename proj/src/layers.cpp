#include "rpmixer/layers.hpp"

#include <cmath>

#include "rpmixer/fft.hpp"
#include "rpmixer/kernels.hpp"

namespace rpmixer {
namespace {

template <typename T>
void sum_rows_into(const BasicTensor<T>& x, BasicTensor<T>& acc) {
  const std::size_t cols = x.cols();
  const T* src = x.data().data();
  T* dst = acc.data().data();
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < cols; ++j) dst[j] += src[r * cols + j];
}

template <typename T>
void add_row_bias(BasicTensor<T>& y, const BasicTensor<T>& bias) {
  const std::size_t cols = y.cols();
  T* dst = y.data().data();
  const T* b = bias.data().data();
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t j = 0; j < cols; ++j) dst[r * cols + j] += b[j];
}

template <typename T>
Shape with_last(const Shape& shape, std::size_t last) {
  Shape out = shape;
  out.back() = last;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// LinearLayer

template <typename T>
LinearLayer<T>::LinearLayer(BasicTensor<T> weight, BasicTensor<T> bias)
    : weight_(std::move(weight)), bias_(std::move(bias)) {
  if (weight_.rank() != 2 || bias_.rank() != 1 || bias_.dim(0) != weight_.dim(0)) {
    throw DimensionError("linear: weight " + shape_string(weight_.shape()) + " and bias " +
                         shape_string(bias_.shape()) + " are inconsistent");
  }
  grad_weight_ = BasicTensor<T>(weight_.shape());
  grad_bias_ = BasicTensor<T>(bias_.shape());
}

template <typename T>
LinearLayer<T> LinearLayer<T>::init(SeededRng& rng, std::size_t in, std::size_t out) {
  if (in == 0 || out == 0) throw DimensionError("linear: in and out must be >= 1");
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  return LinearLayer(rand_uniform<T>(rng, {out, in}, -bound, bound), BasicTensor<T>({out}));
}

template <typename T>
void LinearLayer<T>::check_input(const BasicTensor<T>& x, const char* what) const {
  if (x.rank() == 0 || x.cols() != in_features()) {
    throw DimensionError(std::string(what) + ": expected last dim " +
                         std::to_string(in_features()) + ", got " + shape_string(x.shape()));
  }
}

template <typename T>
BasicTensor<T> LinearLayer<T>::forward(const BasicTensor<T>& x) const {
  check_input(x, "linear_forward");
  BasicTensor<T> y(with_last<T>(x.shape(), out_features()));
  kernels::gemm_nt(x.rows(), in_features(), out_features(), x.data().data(),
                   weight_.data().data(), y.data().data(), false);
  add_row_bias(y, bias_);
  return y;
}

template <typename T>
BasicTensor<T> LinearLayer<T>::backward(const BasicTensor<T>& x, const BasicTensor<T>& upstream) {
  check_input(x, "linear_backward");
  require_same_shape(with_last<T>(x.shape(), out_features()), upstream.shape(),
                     "linear_backward");
  const std::size_t rows = x.rows();
  BasicTensor<T> grad_input(x.shape());
  kernels::gemm_nn(rows, out_features(), in_features(), upstream.data().data(),
                   weight_.data().data(), grad_input.data().data(), false);
  kernels::gemm_tn(rows, out_features(), in_features(), upstream.data().data(), x.data().data(),
                   grad_weight_.data().data(), true);
  sum_rows_into(upstream, grad_bias_);
  return grad_input;
}

template <typename T>
void LinearLayer<T>::zero_grad() {
  grad_weight_.fill(T{0});
  grad_bias_.fill(T{0});
}

template <typename T>
void LinearLayer<T>::collect_parameters(std::vector<ParamRef<T>>& out,
                                        const std::string& prefix) {
  out.push_back({prefix + ".weight", &weight_, &grad_weight_});
  out.push_back({prefix + ".bias", &bias_, &grad_bias_});
}

template <typename T>
void LinearLayer<T>::collect_state(std::vector<StateRef<T>>& out, const std::string& prefix) {
  out.push_back({prefix + ".weight", &weight_});
  out.push_back({prefix + ".bias", &bias_});
}

// ---------------------------------------------------------------------------
// ComplexLinearLayer

template <typename T>
ComplexLinearLayer<T>::ComplexLinearLayer(BasicTensor<T> w_real, BasicTensor<T> w_imag,
                                          BasicTensor<T> b_real, BasicTensor<T> b_imag,
                                          bool with_bias)
    : with_bias_(with_bias),
      w_real_(std::move(w_real)),
      w_imag_(std::move(w_imag)),
      b_real_(std::move(b_real)),
      b_imag_(std::move(b_imag)) {
  require_same_shape(w_real_.shape(), w_imag_.shape(), "complex_linear");
  require_same_shape(b_real_.shape(), b_imag_.shape(), "complex_linear");
  if (w_real_.rank() != 2 || w_real_.dim(0) != w_real_.dim(1) || b_real_.rank() != 1 ||
      b_real_.dim(0) != w_real_.dim(0)) {
    throw DimensionError("complex_linear: weights must be square [b x b] with [b] biases, got " +
                         shape_string(w_real_.shape()) + " and " + shape_string(b_real_.shape()));
  }
  grad_w_real_ = BasicTensor<T>(w_real_.shape());
  grad_w_imag_ = BasicTensor<T>(w_imag_.shape());
  grad_b_real_ = BasicTensor<T>(b_real_.shape());
  grad_b_imag_ = BasicTensor<T>(b_imag_.shape());
}

template <typename T>
ComplexLinearLayer<T> ComplexLinearLayer<T>::init(SeededRng& rng, std::size_t bins,
                                                  bool with_bias) {
  if (bins == 0) throw DimensionError("complex_linear: bins must be >= 1");
  const double bound = 1.0 / std::sqrt(static_cast<double>(bins));
  auto w_real = rand_uniform<T>(rng, {bins, bins}, -bound, bound);
  auto w_imag = rand_uniform<T>(rng, {bins, bins}, -bound, bound);
  return ComplexLinearLayer(std::move(w_real), std::move(w_imag), BasicTensor<T>({bins}),
                            BasicTensor<T>({bins}), with_bias);
}

template <typename T>
std::size_t ComplexLinearLayer<T>::parameter_count() const noexcept {
  return w_real_.size() + w_imag_.size() + (with_bias_ ? b_real_.size() + b_imag_.size() : 0);
}

template <typename T>
void ComplexLinearLayer<T>::check_input(const BasicTensor<T>& x, const char* what) const {
  if (x.rank() == 0 || bin_count(x.cols()) != bins()) {
    throw DimensionError(std::string(what) + ": layer has " + std::to_string(bins()) +
                         " bins but input " + shape_string(x.shape()) + " yields " +
                         std::to_string(x.rank() == 0 ? 0 : bin_count(x.cols())));
  }
}

template <typename T>
BasicTensor<T> ComplexLinearLayer<T>::forward(const BasicTensor<T>& x) const {
  check_input(x, "complex_linear_forward");
  const std::size_t b = bins();
  const ComplexSpectrum<T> spec = rfft(x);
  const std::size_t rows = spec.real.rows();
  ComplexSpectrum<T> out{BasicTensor<T>(spec.real.shape()), BasicTensor<T>(spec.real.shape())};
  const T* xr = spec.real.data().data();
  const T* xi = spec.imag.data().data();
  T* yr = out.real.data().data();
  T* yi = out.imag.data().data();
  const T* wr = w_real_.data().data();
  const T* wi = w_imag_.data().data();
  // (Wr xr - Wi xi) + i (Wr xi + Wi xr), row-vector form.
  kernels::gemm_nt(rows, b, b, xr, wr, yr, false);
  BasicTensor<T> tmp(spec.real.shape());
  kernels::gemm_nt(rows, b, b, xi, wi, tmp.data().data(), false);
  for (std::size_t i = 0; i < out.real.size(); ++i) yr[i] -= tmp[i];
  kernels::gemm_nt(rows, b, b, xi, wr, yi, false);
  kernels::gemm_nt(rows, b, b, xr, wi, yi, true);
  if (with_bias_) {
    add_row_bias(out.real, b_real_);
    add_row_bias(out.imag, b_imag_);
  }
  return irfft(out, x.cols());
}

template <typename T>
BasicTensor<T> ComplexLinearLayer<T>::backward(const BasicTensor<T>& x,
                                               const BasicTensor<T>& upstream) {
  check_input(x, "complex_linear_backward");
  require_same_shape(x.shape(), upstream.shape(), "complex_linear_backward");
  const std::size_t n = x.cols();
  const std::size_t b = bins();
  const bool even = n % 2 == 0;
  const ComplexSpectrum<T> spec = rfft(x);
  const std::size_t rows = spec.real.rows();

  // Adjoint of irfft: y_j = (1/n) sum_k c_k (Re_k cos - Im_k sin), c_k = 1 at
  // DC/Nyquist and 2 elsewhere, so dL/dRe_k = (c_k/n) Re(rfft(g))_k and
  // dL/dIm_k = (c_k/n) Im(rfft(g))_k. Imaginary DC/Nyquist never reach the output.
  ComplexSpectrum<T> g_out = rfft(upstream);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t r = 0; r < rows; ++r) {
    T* gr = g_out.real.data().data() + r * b;
    T* gi = g_out.imag.data().data() + r * b;
    for (std::size_t k = 0; k < b; ++k) {
      const bool edge = k == 0 || (even && k == b - 1);
      const T scale = static_cast<T>((edge ? 1.0 : 2.0) * inv_n);
      gr[k] *= scale;
      gi[k] = edge ? T{0} : gi[k] * scale;
    }
  }

  const T* xr = spec.real.data().data();
  const T* xi = spec.imag.data().data();
  const T* gr = g_out.real.data().data();
  const T* gi = g_out.imag.data().data();
  const T* wr = w_real_.data().data();
  const T* wi = w_imag_.data().data();

  // Weight gradients: dWr = gr^T xr + gi^T xi, dWi = gi^T xr - gr^T xi.
  kernels::gemm_tn(rows, b, b, gr, xr, grad_w_real_.data().data(), true);
  kernels::gemm_tn(rows, b, b, gi, xi, grad_w_real_.data().data(), true);
  kernels::gemm_tn(rows, b, b, gi, xr, grad_w_imag_.data().data(), true);
  BasicTensor<T> tmp({b, b});
  kernels::gemm_tn(rows, b, b, gr, xi, tmp.data().data(), false);
  for (std::size_t i = 0; i < tmp.size(); ++i) grad_w_imag_[i] -= tmp[i];
  if (with_bias_) {
    sum_rows_into(g_out.real, grad_b_real_);
    sum_rows_into(g_out.imag, grad_b_imag_);
  }

  // Spectrum gradients: dxr = gr Wr + gi Wi, dxi = gi Wr - gr Wi.
  ComplexSpectrum<T> g_in{BasicTensor<T>(spec.real.shape()), BasicTensor<T>(spec.real.shape())};
  T* dxr = g_in.real.data().data();
  T* dxi = g_in.imag.data().data();
  kernels::gemm_nn(rows, b, b, gr, wr, dxr, false);
  kernels::gemm_nn(rows, b, b, gi, wi, dxr, true);
  kernels::gemm_nn(rows, b, b, gi, wr, dxi, false);
  BasicTensor<T> tmp_rows(spec.real.shape());
  kernels::gemm_nn(rows, b, b, gr, wi, tmp_rows.data().data(), false);
  for (std::size_t i = 0; i < tmp_rows.size(); ++i) dxi[i] -= tmp_rows[i];

  // Adjoint of rfft: dx_j = sum_k (dxr_k cos - dxi_k sin) = n * irfft(dx / c).
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < b; ++k) {
      const bool edge = k == 0 || (even && k == b - 1);
      const T scale = static_cast<T>(static_cast<double>(n) / (edge ? 1.0 : 2.0));
      dxr[r * b + k] *= scale;
      dxi[r * b + k] *= scale;
    }
  }
  return irfft(g_in, n);
}

template <typename T>
void ComplexLinearLayer<T>::zero_grad() {
  grad_w_real_.fill(T{0});
  grad_w_imag_.fill(T{0});
  grad_b_real_.fill(T{0});
  grad_b_imag_.fill(T{0});
}

template <typename T>
void ComplexLinearLayer<T>::collect_parameters(std::vector<ParamRef<T>>& out,
                                               const std::string& prefix) {
  out.push_back({prefix + ".w_real", &w_real_, &grad_w_real_});
  out.push_back({prefix + ".w_imag", &w_imag_, &grad_w_imag_});
  if (with_bias_) {
    out.push_back({prefix + ".b_real", &b_real_, &grad_b_real_});
    out.push_back({prefix + ".b_imag", &b_imag_, &grad_b_imag_});
  }
}

template <typename T>
void ComplexLinearLayer<T>::collect_state(std::vector<StateRef<T>>& out,
                                          const std::string& prefix) {
  out.push_back({prefix + ".w_real", &w_real_});
  out.push_back({prefix + ".w_imag", &w_imag_});
  if (with_bias_) {
    out.push_back({prefix + ".b_real", &b_real_});
    out.push_back({prefix + ".b_imag", &b_imag_});
  }
}

// ---------------------------------------------------------------------------
// RandomProjectionLayer

template <typename T>
RandomProjectionLayer<T>::RandomProjectionLayer(std::size_t in, std::size_t out,
                                                std::uint64_t seed)
    : seed_(seed) {
  if (in == 0 || out == 0) throw DimensionError("random_projection: in and out must be >= 1");
  SeededRng rng(seed);
  weight_ = randn<T>(rng, {out, in});
}

template <typename T>
BasicTensor<T> RandomProjectionLayer<T>::forward(const BasicTensor<T>& x) const {
  if (x.rank() == 0 || x.cols() != in_features()) {
    throw DimensionError("random_projection_forward: expected last dim " +
                         std::to_string(in_features()) + ", got " + shape_string(x.shape()));
  }
  BasicTensor<T> y(with_last<T>(x.shape(), out_features()));
  kernels::gemm_nt(x.rows(), in_features(), out_features(), x.data().data(),
                   weight_.data().data(), y.data().data(), false);
  return y;
}

template <typename T>
BasicTensor<T> RandomProjectionLayer<T>::backward(const BasicTensor<T>& upstream) const {
  if (upstream.rank() == 0 || upstream.cols() != out_features()) {
    throw DimensionError("random_projection_backward: expected last dim " +
                         std::to_string(out_features()) + ", got " +
                         shape_string(upstream.shape()));
  }
  BasicTensor<T> grad_input(with_last<T>(upstream.shape(), in_features()));
  kernels::gemm_nn(upstream.rows(), out_features(), in_features(), upstream.data().data(),
                   weight_.data().data(), grad_input.data().data(), false);
  return grad_input;
}

template <typename T>
void RandomProjectionLayer<T>::collect_state(std::vector<StateRef<T>>& out,
                                             const std::string& prefix) {
  out.push_back({prefix + ".weight", &weight_});
}

template class LinearLayer<float>;
template class LinearLayer<double>;
template class ComplexLinearLayer<float>;
template class ComplexLinearLayer<double>;
template class RandomProjectionLayer<float>;
template class RandomProjectionLayer<double>;

}  // namespace rpmixer
