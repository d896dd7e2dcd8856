#include "rpmixer/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "rpmixer/kernels.hpp"

namespace rpmixer {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": shape mismatch " + shape_string(a) + " vs " +
                         shape_string(b));
  }
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, T fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw DimensionError("tensor: shape " + shape_string(shape_) + " holds " +
                         std::to_string(shape_size(shape_)) + " values, got " +
                         std::to_string(data_.size()));
  }
}

template <typename T>
BasicTensor<T> BasicTensor<T>::matrix(std::initializer_list<std::initializer_list<T>> rows) {
  const std::size_t m = rows.size();
  const std::size_t k = m == 0 ? 0 : rows.begin()->size();
  std::vector<T> data;
  data.reserve(m * k);
  for (const auto& r : rows) {
    if (r.size() != k) throw DimensionError("tensor: ragged matrix literal");
    data.insert(data.end(), r.begin(), r.end());
  }
  return BasicTensor({m, k}, std::move(data));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::vector(std::initializer_list<T> values) {
  return BasicTensor({values.size()}, std::vector<T>(values));
}

template <typename T>
std::size_t BasicTensor<T>::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw DimensionError("tensor: axis " + std::to_string(axis) + " out of range for " +
                         shape_string(shape_));
  }
  return shape_[axis];
}

template <typename T>
T& BasicTensor<T>::at(std::size_t i, std::size_t j) {
  return data_[i * cols() + j];
}
template <typename T>
const T& BasicTensor<T>::at(std::size_t i, std::size_t j) const {
  return data_[i * cols() + j];
}
template <typename T>
T& BasicTensor<T>::at(std::size_t b, std::size_t i, std::size_t j) {
  return data_[(b * shape_[shape_.size() - 2] + i) * cols() + j];
}
template <typename T>
const T& BasicTensor<T>::at(std::size_t b, std::size_t i, std::size_t j) const {
  return data_[(b * shape_[shape_.size() - 2] + i) * cols() + j];
}

template <typename T>
BasicTensor<T> BasicTensor<T>::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw DimensionError("reshape: cannot view " + shape_string(shape_) + " as " +
                         shape_string(shape));
  }
  return BasicTensor(std::move(shape), data_);
}

template <typename T>
void BasicTensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
bool BasicTensor<T>::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
}

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw DimensionError("matmul: expected rank-2 operands, got " + shape_string(a.shape()) +
                         " and " + shape_string(b.shape()));
  }
  if (a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  BasicTensor<T> out({a.dim(0), b.dim(1)});
  kernels::gemm_nn(a.dim(0), a.dim(1), b.dim(1), a.data().data(), b.data().data(),
                   out.data().data(), false);
  return out;
}

template <typename T>
BasicTensor<T> transpose(const BasicTensor<T>& a) {
  if (a.rank() < 2) {
    throw DimensionError("transpose: rank >= 2 required, got " + shape_string(a.shape()));
  }
  const std::size_t m = a.shape()[a.rank() - 2];
  const std::size_t k = a.shape()[a.rank() - 1];
  const std::size_t batch = m * k == 0 ? 0 : a.size() / (m * k);
  Shape shape = a.shape();
  std::swap(shape[shape.size() - 2], shape[shape.size() - 1]);
  BasicTensor<T> out(shape);
  const T* src = a.data().data();
  T* dst = out.data().data();
  for (std::size_t b = 0; b < batch; ++b) {
    const T* s = src + b * m * k;
    T* d = dst + b * m * k;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < k; ++j) d[j * m + i] = s[i * k + j];
  }
  return out;
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& a) {
  BasicTensor<T> out = a;
  for (T& v : out.data()) v = v > T{0} ? v : T{0};
  return out;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& a, const BasicTensor<T>& upstream) {
  require_same_shape(a.shape(), upstream.shape(), "relu_backward");
  BasicTensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] > T{0} ? upstream[i] : T{0};
  return out;
}

template <typename T>
BasicTensor<T> operator+(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  BasicTensor<T> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

template <typename T>
BasicTensor<T> operator-(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "subtract");
  BasicTensor<T> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

template <typename T>
BasicTensor<T> operator*(T scale, const BasicTensor<T>& a) {
  BasicTensor<T> out = a;
  for (T& v : out.data()) v *= scale;
  return out;
}

template <typename T>
void add_inplace(BasicTensor<T>& target, const BasicTensor<T>& addend) {
  require_same_shape(target.shape(), addend.shape(), "add_inplace");
  for (std::size_t i = 0; i < target.size(); ++i) target[i] += addend[i];
}

template <typename T>
double max_abs_diff(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "max_abs_diff");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  return worst;
}

template <typename T>
double max_abs(const BasicTensor<T>& a) {
  double worst = 0.0;
  for (T v : a.data()) worst = std::max(worst, std::abs(static_cast<double>(v)));
  return worst;
}

#define RPMIXER_INSTANTIATE(T)                                                           \
  template class BasicTensor<T>;                                                         \
  template BasicTensor<T> matmul(const BasicTensor<T>&, const BasicTensor<T>&);          \
  template BasicTensor<T> transpose(const BasicTensor<T>&);                              \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                   \
  template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);   \
  template BasicTensor<T> operator+(const BasicTensor<T>&, const BasicTensor<T>&);       \
  template BasicTensor<T> operator-(const BasicTensor<T>&, const BasicTensor<T>&);       \
  template BasicTensor<T> operator*(T, const BasicTensor<T>&);                           \
  template void add_inplace(BasicTensor<T>&, const BasicTensor<T>&);                     \
  template double max_abs_diff(const BasicTensor<T>&, const BasicTensor<T>&);            \
  template double max_abs(const BasicTensor<T>&);

RPMIXER_INSTANTIATE(float)
RPMIXER_INSTANTIATE(double)

#undef RPMIXER_INSTANTIATE

}  // namespace rpmixer
