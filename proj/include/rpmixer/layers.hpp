#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rpmixer/rng.hpp"
#include "rpmixer/tensor.hpp"

namespace rpmixer {

/// A trainable tensor paired with its gradient accumulator.
template <typename T>
struct ParamRef {
  std::string name;
  BasicTensor<T>* value;
  BasicTensor<T>* grad;
};

/// Any tensor that belongs to a model's persistent state, trainable or not.
template <typename T>
struct StateRef {
  std::string name;
  BasicTensor<T>* value;
};

/// Affine map y = x W^T + b over the last axis.
template <typename T>
class LinearLayer {
 public:
  LinearLayer() = default;
  LinearLayer(BasicTensor<T> weight, BasicTensor<T> bias);

  /// Weights uniform on [-1/sqrt(in), 1/sqrt(in)], bias zero.
  static LinearLayer init(SeededRng& rng, std::size_t in, std::size_t out);

  std::size_t in_features() const noexcept { return weight_.rank() == 2 ? weight_.dim(1) : 0; }
  std::size_t out_features() const noexcept { return weight_.rank() == 2 ? weight_.dim(0) : 0; }

  BasicTensor<T> forward(const BasicTensor<T>& x) const;
  /// Returns the input gradient and accumulates into the parameter gradients.
  BasicTensor<T> backward(const BasicTensor<T>& x, const BasicTensor<T>& upstream);

  void zero_grad();
  void collect_parameters(std::vector<ParamRef<T>>& out, const std::string& prefix);
  void collect_state(std::vector<StateRef<T>>& out, const std::string& prefix);
  std::size_t parameter_count() const noexcept { return weight_.size() + bias_.size(); }

  BasicTensor<T>& weight() noexcept { return weight_; }
  const BasicTensor<T>& weight() const noexcept { return weight_; }
  BasicTensor<T>& bias() noexcept { return bias_; }
  const BasicTensor<T>& bias() const noexcept { return bias_; }
  const BasicTensor<T>& grad_weight() const noexcept { return grad_weight_; }
  const BasicTensor<T>& grad_bias() const noexcept { return grad_bias_; }

 private:
  void check_input(const BasicTensor<T>& x, const char* what) const;

  BasicTensor<T> weight_;  // [out x in]
  BasicTensor<T> bias_;    // [out]
  BasicTensor<T> grad_weight_;
  BasicTensor<T> grad_bias_;
};

/// Linear map with complex weights applied to the one-sided spectrum of each
/// row: rfft, (Wr + i Wi)(xr + i xi) + (br + i bi), irfft back to the input
/// length. The layer is defined by its bin count b, so it accepts any signal
/// length t with floor(t/2)+1 == b.
template <typename T>
class ComplexLinearLayer {
 public:
  ComplexLinearLayer() = default;
  ComplexLinearLayer(BasicTensor<T> w_real, BasicTensor<T> w_imag, BasicTensor<T> b_real,
                     BasicTensor<T> b_imag, bool with_bias = true);

  /// Both weight components uniform on [-1/sqrt(b), 1/sqrt(b)], biases zero.
  static ComplexLinearLayer init(SeededRng& rng, std::size_t bins, bool with_bias = true);

  std::size_t bins() const noexcept { return w_real_.rank() == 2 ? w_real_.dim(0) : 0; }
  bool has_bias() const noexcept { return with_bias_; }

  BasicTensor<T> forward(const BasicTensor<T>& x) const;
  BasicTensor<T> backward(const BasicTensor<T>& x, const BasicTensor<T>& upstream);

  void zero_grad();
  void collect_parameters(std::vector<ParamRef<T>>& out, const std::string& prefix);
  void collect_state(std::vector<StateRef<T>>& out, const std::string& prefix);
  std::size_t parameter_count() const noexcept;

  BasicTensor<T>& w_real() noexcept { return w_real_; }
  BasicTensor<T>& w_imag() noexcept { return w_imag_; }
  BasicTensor<T>& b_real() noexcept { return b_real_; }
  BasicTensor<T>& b_imag() noexcept { return b_imag_; }
  const BasicTensor<T>& w_real() const noexcept { return w_real_; }
  const BasicTensor<T>& w_imag() const noexcept { return w_imag_; }
  const BasicTensor<T>& b_real() const noexcept { return b_real_; }
  const BasicTensor<T>& b_imag() const noexcept { return b_imag_; }
  const BasicTensor<T>& grad_w_real() const noexcept { return grad_w_real_; }
  const BasicTensor<T>& grad_w_imag() const noexcept { return grad_w_imag_; }
  const BasicTensor<T>& grad_b_real() const noexcept { return grad_b_real_; }
  const BasicTensor<T>& grad_b_imag() const noexcept { return grad_b_imag_; }

 private:
  void check_input(const BasicTensor<T>& x, const char* what) const;

  bool with_bias_ = true;
  BasicTensor<T> w_real_, w_imag_;  // [b x b]
  BasicTensor<T> b_real_, b_imag_;  // [b]
  BasicTensor<T> grad_w_real_, grad_w_imag_;
  BasicTensor<T> grad_b_real_, grad_b_imag_;
};

/// Fixed linear map y = x W^T with W drawn from unscaled standard normals.
/// There is no bias and no gradient buffer; the weight never changes after
/// construction.
template <typename T>
class RandomProjectionLayer {
 public:
  RandomProjectionLayer() = default;
  RandomProjectionLayer(std::size_t in, std::size_t out, std::uint64_t seed);

  std::size_t in_features() const noexcept { return weight_.rank() == 2 ? weight_.dim(1) : 0; }
  std::size_t out_features() const noexcept { return weight_.rank() == 2 ? weight_.dim(0) : 0; }
  std::uint64_t seed() const noexcept { return seed_; }

  BasicTensor<T> forward(const BasicTensor<T>& x) const;
  BasicTensor<T> backward(const BasicTensor<T>& upstream) const;

  const BasicTensor<T>& weight() const noexcept { return weight_; }
  /// Exposes the weight for checkpoint restore only.
  void collect_state(std::vector<StateRef<T>>& out, const std::string& prefix);
  std::size_t frozen_count() const noexcept { return weight_.size(); }

 private:
  std::uint64_t seed_ = 0;
  BasicTensor<T> weight_;  // [out x in]
};

}  // namespace rpmixer
