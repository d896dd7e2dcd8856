#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rpmixer/data.hpp"
#include "rpmixer/layers.hpp"
#include "rpmixer/model.hpp"

namespace rpmixer {

/// Repeats the last observed value of feature 0 for every future step.
/// x: [.. x n x d*t_past] -> [.. x n x t_future].
Tensor baseline_hl(const Tensor& x, std::size_t t_past, std::size_t t_future);

/// Historical-last as a Forecaster so it goes through the same evaluation path.
/// It has no parameters and cannot be trained.
template <typename T>
class HistoricalLastForecaster final : public Forecaster<T> {
 public:
  HistoricalLastForecaster(std::size_t t_past, std::size_t t_future)
      : t_past_(t_past), t_future_(t_future) {}

  BasicTensor<T> predict(const BasicTensor<T>& x) const override;
  BasicTensor<T> train_forward(const BasicTensor<T>& x) override;
  void train_backward(const BasicTensor<T>& grad_output) override;
  std::vector<ParamRef<T>> parameters() override { return {}; }
  void zero_grad() override {}
  std::unique_ptr<Forecaster<T>> clone() const override;
  std::size_t trainable_parameter_count() const override { return 0; }

 private:
  std::size_t t_past_;
  std::size_t t_future_;
};

/// One input_length -> t_future affine map shared by every node.
template <typename T>
class LinearForecaster final : public Forecaster<T> {
 public:
  LinearForecaster(std::size_t input_length, std::size_t t_future, std::uint64_t seed);
  explicit LinearForecaster(LinearLayer<T> layer) : layer_(std::move(layer)) {}

  BasicTensor<T> predict(const BasicTensor<T>& x) const override { return layer_.forward(x); }
  BasicTensor<T> train_forward(const BasicTensor<T>& x) override;
  void train_backward(const BasicTensor<T>& grad_output) override;
  std::vector<ParamRef<T>> parameters() override;
  void zero_grad() override { layer_.zero_grad(); }
  std::unique_ptr<Forecaster<T>> clone() const override;
  std::size_t trainable_parameter_count() const override { return layer_.parameter_count(); }

  const LinearLayer<T>& layer() const noexcept { return layer_; }
  LinearLayer<T>& layer() noexcept { return layer_; }

 private:
  LinearLayer<T> layer_;
  BasicTensor<T> last_input_;
};

/// Nearest match of a query within a training corpus.
struct NeighborMatch {
  std::size_t offset = 0;
  double distance = 0.0;
};

/// z-normalized Euclidean distance between equal-length sequences. A sequence
/// with zero variance normalizes to all zeros.
double znorm_distance(std::span<const float> a, std::span<const float> b);

/// Brute-force nearest neighbor of `query` among every length-|query| window of
/// `corpus` that is followed by at least `t_future` further values. Ties keep
/// the earliest offset.
NeighborMatch nearest_neighbor(std::span<const float> corpus, std::span<const float> query,
                               std::size_t t_future);

/// Per-node 1NN: each node searches only its own training history (feature 0)
/// and emits the t_future values that followed the best match.
template <typename T>
class NearestNeighborForecaster final : public Forecaster<T> {
 public:
  NearestNeighborForecaster(const RawSeries& train, std::size_t t_past, std::size_t t_future);

  BasicTensor<T> predict(const BasicTensor<T>& x) const override;
  BasicTensor<T> train_forward(const BasicTensor<T>& x) override;
  void train_backward(const BasicTensor<T>& grad_output) override;
  std::vector<ParamRef<T>> parameters() override { return {}; }
  void zero_grad() override {}
  std::unique_ptr<Forecaster<T>> clone() const override;
  std::size_t trainable_parameter_count() const override { return 0; }

  /// Feature-0 history of one node.
  std::span<const float> corpus(std::size_t node) const;

 private:
  std::size_t nodes_;
  std::size_t steps_;
  std::size_t t_past_;
  std::size_t t_future_;
  std::vector<float> corpus_;       // [n x steps]
  std::vector<double> normalized_;  // [n x candidates x t_past], z-normalized windows
  std::size_t candidates_ = 0;
};

}  // namespace rpmixer
