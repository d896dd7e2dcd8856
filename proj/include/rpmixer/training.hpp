#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rpmixer/data.hpp"
#include "rpmixer/layers.hpp"
#include "rpmixer/metrics.hpp"
#include "rpmixer/model.hpp"

namespace rpmixer {

/// Training could not proceed (empty data, non-finite loss).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LossKind { mae, mse };

LossKind parse_loss(const std::string& name);
std::string to_string(LossKind kind);

template <typename T>
struct LossResult {
  double value = 0.0;
  BasicTensor<T> grad;  // dLoss/dpred
};

/// mean |pred - target|; gradient sign(pred - target) / count, zero at ties.
template <typename T>
LossResult<T> mae_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target);

/// mean (pred - target)^2; gradient 2 (pred - target) / count.
template <typename T>
LossResult<T> mse_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target);

template <typename T>
LossResult<T> compute_loss(LossKind kind, const BasicTensor<T>& pred,
                           const BasicTensor<T>& target);

struct AdamWOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// Adam with decoupled weight decay:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
///   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps) - lr * wd * theta
/// Moment buffers are created lazily on the first step and matched to the
/// parameter list by position.
template <typename T>
class AdamW {
 public:
  explicit AdamW(AdamWOptions options = {}) : options_(options) {}

  void step(std::span<const ParamRef<T>> params);

  const AdamWOptions& options() const noexcept { return options_; }
  std::uint64_t step_count() const noexcept { return step_; }
  const std::vector<BasicTensor<T>>& first_moments() const noexcept { return m_; }
  const std::vector<BasicTensor<T>>& second_moments() const noexcept { return v_; }
  void restore(std::uint64_t step, std::vector<BasicTensor<T>> m, std::vector<BasicTensor<T>> v);

 private:
  AdamWOptions options_;
  std::uint64_t step_ = 0;
  std::vector<BasicTensor<T>> m_;
  std::vector<BasicTensor<T>> v_;
};

/// Stops once `patience` consecutive epochs fail to strictly improve on the best metric.
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience = 7) : patience_(patience) {}

  /// Records one epoch's metric; returns true when it is a new best.
  bool update(double metric);
  bool should_stop() const noexcept { return epochs_ > 0 && since_improvement_ >= patience_; }

  std::size_t patience() const noexcept { return patience_; }
  std::size_t epochs() const noexcept { return epochs_; }
  /// 1-based epoch of the best metric, 0 before any update.
  std::size_t best_epoch() const noexcept { return best_epoch_; }
  double best_metric() const noexcept { return best_; }
  std::size_t epochs_since_improvement() const noexcept { return since_improvement_; }

 private:
  std::size_t patience_;
  std::size_t epochs_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t since_improvement_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

/// Per node-feature z-scoring with statistics from the training split only.
class Standardizer {
 public:
  static constexpr double kMinStd = 1e-8;

  Standardizer() = default;
  Standardizer(Tensor mean, Tensor std);

  static Standardizer fit(const RawSeries& train);
  /// Mean 0, std 1: the transforms become identities.
  static Standardizer identity(std::size_t nodes, std::size_t features);

  RawSeries transform(const RawSeries& raw) const;
  RawSeries inverse_transform(const RawSeries& raw) const;
  /// De-standardizes a [.. x n x H] forecast of feature 0 in place.
  void inverse_target(Tensor& forecast) const;

  const Tensor& mean() const noexcept { return mean_; }  // [n x d]
  const Tensor& std() const noexcept { return std_; }    // [n x d]
  std::size_t nodes() const { return mean_.rank() == 2 ? mean_.dim(0) : 0; }
  std::size_t features() const { return mean_.rank() == 2 ? mean_.dim(1) : 0; }

 private:
  void check(const RawSeries& raw) const;
  Tensor mean_;
  Tensor std_;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_mae = 0.0;
  double lr = 0.0;
  double seconds = 0.0;
};

struct FitOptions {
  LossKind loss = LossKind::mae;
  std::size_t max_epochs = 100;
  std::size_t batch_size = 32;
  std::size_t patience = 7;
  AdamWOptions optimizer;
  std::uint64_t seed = 0;  // shuffling uses seeds::shuffle(seed)
  std::size_t threads = 1;
  bool mask_zero = true;
  bool record_timing = false;  // otherwise EpochRecord::seconds stays 0
  std::function<void(const EpochRecord&)> on_epoch;
};

template <typename T>
struct FitResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_mae = std::numeric_limits<double>::quiet_NaN();
  bool stopped_early = false;
  AdamW<T> optimizer;
};

/// Mini-batch AdamW training with per-epoch validation MAE on de-standardized
/// predictions and early stopping; the best epoch's parameters are restored
/// before returning. `scaler` may be null when the data is not standardized.
template <typename T>
FitResult<T> fit(Forecaster<T>& model, const WindowedDataset& train, const WindowedDataset& val,
                 const FitOptions& options, const Standardizer* scaler = nullptr);

/// Forecasts every window; returns (prediction, target), both [S x n x H] and
/// de-standardized when `scaler` is given.
template <typename T>
std::pair<Tensor, Tensor> predict_dataset(const Forecaster<T>& model, const WindowedDataset& data,
                                          const Standardizer* scaler, std::size_t batch_size = 64);

template <typename T>
MetricReport evaluate_forecaster(const Forecaster<T>& model, const WindowedDataset& data,
                                 const Standardizer* scaler, bool mask_zero,
                                 std::size_t batch_size = 64);

/// Every parameter value, in parameters() order.
template <typename T>
std::vector<BasicTensor<T>> snapshot_parameters(Forecaster<T>& model);
template <typename T>
void restore_parameters(Forecaster<T>& model, const std::vector<BasicTensor<T>>& values);

}  // namespace rpmixer
