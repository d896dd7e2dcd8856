#include "rpmixer/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "rpmixer/rng.hpp"

namespace rpmixer {

LossKind parse_loss(const std::string& name) {
  if (name == "mae") return LossKind::mae;
  if (name == "mse") return LossKind::mse;
  throw std::invalid_argument("unknown loss '" + name + "' (expected mae or mse)");
}

std::string to_string(LossKind kind) { return kind == LossKind::mae ? "mae" : "mse"; }

template <typename T>
LossResult<T> mae_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target) {
  require_same_shape(pred.shape(), target.shape(), "mae_loss");
  if (pred.empty()) throw TrainingError("mae_loss: empty prediction");
  LossResult<T> out{0.0, BasicTensor<T>(pred.shape())};
  const double inv = 1.0 / static_cast<double>(pred.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    sum += std::abs(e);
    out.grad[i] = static_cast<T>(e > 0.0 ? inv : (e < 0.0 ? -inv : 0.0));
  }
  out.value = sum * inv;
  return out;
}

template <typename T>
LossResult<T> mse_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target) {
  require_same_shape(pred.shape(), target.shape(), "mse_loss");
  if (pred.empty()) throw TrainingError("mse_loss: empty prediction");
  LossResult<T> out{0.0, BasicTensor<T>(pred.shape())};
  const double inv = 1.0 / static_cast<double>(pred.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    sum += e * e;
    out.grad[i] = static_cast<T>(2.0 * e * inv);
  }
  out.value = sum * inv;
  return out;
}

template <typename T>
LossResult<T> compute_loss(LossKind kind, const BasicTensor<T>& pred,
                           const BasicTensor<T>& target) {
  return kind == LossKind::mae ? mae_loss(pred, target) : mse_loss(pred, target);
}

// ---------------------------------------------------------------------------
// AdamW

template <typename T>
void AdamW<T>::step(std::span<const ParamRef<T>> params) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.value->shape());
      v_.emplace_back(p.value->shape());
    }
  }
  if (m_.size() != params.size()) {
    throw DimensionError("adamw: optimizer tracks " + std::to_string(m_.size()) +
                         " parameters, got " + std::to_string(params.size()));
  }
  ++step_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  const double lr = options_.lr;
  const double decay = options_.lr * options_.weight_decay;
  for (std::size_t p = 0; p < params.size(); ++p) {
    BasicTensor<T>& theta = *params[p].value;
    const BasicTensor<T>& grad = *params[p].grad;
    require_same_shape(theta.shape(), grad.shape(), "adamw");
    require_same_shape(theta.shape(), m_[p].shape(), "adamw");
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double g = grad[i];
      const double m = b1 * static_cast<double>(m_[p][i]) + (1.0 - b1) * g;
      const double v = b2 * static_cast<double>(v_[p][i]) + (1.0 - b2) * g * g;
      m_[p][i] = static_cast<T>(m);
      v_[p][i] = static_cast<T>(v);
      const double m_hat = m / correction1;
      const double v_hat = v / correction2;
      const double old = theta[i];
      theta[i] = static_cast<T>(old - lr * m_hat / (std::sqrt(v_hat) + options_.eps) - decay * old);
    }
  }
}

template <typename T>
void AdamW<T>::restore(std::uint64_t step, std::vector<BasicTensor<T>> m,
                       std::vector<BasicTensor<T>> v) {
  if (m.size() != v.size()) throw DimensionError("adamw: moment lists differ in length");
  step_ = step;
  m_ = std::move(m);
  v_ = std::move(v);
}

// ---------------------------------------------------------------------------
// EarlyStopper

bool EarlyStopper::update(double metric) {
  ++epochs_;
  if (metric < best_) {
    best_ = metric;
    best_epoch_ = epochs_;
    since_improvement_ = 0;
    return true;
  }
  ++since_improvement_;
  return false;
}

// ---------------------------------------------------------------------------
// Standardizer

Standardizer::Standardizer(Tensor mean, Tensor std) : mean_(std::move(mean)), std_(std::move(std)) {
  require_same_shape(mean_.shape(), std_.shape(), "standardizer");
  if (mean_.rank() != 2) throw DimensionError("standardizer: statistics must be [n x d]");
}

Standardizer Standardizer::fit(const RawSeries& train) {
  const std::size_t n = train.nodes();
  const std::size_t d = train.features();
  const std::size_t t = train.steps();
  if (t == 0) throw DataError("standardizer: cannot fit on a zero-length series");
  Tensor mean({n, d});
  Tensor std({n, d});
  for (std::size_t row = 0; row < n * d; ++row) {
    const float* x = train.values.data().data() + row * t;
    double sum = 0.0;
    for (std::size_t s = 0; s < t; ++s) sum += x[s];
    const double mu = sum / static_cast<double>(t);
    double sq = 0.0;
    for (std::size_t s = 0; s < t; ++s) sq += (x[s] - mu) * (x[s] - mu);
    mean[row] = static_cast<float>(mu);
    std[row] = static_cast<float>(std::max(std::sqrt(sq / static_cast<double>(t)), kMinStd));
  }
  return Standardizer(std::move(mean), std::move(std));
}

Standardizer Standardizer::identity(std::size_t nodes, std::size_t features) {
  return Standardizer(Tensor({nodes, features}), Tensor({nodes, features}, 1.0f));
}

void Standardizer::check(const RawSeries& raw) const {
  if (raw.nodes() != nodes() || raw.features() != features()) {
    throw DimensionError("standardizer: fitted on " + std::to_string(nodes()) + " nodes x " +
                         std::to_string(features()) + " features, series has " +
                         std::to_string(raw.nodes()) + " x " + std::to_string(raw.features()));
  }
}

RawSeries Standardizer::transform(const RawSeries& raw) const {
  check(raw);
  RawSeries out = raw;
  const std::size_t t = raw.steps();
  for (std::size_t row = 0; row < nodes() * features(); ++row) {
    const double mu = mean_[row];
    const double sd = std_[row];
    float* x = out.values.data().data() + row * t;
    for (std::size_t s = 0; s < t; ++s) x[s] = static_cast<float>((x[s] - mu) / sd);
  }
  return out;
}

RawSeries Standardizer::inverse_transform(const RawSeries& raw) const {
  check(raw);
  RawSeries out = raw;
  const std::size_t t = raw.steps();
  for (std::size_t row = 0; row < nodes() * features(); ++row) {
    const double mu = mean_[row];
    const double sd = std_[row];
    float* x = out.values.data().data() + row * t;
    for (std::size_t s = 0; s < t; ++s) x[s] = static_cast<float>(x[s] * sd + mu);
  }
  return out;
}

void Standardizer::inverse_target(Tensor& forecast) const {
  if (forecast.rank() < 2 || forecast.shape()[forecast.rank() - 2] != nodes()) {
    throw DimensionError("standardizer: forecast " + shape_string(forecast.shape()) +
                         " does not have " + std::to_string(nodes()) + " nodes");
  }
  const std::size_t h = forecast.cols();
  const std::size_t n = nodes();
  const std::size_t d = features();
  for (std::size_t r = 0; r < forecast.rows(); ++r) {
    const std::size_t node = r % n;
    const double mu = mean_[node * d];
    const double sd = std_[node * d];
    float* x = forecast.data().data() + r * h;
    for (std::size_t s = 0; s < h; ++s) x[s] = static_cast<float>(x[s] * sd + mu);
  }
}

// ---------------------------------------------------------------------------
// fit

template <typename T>
std::vector<BasicTensor<T>> snapshot_parameters(Forecaster<T>& model) {
  std::vector<BasicTensor<T>> out;
  for (const auto& p : model.parameters()) out.push_back(*p.value);
  return out;
}

template <typename T>
void restore_parameters(Forecaster<T>& model, const std::vector<BasicTensor<T>>& values) {
  auto params = model.parameters();
  if (params.size() != values.size()) {
    throw DimensionError("restore_parameters: model has " + std::to_string(params.size()) +
                         " parameters, snapshot has " + std::to_string(values.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(params[i].value->shape(), values[i].shape(), "restore_parameters");
    *params[i].value = values[i];
  }
}

namespace {

template <typename T>
BasicTensor<T> to_type(const Tensor& x) {
  if constexpr (std::is_same_v<T, float>) {
    return x;
  } else {
    return x.cast<T>();
  }
}

template <typename T>
Tensor to_float(const BasicTensor<T>& x) {
  if constexpr (std::is_same_v<T, float>) {
    return x;
  } else {
    return x.template cast<float>();
  }
}

// Gradient of the batch-mean loss, accumulated into the master model.
template <typename T>
double batch_gradient(Forecaster<T>& model, std::vector<std::unique_ptr<Forecaster<T>>>& workers,
                      const BasicTensor<T>& x, const BasicTensor<T>& y, LossKind loss) {
  model.zero_grad();
  const std::size_t batch = x.dim(0);
  if (workers.empty() || batch < 2) {
    BasicTensor<T> pred = model.train_forward(x);
    LossResult<T> result = compute_loss(loss, pred, y);
    model.train_backward(result.grad);
    return result.value;
  }

  const std::size_t count = std::min(workers.size(), batch);
  auto master = model.parameters();
  std::vector<double> losses(count, 0.0);
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> threads;
  const std::size_t x_row = x.size() / batch;
  const std::size_t y_row = y.size() / batch;
  for (std::size_t w = 0; w < count; ++w) {
    const std::size_t begin = batch * w / count;
    const std::size_t end = batch * (w + 1) / count;
    threads.emplace_back([&, w, begin, end] {
      try {
        Forecaster<T>& worker = *workers[w];
        auto params = worker.parameters();
        for (std::size_t p = 0; p < params.size(); ++p) *params[p].value = *master[p].value;
        worker.zero_grad();
        Shape xs = x.shape();
        Shape ys = y.shape();
        xs[0] = ys[0] = end - begin;
        BasicTensor<T> xb(xs, std::vector<T>(x.data().begin() + begin * x_row,
                                             x.data().begin() + end * x_row));
        BasicTensor<T> yb(ys, std::vector<T>(y.data().begin() + begin * y_row,
                                             y.data().begin() + end * y_row));
        BasicTensor<T> pred = worker.train_forward(xb);
        LossResult<T> result = compute_loss(loss, pred, yb);
        const T share = static_cast<T>(static_cast<double>(end - begin) / static_cast<double>(batch));
        worker.train_backward(share * result.grad);
        losses[w] = result.value * static_cast<double>(share);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (std::size_t w = 0; w < count; ++w) {
    auto params = workers[w]->parameters();
    for (std::size_t p = 0; p < params.size(); ++p) add_inplace(*master[p].grad, *params[p].grad);
  }
  return std::accumulate(losses.begin(), losses.end(), 0.0);
}

}  // namespace

template <typename T>
FitResult<T> fit(Forecaster<T>& model, const WindowedDataset& train, const WindowedDataset& val,
                 const FitOptions& options, const Standardizer* scaler) {
  if (train.empty()) throw TrainingError("fit: training set is empty");
  if (val.empty()) throw TrainingError("fit: validation set is empty");
  if (options.batch_size == 0) throw TrainingError("fit: batch_size must be >= 1");

  FitResult<T> result;
  result.optimizer = AdamW<T>(options.optimizer);
  if (options.max_epochs == 0) return result;

  std::vector<std::unique_ptr<Forecaster<T>>> workers;
  if (options.threads > 1) {
    for (std::size_t w = 0; w < options.threads; ++w) workers.push_back(model.clone());
  }

  SeededRng shuffle_rng(seeds::shuffle(options.seed));
  EarlyStopper stopper(options.patience);
  std::vector<BasicTensor<T>> best = snapshot_parameters(model);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= options.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += options.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), begin + options.batch_size);
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      const BasicTensor<T> x = to_type<T>(train.past_batch(idx));
      const BasicTensor<T> y = to_type<T>(train.future_batch(idx));
      const double loss = batch_gradient(model, workers, x, y, options.loss);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "fit: non-finite training loss at epoch " << epoch << ", batch " << batch_index;
        throw TrainingError(msg.str());
      }
      result.optimizer.step(model.parameters());
      loss_sum += loss * static_cast<double>(end - begin);
    }

    const MetricReport report = evaluate_forecaster(model, val, scaler, options.mask_zero);
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(order.size());
    record.val_mae = report.average.mae;
    record.lr = options.optimizer.lr;
    if (options.record_timing) {
      record.seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    if (!std::isfinite(record.val_mae)) {
      throw TrainingError("fit: non-finite validation MAE at epoch " + std::to_string(epoch));
    }
    result.history.push_back(record);
    if (options.on_epoch) options.on_epoch(record);
    if (stopper.update(record.val_mae)) best = snapshot_parameters(model);
    if (stopper.should_stop()) {
      result.stopped_early = true;
      break;
    }
  }
  restore_parameters(model, best);
  result.best_epoch = stopper.best_epoch();
  result.best_val_mae = stopper.best_metric();
  return result;
}

template <typename T>
std::pair<Tensor, Tensor> predict_dataset(const Forecaster<T>& model, const WindowedDataset& data,
                                          const Standardizer* scaler, std::size_t batch_size) {
  const std::size_t n = data.nodes();
  const std::size_t h = data.t_future();
  Tensor pred({data.size(), n, h});
  Tensor target({data.size(), n, h});
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < data.size(); begin += batch_size) {
    const std::size_t end = std::min(data.size(), begin + batch_size);
    idx.resize(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    const Tensor out = to_float(model.predict(to_type<T>(data.past_batch(idx))));
    const Tensor y = data.future_batch(idx);
    if (out.size() != y.size()) {
      throw DimensionError("predict_dataset: model output " + shape_string(out.shape()) +
                           " vs target " + shape_string(y.shape()));
    }
    std::copy(out.data().begin(), out.data().end(), pred.data().begin() + begin * n * h);
    std::copy(y.data().begin(), y.data().end(), target.data().begin() + begin * n * h);
  }
  if (scaler) {
    scaler->inverse_target(pred);
    scaler->inverse_target(target);
  }
  return {std::move(pred), std::move(target)};
}

template <typename T>
MetricReport evaluate_forecaster(const Forecaster<T>& model, const WindowedDataset& data,
                                 const Standardizer* scaler, bool mask_zero,
                                 std::size_t batch_size) {
  auto [pred, target] = predict_dataset(model, data, scaler, batch_size);
  return metric_report(pred, target, mask_zero);
}

#define RPMIXER_INSTANTIATE(T)                                                                  \
  template LossResult<T> mae_loss(const BasicTensor<T>&, const BasicTensor<T>&);               \
  template LossResult<T> mse_loss(const BasicTensor<T>&, const BasicTensor<T>&);               \
  template LossResult<T> compute_loss(LossKind, const BasicTensor<T>&, const BasicTensor<T>&); \
  template class AdamW<T>;                                                                      \
  template FitResult<T> fit(Forecaster<T>&, const WindowedDataset&, const WindowedDataset&,     \
                            const FitOptions&, const Standardizer*);                            \
  template std::pair<Tensor, Tensor> predict_dataset(const Forecaster<T>&,                      \
                                                     const WindowedDataset&,                    \
                                                     const Standardizer*, std::size_t);         \
  template MetricReport evaluate_forecaster(const Forecaster<T>&, const WindowedDataset&,       \
                                            const Standardizer*, bool, std::size_t);            \
  template std::vector<BasicTensor<T>> snapshot_parameters(Forecaster<T>&);                     \
  template void restore_parameters(Forecaster<T>&, const std::vector<BasicTensor<T>>&);

RPMIXER_INSTANTIATE(float)
RPMIXER_INSTANTIATE(double)

#undef RPMIXER_INSTANTIATE

}  // namespace rpmixer
