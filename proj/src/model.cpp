#include "rpmixer/model.hpp"

#include <atomic>
#include <cmath>

#include "rpmixer/fft.hpp"

namespace rpmixer {

std::size_t projection_width(std::size_t nodes, double m_neuron) {
  const double raw = m_neuron * std::sqrt(static_cast<double>(nodes));
  const double rounded = std::floor(raw + 0.5);
  return rounded < 1.0 ? 1 : static_cast<std::size_t>(rounded);
}

void ModelConfig::validate() const {
  if (nodes == 0 || features == 0 || t_past == 0 || t_future == 0) {
    throw DimensionError("model config: nodes, features, t_past and t_future must be >= 1");
  }
  if (n_block == 0) throw DimensionError("model config: n_block must be >= 1");
  if (!(m_neuron > 0.0) || !std::isfinite(m_neuron)) {
    throw DimensionError("model config: m_neuron must be a positive finite number");
  }
}

// ---------------------------------------------------------------------------
// MixerBlock

template <typename T>
MixerBlock<T>::MixerBlock(Temporal temporal, Projection projection, LinearLayer<T> spatial_out,
                          bool pre_activation)
    : temporal_(std::move(temporal)),
      projection_(std::move(projection)),
      spatial_out_(std::move(spatial_out)),
      pre_activation_(pre_activation) {
  const std::size_t proj_out =
      std::visit([](const auto& layer) { return layer.out_features(); }, projection_);
  if (proj_out != spatial_out_.in_features()) {
    throw DimensionError("mixer block: projection width " + std::to_string(proj_out) +
                         " does not match output layer input " +
                         std::to_string(spatial_out_.in_features()));
  }
}

template <typename T>
BasicTensor<T> MixerBlock<T>::temporal_forward(const BasicTensor<T>& x) const {
  return std::visit([&](const auto& layer) { return layer.forward(x); }, temporal_);
}

template <typename T>
BasicTensor<T> MixerBlock<T>::temporal_backward(const BasicTensor<T>& x, const BasicTensor<T>& g) {
  return std::visit([&](auto& layer) { return layer.backward(x, g); }, temporal_);
}

template <typename T>
BasicTensor<T> MixerBlock<T>::projection_forward(const BasicTensor<T>& x) const {
  return std::visit([&](const auto& layer) { return layer.forward(x); }, projection_);
}

template <typename T>
BasicTensor<T> MixerBlock<T>::projection_backward(const BasicTensor<T>& x,
                                                  const BasicTensor<T>& g) {
  if (auto* rp = std::get_if<RandomProjectionLayer<T>>(&projection_)) return rp->backward(g);
  return std::get<LinearLayer<T>>(projection_).backward(x, g);
}

template <typename T>
BasicTensor<T> MixerBlock<T>::forward(const BasicTensor<T>& x, Cache* cache) const {
  if (x.rank() != 3) {
    throw DimensionError("mixer block: expected [B x n x t], got " + shape_string(x.shape()));
  }
  if (pre_activation_) {
    BasicTensor<T> temporal_in = relu(x);
    BasicTensor<T> mixed = temporal_forward(temporal_in) + x;
    BasicTensor<T> projection_in = relu(transpose(mixed));
    BasicTensor<T> projected = projection_forward(projection_in);
    BasicTensor<T> hidden = relu(projected);
    BasicTensor<T> y = transpose(spatial_out_.forward(hidden)) + mixed;
    if (cache) {
      cache->input = x;
      cache->temporal_in = std::move(temporal_in);
      cache->projection_in = std::move(projection_in);
      cache->projected = std::move(projected);
      cache->hidden = std::move(hidden);
    }
    return y;
  }

  BasicTensor<T> mixed_pre = temporal_forward(x) + x;
  BasicTensor<T> projection_in = transpose(relu(mixed_pre));
  BasicTensor<T> projected = projection_forward(projection_in);
  BasicTensor<T> hidden = relu(projected);
  BasicTensor<T> output_pre = transpose(spatial_out_.forward(hidden)) + relu(mixed_pre);
  BasicTensor<T> y = relu(output_pre);
  if (cache) {
    cache->input = x;
    cache->mixed_pre = std::move(mixed_pre);
    cache->projection_in = std::move(projection_in);
    cache->projected = std::move(projected);
    cache->hidden = std::move(hidden);
    cache->output_pre = std::move(output_pre);
  }
  return y;
}

template <typename T>
BasicTensor<T> MixerBlock<T>::backward(const Cache& cache, const BasicTensor<T>& grad_output) {
  require_same_shape(cache.input.shape(), grad_output.shape(), "mixer block backward");
  if (pre_activation_) {
    // Y = S + M, M = T + X.
    BasicTensor<T> grad_mixed = grad_output;
    BasicTensor<T> grad_hidden = spatial_out_.backward(cache.hidden, transpose(grad_output));
    BasicTensor<T> grad_projected = relu_backward(cache.projected, grad_hidden);
    BasicTensor<T> grad_proj_in = projection_backward(cache.projection_in, grad_projected);
    // ReLU(M^T) passes where M^T > 0, i.e. where projection_in > 0.
    add_inplace(grad_mixed, transpose(relu_backward(cache.projection_in, grad_proj_in)));
    BasicTensor<T> grad_temporal_in = temporal_backward(cache.temporal_in, grad_mixed);
    BasicTensor<T> grad_input = grad_mixed;
    add_inplace(grad_input, relu_backward(cache.input, grad_temporal_in));
    return grad_input;
  }

  BasicTensor<T> grad_out_pre = relu_backward(cache.output_pre, grad_output);
  BasicTensor<T> grad_hidden = spatial_out_.backward(cache.hidden, transpose(grad_out_pre));
  BasicTensor<T> grad_projected = relu_backward(cache.projected, grad_hidden);
  BasicTensor<T> grad_mixed = grad_out_pre;
  add_inplace(grad_mixed,
              transpose(projection_backward(cache.projection_in, grad_projected)));
  BasicTensor<T> grad_mixed_pre = relu_backward(cache.mixed_pre, grad_mixed);
  BasicTensor<T> grad_input = grad_mixed_pre;
  add_inplace(grad_input, temporal_backward(cache.input, grad_mixed_pre));
  return grad_input;
}

template <typename T>
BasicTensor<T> MixerBlock<T>::temporal_path(const BasicTensor<T>& x) const {
  return temporal_forward(relu(x));
}

template <typename T>
BasicTensor<T> MixerBlock<T>::spatial_path(const BasicTensor<T>& m) const {
  BasicTensor<T> hidden = relu(projection_forward(relu(transpose(m))));
  return transpose(spatial_out_.forward(hidden));
}

template <typename T>
BasicTensor<T> MixerBlock<T>::residual_branch(const BasicTensor<T>& x) const {
  if (!pre_activation_) {
    throw UsageError("mixer block: the residual branch G(X) only exists with pre-activation");
  }
  BasicTensor<T> temporal = temporal_path(x);
  return spatial_path(temporal + x) + temporal;
}

template <typename T>
void MixerBlock<T>::zero_grad() {
  std::visit([](auto& layer) { layer.zero_grad(); }, temporal_);
  if (auto* lin = std::get_if<LinearLayer<T>>(&projection_)) lin->zero_grad();
  spatial_out_.zero_grad();
}

template <typename T>
void MixerBlock<T>::collect_parameters(std::vector<ParamRef<T>>& out, const std::string& prefix) {
  std::visit([&](auto& layer) { layer.collect_parameters(out, prefix + ".temporal"); }, temporal_);
  if (auto* lin = std::get_if<LinearLayer<T>>(&projection_))
    lin->collect_parameters(out, prefix + ".projection");
  spatial_out_.collect_parameters(out, prefix + ".spatial_out");
}

template <typename T>
void MixerBlock<T>::collect_state(std::vector<StateRef<T>>& out, const std::string& prefix) {
  std::visit([&](auto& layer) { layer.collect_state(out, prefix + ".temporal"); }, temporal_);
  std::visit([&](auto& layer) { layer.collect_state(out, prefix + ".projection"); }, projection_);
  spatial_out_.collect_state(out, prefix + ".spatial_out");
}

template <typename T>
std::size_t MixerBlock<T>::trainable_parameter_count() const {
  std::size_t count =
      std::visit([](const auto& layer) { return layer.parameter_count(); }, temporal_);
  if (const auto* lin = std::get_if<LinearLayer<T>>(&projection_)) count += lin->parameter_count();
  return count + spatial_out_.parameter_count();
}

template <typename T>
std::size_t MixerBlock<T>::frozen_parameter_count() const {
  if (const auto* rp = std::get_if<RandomProjectionLayer<T>>(&projection_))
    return rp->frozen_count();
  return 0;
}

// ---------------------------------------------------------------------------
// RPMixerModel

template <typename T>
std::uint64_t RPMixerModel<T>::next_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

template <typename T>
RPMixerModel<T>::RPMixerModel(ModelConfig config) : config_(config), id_(next_id()) {
  config_.validate();
  const std::size_t length = config_.input_length();
  const std::size_t nodes = config_.nodes;
  const std::size_t n_rand = config_.n_rand();
  SeededRng rng(seeds::init(config_.seed));
  blocks_.reserve(config_.n_block);
  for (std::size_t i = 0; i < config_.n_block; ++i) {
    typename MixerBlock<T>::Temporal temporal =
        config_.frequency_domain
            ? typename MixerBlock<T>::Temporal(
                  ComplexLinearLayer<T>::init(rng, bin_count(length), config_.complex_bias))
            : typename MixerBlock<T>::Temporal(LinearLayer<T>::init(rng, length, length));
    typename MixerBlock<T>::Projection projection =
        config_.random_projection
            ? typename MixerBlock<T>::Projection(
                  RandomProjectionLayer<T>(nodes, n_rand, seeds::projection(config_.seed, i)))
            : typename MixerBlock<T>::Projection(LinearLayer<T>::init(rng, nodes, n_rand));
    LinearLayer<T> spatial_out = LinearLayer<T>::init(rng, n_rand, nodes);
    blocks_.emplace_back(std::move(temporal), std::move(projection), std::move(spatial_out),
                         config_.pre_activation);
  }
  output_ = LinearLayer<T>::init(rng, length, config_.t_future);
}

template <typename T>
RPMixerModel<T>::RPMixerModel(const RPMixerModel& other)
    : config_(other.config_),
      blocks_(other.blocks_),
      output_(other.output_),
      id_(next_id()),
      version_(0) {}

template <typename T>
RPMixerModel<T>& RPMixerModel<T>::operator=(const RPMixerModel& other) {
  if (this != &other) {
    config_ = other.config_;
    blocks_ = other.blocks_;
    output_ = other.output_;
    ++version_;
    train_cache_ = {};
  }
  return *this;
}

template <typename T>
BasicTensor<T> RPMixerModel<T>::as_batch(const BasicTensor<T>& x) const {
  const std::size_t length = config_.input_length();
  if (x.rank() == 2 && x.dim(0) == config_.nodes && x.dim(1) == length) {
    return x.reshaped({1, config_.nodes, length});
  }
  if (x.rank() == 3 && x.dim(1) == config_.nodes && x.dim(2) == length) return x;
  throw DimensionError("model: expected input [n x d*t_past] = [" + std::to_string(config_.nodes) +
                       "x" + std::to_string(length) + "] with optional batch axis, got " +
                       shape_string(x.shape()));
}

template <typename T>
BasicTensor<T> RPMixerModel<T>::forward(const BasicTensor<T>& x, ForwardCache* cache) const {
  BasicTensor<T> h = as_batch(x);
  if (cache) {
    cache->model_id = id_;
    cache->version = version_;
    cache->batched = x.rank() == 3;
    cache->input_shape = h.shape();
    cache->blocks.assign(blocks_.size(), {});
  }
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    h = blocks_[i].forward(h, cache ? &cache->blocks[i] : nullptr);
  BasicTensor<T> y = output_.forward(h);
  if (cache) cache->last_hidden = std::move(h);
  if (x.rank() == 2) return y.reshaped({config_.nodes, config_.t_future});
  return y;
}

template <typename T>
BasicTensor<T> RPMixerModel<T>::backward(const ForwardCache& cache,
                                         const BasicTensor<T>& grad_output) {
  if (cache.model_id != id_) throw UsageError("model backward: cache belongs to another model");
  if (cache.version != version_) {
    throw UsageError("model backward: cache is stale (parameters changed since forward)");
  }
  if (cache.blocks.size() != blocks_.size() || cache.input_shape.size() != 3) {
    throw UsageError("model backward: cache does not come from a forward pass of this model");
  }
  const Shape out_shape{cache.input_shape[0], config_.nodes, config_.t_future};
  if (shape_size(grad_output.shape()) != shape_size(out_shape) ||
      (grad_output.rank() == 3 && grad_output.shape() != out_shape) ||
      (grad_output.rank() == 2 && cache.batched)) {
    throw DimensionError("model backward: gradient " + shape_string(grad_output.shape()) +
                         " does not match output " + shape_string(out_shape));
  }
  BasicTensor<T> g = output_.backward(cache.last_hidden, grad_output.reshaped(out_shape));
  for (std::size_t i = blocks_.size(); i-- > 0;) g = blocks_[i].backward(cache.blocks[i], g);
  if (!cache.batched) return g.reshaped({config_.nodes, config_.input_length()});
  return g;
}

template <typename T>
PathDecomposition<T> RPMixerModel<T>::path_decompose(const BasicTensor<T>& x) const {
  if (!config_.pre_activation) {
    throw UsageError(
        "path_decompose: post-activation blocks have no identity path, so the output does not "
        "split into per-block terms");
  }
  const BasicTensor<T> batch = as_batch(x);
  PathDecomposition<T> out;
  LinearLayer<T> weight_only(output_.weight(), BasicTensor<T>(output_.bias().shape()));
  out.y0 = output_.forward(batch);
  BasicTensor<T> stream = batch;
  for (const auto& block : blocks_) {
    BasicTensor<T> h = block.residual_branch(stream);
    out.contributions.push_back(weight_only.forward(h));
    add_inplace(stream, h);
    out.hidden.push_back(std::move(h));
  }
  out.y = forward(batch);
  if (x.rank() == 2) {
    const Shape shape{config_.nodes, config_.t_future};
    out.y0 = out.y0.reshaped(shape);
    out.y = out.y.reshaped(shape);
    for (auto& c : out.contributions) c = c.reshaped(shape);
    for (auto& h : out.hidden) h = h.reshaped({config_.nodes, config_.input_length()});
  }
  return out;
}

template <typename T>
BasicTensor<T> RPMixerModel<T>::train_forward(const BasicTensor<T>& x) {
  return forward(x, &train_cache_);
}

template <typename T>
void RPMixerModel<T>::train_backward(const BasicTensor<T>& grad_output) {
  backward(train_cache_, grad_output);
}

template <typename T>
std::vector<ParamRef<T>> RPMixerModel<T>::parameters() {
  ++version_;
  std::vector<ParamRef<T>> out;
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    blocks_[i].collect_parameters(out, "block" + std::to_string(i));
  output_.collect_parameters(out, "output");
  return out;
}

template <typename T>
std::vector<StateRef<T>> RPMixerModel<T>::state() {
  ++version_;
  std::vector<StateRef<T>> out;
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    blocks_[i].collect_state(out, "block" + std::to_string(i));
  output_.collect_state(out, "output");
  return out;
}

template <typename T>
void RPMixerModel<T>::zero_grad() {
  for (auto& block : blocks_) block.zero_grad();
  output_.zero_grad();
}

template <typename T>
std::unique_ptr<Forecaster<T>> RPMixerModel<T>::clone() const {
  return std::make_unique<RPMixerModel<T>>(*this);
}

template <typename T>
std::size_t RPMixerModel<T>::trainable_parameter_count() const {
  std::size_t count = output_.parameter_count();
  for (const auto& block : blocks_) count += block.trainable_parameter_count();
  return count;
}

template <typename T>
std::size_t RPMixerModel<T>::frozen_parameter_count() const {
  std::size_t count = 0;
  for (const auto& block : blocks_) count += block.frozen_parameter_count();
  return count;
}

template <typename T>
RPMixerModel<T> build_model(const ModelConfig& config) {
  return RPMixerModel<T>(config);
}

template <typename T>
RPMixerModel<T> build_ablation(ModelConfig config, const AblationFlags& flags) {
  config.pre_activation = flags.pre_activation;
  config.random_projection = flags.random_projection;
  config.frequency_domain = flags.frequency_domain;
  return RPMixerModel<T>(config);
}

template class MixerBlock<float>;
template class MixerBlock<double>;
template class RPMixerModel<float>;
template class RPMixerModel<double>;
template RPMixerModel<float> build_model(const ModelConfig&);
template RPMixerModel<double> build_model(const ModelConfig&);
template RPMixerModel<float> build_ablation(ModelConfig, const AblationFlags&);
template RPMixerModel<double> build_ablation(ModelConfig, const AblationFlags&);

}  // namespace rpmixer
