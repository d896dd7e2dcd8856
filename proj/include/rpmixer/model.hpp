#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <variant>
#include <vector>

#include "rpmixer/layers.hpp"
#include "rpmixer/tensor.hpp"

namespace rpmixer {

/// Raised for calls that are invalid in the current model state: a cache
/// from another model or from before a parameter update, or a decomposition
/// request on a post-activation model.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Derived seeds. Every random stream in a run flows from one user seed.
namespace seeds {
/// Random projection of mixer block `block` (0-based).
constexpr std::uint64_t projection(std::uint64_t seed, std::size_t block) { return seed + block; }
/// Initialization of all trainable weights.
constexpr std::uint64_t init(std::uint64_t seed) { return seed ^ 0x9E3779B97F4A7C15ULL; }
/// Mini-batch shuffling.
constexpr std::uint64_t shuffle(std::uint64_t seed) { return seed ^ 0xD1B54A32D192ED03ULL; }
}  // namespace seeds

/// Width of the random projection: round-half-up of m_neuron * sqrt(n), at least 1.
std::size_t projection_width(std::size_t nodes, double m_neuron);

struct ModelConfig {
  std::size_t nodes = 1;
  std::size_t features = 1;
  std::size_t t_past = 12;
  std::size_t t_future = 12;
  std::size_t n_block = 8;
  double m_neuron = 1.0;
  std::uint64_t seed = 0;

  // Ablation switches; all true is the full model.
  bool pre_activation = true;
  bool random_projection = true;
  bool frequency_domain = true;

  bool complex_bias = true;

  /// Length of the flattened time axis the blocks operate on (features * t_past).
  std::size_t input_length() const noexcept { return features * t_past; }
  std::size_t n_rand() const { return projection_width(nodes, m_neuron); }
  void validate() const;
};

struct AblationFlags {
  bool pre_activation = true;
  bool random_projection = true;
  bool frequency_domain = true;
};

/// Minimal interface the training loop needs from a forecaster.
template <typename T>
class Forecaster {
 public:
  virtual ~Forecaster() = default;

  /// Maps [B x n x input_length] (or [n x input_length]) to [.. x n x t_future].
  virtual BasicTensor<T> predict(const BasicTensor<T>& x) const = 0;
  /// Forward pass that retains what train_backward needs.
  virtual BasicTensor<T> train_forward(const BasicTensor<T>& x) = 0;
  /// Accumulates parameter gradients for the last train_forward call.
  virtual void train_backward(const BasicTensor<T>& grad_output) = 0;

  virtual std::vector<ParamRef<T>> parameters() = 0;
  virtual void zero_grad() = 0;
  virtual std::unique_ptr<Forecaster<T>> clone() const = 0;
  virtual std::size_t trainable_parameter_count() const = 0;
};

/// One mixer block: a temporal sub-block along the time axis and a spatial
/// sub-block along the node axis.
///
/// Pre-activation (default):
///   T = Temporal(ReLU(X)),  M = T + X
///   S = Out(ReLU(Proj(ReLU(M^T))))^T,  Y = S + M
/// so Y = G(X) + X with a pure identity path.
///
/// Post-activation ablation:
///   M = ReLU(Temporal(X) + X)
///   Y = ReLU(Out(ReLU(Proj(M^T)))^T + M)
template <typename T>
class MixerBlock {
 public:
  using Temporal = std::variant<ComplexLinearLayer<T>, LinearLayer<T>>;
  using Projection = std::variant<RandomProjectionLayer<T>, LinearLayer<T>>;

  /// Intermediates kept for backward. Field meaning depends on the activation order.
  struct Cache {
    BasicTensor<T> input;          // X
    BasicTensor<T> temporal_in;    // ReLU(X) (pre) or X (post)
    BasicTensor<T> mixed_pre;      // unused (pre) or Temporal(X) + X (post)
    BasicTensor<T> projection_in;  // ReLU(M^T) (pre) or M^T (post)
    BasicTensor<T> projected;      // Proj(.)
    BasicTensor<T> hidden;         // ReLU(projected)
    BasicTensor<T> output_pre;     // unused (pre) or S + M before the final ReLU (post)
  };

  MixerBlock(Temporal temporal, Projection projection, LinearLayer<T> spatial_out,
             bool pre_activation);

  /// X: [B x n x t] -> [B x n x t].
  BasicTensor<T> forward(const BasicTensor<T>& x, Cache* cache = nullptr) const;
  BasicTensor<T> backward(const Cache& cache, const BasicTensor<T>& grad_output);

  /// Temporal sub-block weighted path F_temp(X).
  BasicTensor<T> temporal_path(const BasicTensor<T>& x) const;
  /// Spatial sub-block weighted path F_sp(M).
  BasicTensor<T> spatial_path(const BasicTensor<T>& m) const;
  /// Residual branch G(X) = F_sp(F_temp(X) + X) + F_temp(X). Pre-activation only.
  BasicTensor<T> residual_branch(const BasicTensor<T>& x) const;

  bool pre_activation() const noexcept { return pre_activation_; }
  const Temporal& temporal() const noexcept { return temporal_; }
  const Projection& projection() const noexcept { return projection_; }
  const LinearLayer<T>& spatial_out() const noexcept { return spatial_out_; }
  Temporal& temporal() noexcept { return temporal_; }
  Projection& projection() noexcept { return projection_; }
  LinearLayer<T>& spatial_out() noexcept { return spatial_out_; }

  void zero_grad();
  void collect_parameters(std::vector<ParamRef<T>>& out, const std::string& prefix);
  void collect_state(std::vector<StateRef<T>>& out, const std::string& prefix);
  std::size_t trainable_parameter_count() const;
  std::size_t frozen_parameter_count() const;

 private:
  BasicTensor<T> temporal_forward(const BasicTensor<T>& x) const;
  BasicTensor<T> temporal_backward(const BasicTensor<T>& x, const BasicTensor<T>& g);
  BasicTensor<T> projection_forward(const BasicTensor<T>& x) const;
  BasicTensor<T> projection_backward(const BasicTensor<T>& x, const BasicTensor<T>& g);

  Temporal temporal_;
  Projection projection_;
  LinearLayer<T> spatial_out_;
  bool pre_activation_;
};

/// Y0 + sum(contributions) == model output, with Y0 = D(X) (bias included
/// once) and contribution_i = H_i W_D^T.
template <typename T>
struct PathDecomposition {
  BasicTensor<T> y0;
  std::vector<BasicTensor<T>> contributions;
  std::vector<BasicTensor<T>> hidden;  // H_i in input space
  BasicTensor<T> y;
};

/// Stack of mixer blocks followed by the output layer D that maps the
/// flattened time axis to t_future for each node.
template <typename T>
class RPMixerModel final : public Forecaster<T> {
 public:
  struct ForwardCache {
    std::uint64_t model_id = 0;
    std::uint64_t version = 0;
    bool batched = false;
    Shape input_shape;
    std::vector<typename MixerBlock<T>::Cache> blocks;
    BasicTensor<T> last_hidden;
  };

  explicit RPMixerModel(ModelConfig config);
  RPMixerModel(const RPMixerModel& other);
  RPMixerModel& operator=(const RPMixerModel& other);
  RPMixerModel(RPMixerModel&&) noexcept = default;
  RPMixerModel& operator=(RPMixerModel&&) noexcept = default;

  const ModelConfig& config() const noexcept { return config_; }

  /// X: [n x d*t_past] or [B x n x d*t_past].
  BasicTensor<T> forward(const BasicTensor<T>& x, ForwardCache* cache = nullptr) const;
  /// Accumulates all parameter gradients and returns dL/dX.
  BasicTensor<T> backward(const ForwardCache& cache, const BasicTensor<T>& grad_output);

  PathDecomposition<T> path_decompose(const BasicTensor<T>& x) const;

  BasicTensor<T> predict(const BasicTensor<T>& x) const override { return forward(x); }
  BasicTensor<T> train_forward(const BasicTensor<T>& x) override;
  void train_backward(const BasicTensor<T>& grad_output) override;

  /// Trainable parameters. Handing out mutable views invalidates earlier
  /// forward caches.
  std::vector<ParamRef<T>> parameters() override;
  /// Every persistent tensor, frozen projections included.
  std::vector<StateRef<T>> state();
  void zero_grad() override;
  std::unique_ptr<Forecaster<T>> clone() const override;

  std::size_t trainable_parameter_count() const override;
  std::size_t frozen_parameter_count() const;

  const std::vector<MixerBlock<T>>& blocks() const noexcept { return blocks_; }
  std::vector<MixerBlock<T>>& blocks() noexcept { return blocks_; }
  const LinearLayer<T>& output_layer() const noexcept { return output_; }
  LinearLayer<T>& output_layer() noexcept { return output_; }

 private:
  BasicTensor<T> as_batch(const BasicTensor<T>& x) const;
  static std::uint64_t next_id();

  ModelConfig config_;
  std::vector<MixerBlock<T>> blocks_;
  LinearLayer<T> output_;
  std::uint64_t id_;
  std::uint64_t version_ = 0;
  ForwardCache train_cache_;
};

template <typename T>
RPMixerModel<T> build_model(const ModelConfig& config);

/// Copy of `config` with the ablation switches replaced by `flags`.
template <typename T>
RPMixerModel<T> build_ablation(ModelConfig config, const AblationFlags& flags);

}  // namespace rpmixer
