#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rpmixer/config.hpp"
#include "rpmixer/model.hpp"
#include "rpmixer/training.hpp"

namespace rpmixer {

struct NamedTensor {
  std::string name;
  Tensor value;
};

struct OptimizerState {
  std::uint64_t step = 0;
  std::vector<NamedTensor> first_moments;
  std::vector<NamedTensor> second_moments;
};

/// On disk (little-endian):
///   "RPCK" | u16 version | u32 config length | config text
///   | u32 block count | blocks | u8 has_optimizer [u64 step | u32 count | m blocks | v blocks]
///   | f64 best validation MAE
/// A block is u16 name length | name | u8 rank | u32 dims[rank] | f32 values.
/// Model blocks use the names from RPMixerModel::state(); the standardizer is
/// stored as "scaler.mean" and "scaler.std".
struct Checkpoint {
  static constexpr std::uint16_t kVersion = 1;

  ExperimentConfig config;  // nodes and features resolved
  std::vector<NamedTensor> tensors;
  std::optional<OptimizerState> optimizer;
  double best_val_mae = std::numeric_limits<double>::quiet_NaN();
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint make_checkpoint(const ExperimentConfig& config, RPMixerModel<float>& model,
                           const Standardizer& scaler, const AdamW<float>* optimizer,
                           double best_val_mae);

struct RestoredRun {
  ExperimentConfig config;
  RPMixerModel<float> model;
  Standardizer scaler;
  double best_val_mae;
};

/// Rebuilds the model and standardizer. Every model tensor must be present
/// with its expected shape.
RestoredRun restore_run(const Checkpoint& checkpoint);

}  // namespace rpmixer
