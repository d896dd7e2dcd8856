#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "rpmixer/data.hpp"
#include "rpmixer/model.hpp"
#include "rpmixer/training.hpp"

namespace rpmixer {

/// Bad user input: a config key, a missing file, incompatible artifacts.
/// The CLI maps it to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A config entry could not be parsed; the message names the key.
class ConfigError : public InputError {
 public:
  ConfigError(const std::string& key, const std::string& problem)
      : InputError("config key '" + key + "': " + problem), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Everything one run needs. Serialized as flat `key = value` lines; '#'
/// starts a comment. Keys are listed in config.cpp and in the README.
struct ExperimentConfig {
  // Data. An empty dataset path means "generate from the synthetic.* keys".
  std::string dataset;
  SyntheticSpec synthetic;
  std::uint32_t aggregate_minutes = 0;  // 0 keeps the native interval
  bool forward_fill = false;
  std::array<std::uint32_t, 3> split_ratios{6, 2, 2};
  std::size_t stride = 1;

  // Model.
  std::size_t t_past = 12;
  std::size_t t_future = 12;
  std::size_t n_block = 8;
  double m_neuron = 1.0;
  bool pre_activation = true;
  bool random_projection = true;
  bool frequency_domain = true;
  bool complex_bias = true;
  // Resolved from the data on first use; non-zero values are checked against it.
  std::size_t nodes = 0;
  std::size_t features = 0;

  // Training.
  std::uint64_t seed = 0;
  LossKind loss = LossKind::mae;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  double weight_decay = 0.01;
  std::size_t max_epochs = 100;
  std::size_t patience = 7;
  std::size_t threads = 1;
  bool standardize = true;
  bool mask_zero = true;
  bool record_timing = false;

  std::string out_dir = "out";

  ModelConfig model_config() const;
  FitOptions fit_options() const;
  AblationFlags flags() const;
  void set_flags(const AblationFlags& flags);
  /// The synthetic spec with its seed taken from `seed`.
  SyntheticSpec synthetic_spec() const;
  void validate() const;
};

/// Applies one `key = value` assignment.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Every key in a fixed order; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

}  // namespace rpmixer
