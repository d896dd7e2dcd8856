#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "rpmixer/tensor.hpp"

namespace rpmixer {

/// Malformed or unusable input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raw multivariate series: values[node, feature, time].
struct RawSeries {
  Tensor values;  // [n x d x t]
  std::uint32_t interval_minutes = 5;
  std::int64_t start_timestamp = 0;
  /// Carried through I/O untouched; the model never reads it.
  std::optional<Tensor> adjacency;

  std::size_t nodes() const { return values.rank() == 3 ? values.dim(0) : 0; }
  std::size_t features() const { return values.rank() == 3 ? values.dim(1) : 0; }
  std::size_t steps() const { return values.rank() == 3 ? values.dim(2) : 0; }

  /// Contiguous time slice [begin, end).
  RawSeries slice(std::size_t begin, std::size_t end) const;
};

/// Builds a d=1 series from an [n x t] matrix.
RawSeries make_series(const Tensor& node_by_time, std::uint32_t interval_minutes = 5,
                      std::int64_t start_timestamp = 0);

/// Non-overlapping window means; a trailing partial window is dropped.
RawSeries aggregate(const RawSeries& raw, std::uint32_t target_minutes);

struct SplitSeries {
  RawSeries train;
  RawSeries val;
  RawSeries test;
};

/// Contiguous chronological split. Boundaries are floor(cumulative_ratio * t).
SplitSeries chronological_split(const RawSeries& raw,
                                std::array<std::uint32_t, 3> ratios = {6, 2, 2});

/// Sliding (X_past, X_future) pairs over one split.
///
/// X_past is [n x d*t_past] with features flattened feature-major
/// (column f*t_past + s holds feature f at step s). X_future is [n x t_future]
/// taken from feature 0. Sample i starts at offset i*stride.
class WindowedDataset {
 public:
  WindowedDataset() = default;
  WindowedDataset(RawSeries series, std::size_t t_past, std::size_t t_future,
                  std::size_t stride = 1);

  std::size_t size() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }
  std::size_t nodes() const { return series_.nodes(); }
  std::size_t features() const { return series_.features(); }
  std::size_t t_past() const noexcept { return t_past_; }
  std::size_t t_future() const noexcept { return t_future_; }
  std::size_t stride() const noexcept { return stride_; }
  std::size_t input_length() const { return features() * t_past_; }
  const RawSeries& series() const noexcept { return series_; }

  /// Time offset of sample i within the split.
  std::size_t start(std::size_t i) const { return i * stride_; }

  Tensor past(std::size_t i) const;
  Tensor future(std::size_t i) const;
  /// [B x n x d*t_past] for the given sample indices.
  Tensor past_batch(std::span<const std::size_t> indices) const;
  /// [B x n x t_future].
  Tensor future_batch(std::span<const std::size_t> indices) const;

 private:
  void fill_past(std::size_t i, float* dst) const;
  void fill_future(std::size_t i, float* dst) const;

  RawSeries series_;
  std::size_t t_past_ = 0;
  std::size_t t_future_ = 0;
  std::size_t stride_ = 1;
  std::size_t count_ = 0;
};

WindowedDataset make_windows(const RawSeries& split, std::size_t t_past, std::size_t t_future,
                             std::size_t stride = 1);

/// Desk-scale periodic spatial-temporal generator.
///
/// Each node is a daily sinusoid (node-specific amplitude and phase) scaled by
/// a weekly modulation, plus loadings on shared AR(1) latent factors observed
/// with a node-specific lag, plus Gaussian noise. Each node is finally shifted
/// so its minimum equals a node-specific positive base level.
struct SyntheticSpec {
  std::size_t nodes = 32;
  std::size_t steps = 2688;  // four weeks at 96 steps per day
  std::size_t steps_per_day = 96;
  double daily_amplitude_min = 0.5;
  double daily_amplitude_max = 1.5;
  double weekly_amplitude_min = 0.1;
  double weekly_amplitude_max = 0.4;
  std::size_t latent_factors = 1;
  double factor_scale = 0.5;
  double factor_persistence = 0.95;
  std::size_t max_lag = 12;
  double noise_std = 0.1;
  double base_min = 1.0;
  double base_max = 3.0;
  std::uint32_t interval_minutes = 15;
  std::uint64_t seed = 0;

  void validate() const;
};

RawSeries synthetic_generate(const SyntheticSpec& spec);

struct CsvOptions {
  std::uint32_t interval_minutes = 5;
  std::int64_t start_timestamp = 0;
  /// Fill empty cells from the previous row instead of rejecting them.
  bool forward_fill = false;
};

/// CSV with a header row of node ids; one row per time step, one column per node.
RawSeries load_csv(const std::filesystem::path& path, const CsvOptions& options = {});
RawSeries parse_csv(const std::string& text, const CsvOptions& options = {});

/// Binary layout (little-endian): "RPMX" | u16 version | u32 n | u32 d | u32 t |
/// u32 interval_minutes | i64 start_timestamp | f32 values in (node, feature, time) order.
void save_binary(const RawSeries& raw, const std::filesystem::path& path);
RawSeries load_binary(const std::filesystem::path& path);

/// Dispatches on extension: ".csv" goes to load_csv, everything else to load_binary.
RawSeries load_dataset(const std::filesystem::path& path, const CsvOptions& csv_options = {});

}  // namespace rpmixer
