#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rpmixer/data.hpp"
#include "rpmixer/metrics.hpp"
#include "rpmixer/model.hpp"
#include "rpmixer/training.hpp"

namespace rpmixer {

/// Pearson correlation; empty when either input has zero variance.
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

/// One pair of base learners (1-based block indices, i < j).
struct CorrelationErrorPoint {
  std::size_t i = 0;
  std::size_t j = 0;
  std::optional<double> pearson;
  double mae_pair = 0.0;
  double rmse_pair = 0.0;
  double mape_pair = 0.0;
};

/// Base learner i predicts P_i = Y0 + W_D H_i. Correlations use the
/// contributions W_D H_i in model (standardized) space; errors use P_i after
/// de-standardization against the raw targets.
struct CorrelationErrorDiagram {
  std::vector<Metrics> learners;  // average metrics of each P_i
  std::vector<CorrelationErrorPoint> points;

  /// max - min of the per-learner MAE.
  double mae_range() const;
  std::size_t undefined_count() const;
};

template <typename T>
CorrelationErrorDiagram correlation_error_diagram(const RPMixerModel<T>& model,
                                                  const WindowedDataset& data,
                                                  const Standardizer* scaler, bool mask_zero,
                                                  std::size_t batch_size = 64);

/// Largest |model_forward - (Y0 + sum contributions)| relative to
/// max |model_forward| over every sample of `data`.
template <typename T>
double decomposition_residual(const RPMixerModel<T>& model, const WindowedDataset& data,
                              std::size_t batch_size = 64);

struct JLReport {
  std::size_t n = 0;
  std::size_t n_rand = 0;
  std::size_t num_vectors = 0;
  std::vector<double> distortions;  // one per pair with non-zero original distance
  std::size_t zero_pairs = 0;       // pairs at original distance 0
  bool zero_pairs_preserved = true; // every such pair still at distance 0
  bool oversized = false;           // n_rand > n
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
  double iqr() const noexcept { return q3 - q1; }
};

/// Linear-interpolated quantile (0 <= q <= 1) of unsorted values.
double quantile(std::vector<double> values, double q);

/// Projects the rows of `vectors` [k x n] with `projection` [n_rand x n] and
/// reports distortion = |Px - Py| / (sqrt(n_rand) |x - y|) over all pairs.
JLReport jl_report(const TensorD& vectors, const TensorD& projection);

/// Draws num_vectors standard-normal vectors in R^n and an unscaled normal
/// projection from one seeded stream (vectors first).
JLReport jl_check(std::size_t n, std::size_t n_rand, std::size_t num_vectors, std::uint64_t seed);

}  // namespace rpmixer
