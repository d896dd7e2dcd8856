#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "rpmixer/tensor.hpp"

namespace rpmixer {

/// A metric has no defined value (every entry masked, or nothing to average).
class MetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct Metrics {
  double mae = 0.0;
  double rmse = 0.0;
  double mape_pct = 0.0;
  std::size_t count = 0;       // entries in MAE/RMSE
  std::size_t mape_count = 0;  // entries in MAPE after masking
};

/// MAE, RMSE and MAPE (percent) over matching spans. With `mask_zero`, MAPE
/// skips entries whose target is exactly zero.
Metrics compute_metrics(std::span<const float> pred, std::span<const float> target,
                        bool mask_zero);

/// Per-step metrics over a [.. x t_future] forecast plus their average.
struct MetricReport {
  std::vector<Metrics> per_step;  // index h-1 holds horizon h
  Metrics average;                // mean of the per-step values
  std::size_t samples = 0;        // leading-axis size (windows)
  bool mask_zero = true;

  std::size_t steps() const noexcept { return per_step.size(); }
  /// 1-indexed horizon.
  const Metrics& at_horizon(std::size_t horizon) const;
  /// Reporting horizons {3, 6, 12} that exist for this forecast length.
  std::vector<std::size_t> reporting_horizons() const;
};

/// pred and target share a shape whose last axis is the horizon.
MetricReport metric_report(const Tensor& pred, const Tensor& target, bool mask_zero = true);

}  // namespace rpmixer
