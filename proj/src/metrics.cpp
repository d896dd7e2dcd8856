#include "rpmixer/metrics.hpp"

#include <cmath>
#include <string>

namespace rpmixer {

Metrics compute_metrics(std::span<const float> pred, std::span<const float> target,
                        bool mask_zero) {
  if (pred.size() != target.size()) {
    throw DimensionError("metrics: " + std::to_string(pred.size()) + " predictions vs " +
                         std::to_string(target.size()) + " targets");
  }
  if (pred.empty()) throw MetricError("metrics: nothing to evaluate");
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  double pct_sum = 0.0;
  std::size_t pct_count = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double y = target[i];
    const double e = static_cast<double>(pred[i]) - y;
    abs_sum += std::abs(e);
    sq_sum += e * e;
    if (mask_zero && y == 0.0) continue;
    pct_sum += std::abs(e) / std::abs(y);
    ++pct_count;
  }
  if (pct_count == 0) throw MetricError("metrics: every target is zero, MAPE is undefined");
  Metrics m;
  m.count = pred.size();
  m.mape_count = pct_count;
  m.mae = abs_sum / static_cast<double>(m.count);
  m.rmse = std::sqrt(sq_sum / static_cast<double>(m.count));
  m.mape_pct = 100.0 * pct_sum / static_cast<double>(pct_count);
  return m;
}

const Metrics& MetricReport::at_horizon(std::size_t horizon) const {
  if (horizon == 0 || horizon > per_step.size()) {
    throw MetricError("metric report: horizon " + std::to_string(horizon) + " not in 1.." +
                      std::to_string(per_step.size()));
  }
  return per_step[horizon - 1];
}

std::vector<std::size_t> MetricReport::reporting_horizons() const {
  std::vector<std::size_t> out;
  for (std::size_t h : {3u, 6u, 12u})
    if (h <= per_step.size()) out.push_back(h);
  return out;
}

MetricReport metric_report(const Tensor& pred, const Tensor& target, bool mask_zero) {
  require_same_shape(pred.shape(), target.shape(), "metric_report");
  if (pred.rank() == 0 || pred.empty()) throw MetricError("metric_report: empty forecast");
  const std::size_t steps = pred.cols();
  const std::size_t rows = pred.rows();
  MetricReport report;
  report.mask_zero = mask_zero;
  report.samples = pred.rank() >= 3 ? pred.dim(0) : 1;
  std::vector<float> p(rows);
  std::vector<float> y(rows);
  for (std::size_t h = 0; h < steps; ++h) {
    for (std::size_t r = 0; r < rows; ++r) {
      p[r] = pred[r * steps + h];
      y[r] = target[r * steps + h];
    }
    report.per_step.push_back(compute_metrics(p, y, mask_zero));
  }
  for (const Metrics& m : report.per_step) {
    report.average.mae += m.mae;
    report.average.rmse += m.rmse;
    report.average.mape_pct += m.mape_pct;
    report.average.count += m.count;
    report.average.mape_count += m.mape_count;
  }
  const double inv = 1.0 / static_cast<double>(steps);
  report.average.mae *= inv;
  report.average.rmse *= inv;
  report.average.mape_pct *= inv;
  return report;
}

}  // namespace rpmixer
