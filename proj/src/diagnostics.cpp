#include "rpmixer/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace rpmixer {

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("pearson: lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
  }
  if (a.size() < 2) return std::nullopt;
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double da = a[k] - ma, db = b[k] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double CorrelationErrorDiagram::mae_range() const {
  if (learners.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(learners.begin(), learners.end(),
                                            [](const Metrics& x, const Metrics& y) {
                                              return x.mae < y.mae;
                                            });
  return hi->mae - lo->mae;
}

std::size_t CorrelationErrorDiagram::undefined_count() const {
  return static_cast<std::size_t>(std::count_if(
      points.begin(), points.end(), [](const CorrelationErrorPoint& p) { return !p.pearson; }));
}

template <typename T>
CorrelationErrorDiagram correlation_error_diagram(const RPMixerModel<T>& model,
                                                  const WindowedDataset& data,
                                                  const Standardizer* scaler, bool mask_zero,
                                                  std::size_t batch_size) {
  const std::size_t blocks = model.config().n_block;
  if (blocks < 2) {
    throw UsageError("correlation-error diagram needs at least 2 mixer blocks, model has " +
                     std::to_string(blocks));
  }
  if (data.empty()) throw DataError("correlation-error diagram: dataset is empty");
  if (batch_size == 0) batch_size = 1;
  const std::size_t n = data.nodes(), h = data.t_future(), total = data.size() * n * h;

  std::vector<std::vector<double>> contributions(blocks, std::vector<double>(total));
  std::vector<double> y0(total);
  Tensor target({data.size(), n, h});
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < data.size(); begin += batch_size) {
    const std::size_t end = std::min(data.size(), begin + batch_size);
    idx.resize(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    const auto d = model.path_decompose(data.past_batch(idx).template cast<T>());
    const std::size_t offset = begin * n * h;
    std::copy(d.y0.data().begin(), d.y0.data().end(), y0.begin() + offset);
    for (std::size_t b = 0; b < blocks; ++b)
      std::copy(d.contributions[b].data().begin(), d.contributions[b].data().end(),
                contributions[b].begin() + offset);
    const Tensor y = data.future_batch(idx);
    std::copy(y.data().begin(), y.data().end(), target.data().begin() + offset);
  }
  if (scaler) scaler->inverse_target(target);

  CorrelationErrorDiagram out;
  for (std::size_t b = 0; b < blocks; ++b) {
    Tensor learner({data.size(), n, h});
    for (std::size_t k = 0; k < total; ++k)
      learner[k] = static_cast<float>(y0[k] + contributions[b][k]);
    if (scaler) scaler->inverse_target(learner);
    out.learners.push_back(metric_report(learner, target, mask_zero).average);
  }
  for (std::size_t i = 0; i < blocks; ++i)
    for (std::size_t j = i + 1; j < blocks; ++j) {
      CorrelationErrorPoint p;
      p.i = i + 1;
      p.j = j + 1;
      p.pearson = pearson(contributions[i], contributions[j]);
      p.mae_pair = 0.5 * (out.learners[i].mae + out.learners[j].mae);
      p.rmse_pair = 0.5 * (out.learners[i].rmse + out.learners[j].rmse);
      p.mape_pair = 0.5 * (out.learners[i].mape_pct + out.learners[j].mape_pct);
      out.points.push_back(p);
    }
  return out;
}

template <typename T>
double decomposition_residual(const RPMixerModel<T>& model, const WindowedDataset& data,
                              std::size_t batch_size) {
  if (batch_size == 0) batch_size = 1;
  double worst_diff = 0.0, scale = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < data.size(); begin += batch_size) {
    const std::size_t end = std::min(data.size(), begin + batch_size);
    idx.resize(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    const auto d = model.path_decompose(data.past_batch(idx).template cast<T>());
    for (std::size_t k = 0; k < d.y.size(); ++k) {
      double sum = d.y0[k];
      for (const auto& c : d.contributions) sum += c[k];
      worst_diff = std::max(worst_diff, std::abs(sum - static_cast<double>(d.y[k])));
      scale = std::max(scale, std::abs(static_cast<double>(d.y[k])));
    }
  }
  return scale > 0.0 ? worst_diff / scale : worst_diff;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw MetricError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

JLReport jl_report(const TensorD& vectors, const TensorD& projection) {
  if (vectors.rank() != 2 || projection.rank() != 2 || projection.dim(1) != vectors.dim(1)) {
    throw DimensionError("jl: vectors " + shape_string(vectors.shape()) + " vs projection " +
                         shape_string(projection.shape()));
  }
  const std::size_t k = vectors.dim(0), n = vectors.dim(1), r = projection.dim(0);
  if (k < 2) throw DataError("jl: need at least 2 vectors, got " + std::to_string(k));
  const TensorD projected = matmul(vectors, transpose(projection));  // [k x r]
  JLReport out;
  out.n = n;
  out.n_rand = r;
  out.num_vectors = k;
  out.oversized = r > n;
  const double root = std::sqrt(static_cast<double>(r));
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a + 1; b < k; ++b) {
      double orig = 0.0, proj = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        const double diff = vectors.at(a, c) - vectors.at(b, c);
        orig += diff * diff;
      }
      for (std::size_t c = 0; c < r; ++c) {
        const double diff = projected.at(a, c) - projected.at(b, c);
        proj += diff * diff;
      }
      if (orig == 0.0) {
        ++out.zero_pairs;
        if (proj != 0.0) out.zero_pairs_preserved = false;
        continue;
      }
      out.distortions.push_back(std::sqrt(proj) / (root * std::sqrt(orig)));
    }
  if (!out.distortions.empty()) {
    out.min = quantile(out.distortions, 0.0);
    out.q1 = quantile(out.distortions, 0.25);
    out.median = quantile(out.distortions, 0.5);
    out.q3 = quantile(out.distortions, 0.75);
    out.max = quantile(out.distortions, 1.0);
  }
  return out;
}

JLReport jl_check(std::size_t n, std::size_t n_rand, std::size_t num_vectors, std::uint64_t seed) {
  if (num_vectors < 2) throw DataError("jl: need at least 2 vectors, got " + std::to_string(num_vectors));
  if (n == 0 || n_rand == 0) throw DataError("jl: n and n_rand must be >= 1");
  SeededRng rng(seed);
  const TensorD vectors = randn<double>(rng, {num_vectors, n});
  const TensorD projection = randn<double>(rng, {n_rand, n});
  return jl_report(vectors, projection);
}

#define RPMIXER_INSTANTIATE(T)                                                                  \
  template CorrelationErrorDiagram correlation_error_diagram(                                  \
      const RPMixerModel<T>&, const WindowedDataset&, const Standardizer*, bool, std::size_t); \
  template double decomposition_residual(const RPMixerModel<T>&, const WindowedDataset&,       \
                                         std::size_t);

RPMIXER_INSTANTIATE(float)
RPMIXER_INSTANTIATE(double)
#undef RPMIXER_INSTANTIATE

}  // namespace rpmixer
