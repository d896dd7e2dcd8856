#include "rpmixer/baselines.hpp"

#include <cmath>
#include <limits>
#include <string>


namespace rpmixer {

namespace {

void check_past_width(std::size_t width, std::size_t t_past, const char* who) {
  if (t_past == 0 || width < t_past || width % t_past != 0) {
    throw DimensionError(std::string(who) + ": input width " + std::to_string(width) +
                         " is not a multiple of t_past " + std::to_string(t_past));
  }
}

Shape with_last(Shape shape, std::size_t last) {
  shape.back() = last;
  return shape;
}

// Writes the z-normalized copy of `src` into `dst` (double accumulation).
void znormalize(std::span<const float> src, double* dst) {
  const std::size_t m = src.size();
  double mean = 0.0;
  for (float v : src) mean += v;
  mean /= static_cast<double>(m);
  double var = 0.0;
  for (float v : src) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(m));
  for (std::size_t i = 0; i < m; ++i) dst[i] = sd > 0.0 ? (src[i] - mean) / sd : 0.0;
}

}  // namespace

Tensor baseline_hl(const Tensor& x, std::size_t t_past, std::size_t t_future) {
  if (x.rank() < 2) throw DimensionError("baseline_hl: expected [.. x n x d*t_past]");
  check_past_width(x.cols(), t_past, "baseline_hl");
  const std::size_t rows = x.rows(), width = x.cols();
  Tensor out(with_last(x.shape(), t_future));
  for (std::size_t r = 0; r < rows; ++r) {
    const float last = x[r * width + t_past - 1];
    std::fill_n(out.data().data() + r * t_future, t_future, last);
  }
  return out;
}

template <typename T>
BasicTensor<T> HistoricalLastForecaster<T>::predict(const BasicTensor<T>& x) const {
  return baseline_hl(x.template cast<float>(), t_past_, t_future_).template cast<T>();
}

template <typename T>
BasicTensor<T> HistoricalLastForecaster<T>::train_forward(const BasicTensor<T>&) {
  throw UsageError("historical-last baseline has nothing to train");
}

template <typename T>
void HistoricalLastForecaster<T>::train_backward(const BasicTensor<T>&) {
  throw UsageError("historical-last baseline has nothing to train");
}

template <typename T>
std::unique_ptr<Forecaster<T>> HistoricalLastForecaster<T>::clone() const {
  return std::make_unique<HistoricalLastForecaster<T>>(*this);
}

template <typename T>
LinearForecaster<T>::LinearForecaster(std::size_t input_length, std::size_t t_future,
                                      std::uint64_t seed) {
  SeededRng rng(seeds::init(seed));
  layer_ = LinearLayer<T>::init(rng, input_length, t_future);
}

template <typename T>
BasicTensor<T> LinearForecaster<T>::train_forward(const BasicTensor<T>& x) {
  last_input_ = x;
  return layer_.forward(x);
}

template <typename T>
void LinearForecaster<T>::train_backward(const BasicTensor<T>& grad_output) {
  if (last_input_.empty()) throw UsageError("linear baseline: backward without forward");
  layer_.backward(last_input_, grad_output);
}

template <typename T>
std::vector<ParamRef<T>> LinearForecaster<T>::parameters() {
  std::vector<ParamRef<T>> out;
  layer_.collect_parameters(out, "linear");
  return out;
}

template <typename T>
std::unique_ptr<Forecaster<T>> LinearForecaster<T>::clone() const {
  return std::make_unique<LinearForecaster<T>>(*this);
}

double znorm_distance(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size() || a.empty()) {
    throw DimensionError("znorm_distance: sequences of length " + std::to_string(a.size()) +
                         " and " + std::to_string(b.size()));
  }
  std::vector<double> za(a.size()), zb(b.size());
  znormalize(a, za.data());
  znormalize(b, zb.data());
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sq += (za[i] - zb[i]) * (za[i] - zb[i]);
  return std::sqrt(sq);
}

NeighborMatch nearest_neighbor(std::span<const float> corpus, std::span<const float> query,
                               std::size_t t_future) {
  const std::size_t m = query.size();
  if (m == 0 || corpus.size() < m + t_future) {
    throw DataError("1nn: corpus of " + std::to_string(corpus.size()) +
                    " steps is shorter than t_past + t_future = " + std::to_string(m + t_future));
  }
  NeighborMatch best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t o = 0; o + m + t_future <= corpus.size(); ++o) {
    const double d = znorm_distance(corpus.subspan(o, m), query);
    if (d < best.distance) best = {o, d};
  }
  return best;
}

template <typename T>
NearestNeighborForecaster<T>::NearestNeighborForecaster(const RawSeries& train, std::size_t t_past,
                                                        std::size_t t_future)
    : nodes_(train.nodes()), steps_(train.steps()), t_past_(t_past), t_future_(t_future) {
  if (t_past == 0 || t_future == 0) throw DataError("1nn: t_past and t_future must be >= 1");
  if (steps_ < t_past + t_future) {
    throw DataError("1nn: training split of " + std::to_string(steps_) +
                    " steps is shorter than t_past + t_future = " +
                    std::to_string(t_past + t_future));
  }
  const std::size_t d = train.features();
  corpus_.resize(nodes_ * steps_);
  for (std::size_t node = 0; node < nodes_; ++node) {
    const float* src = train.values.data().data() + node * d * steps_;
    std::copy(src, src + steps_, corpus_.begin() + node * steps_);
  }
  candidates_ = steps_ - t_past - t_future + 1;
  normalized_.resize(nodes_ * candidates_ * t_past);
  std::vector<double> z(t_past);
  for (std::size_t node = 0; node < nodes_; ++node)
    for (std::size_t o = 0; o < candidates_; ++o) {
      znormalize(corpus(node).subspan(o, t_past), z.data());
      std::copy(z.begin(), z.end(), normalized_.begin() + (node * candidates_ + o) * t_past);
    }
}

template <typename T>
std::span<const float> NearestNeighborForecaster<T>::corpus(std::size_t node) const {
  return std::span<const float>(corpus_).subspan(node * steps_, steps_);
}

template <typename T>
BasicTensor<T> NearestNeighborForecaster<T>::predict(const BasicTensor<T>& x) const {
  if (x.rank() < 2 || x.dim(x.rank() - 2) != nodes_) {
    throw DimensionError("1nn: expected [.. x " + std::to_string(nodes_) + " x d*t_past], got " +
                         shape_string(x.shape()));
  }
  check_past_width(x.cols(), t_past_, "1nn");
  const std::size_t rows = x.rows(), width = x.cols();
  BasicTensor<T> out(with_last(x.shape(), t_future_));
  std::vector<float> query(t_past_);
  std::vector<double> zq(t_past_);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t node = r % nodes_;
    for (std::size_t s = 0; s < t_past_; ++s) query[s] = static_cast<float>(x[r * width + s]);
    znormalize(query, zq.data());
    std::size_t best = 0;
    double best_sq = std::numeric_limits<double>::infinity();
    const double* cand = normalized_.data() + node * candidates_ * t_past_;
    for (std::size_t o = 0; o < candidates_; ++o, cand += t_past_) {
      double sq = 0.0;
      for (std::size_t s = 0; s < t_past_ && sq < best_sq; ++s) {
        const double diff = zq[s] - cand[s];
        sq += diff * diff;
      }
      if (sq < best_sq) {
        best_sq = sq;
        best = o;
      }
    }
    const auto hist = corpus(node);
    for (std::size_t k = 0; k < t_future_; ++k)
      out[r * t_future_ + k] = static_cast<T>(hist[best + t_past_ + k]);
  }
  return out;
}

template <typename T>
BasicTensor<T> NearestNeighborForecaster<T>::train_forward(const BasicTensor<T>&) {
  throw UsageError("1nn baseline has nothing to train");
}

template <typename T>
void NearestNeighborForecaster<T>::train_backward(const BasicTensor<T>&) {
  throw UsageError("1nn baseline has nothing to train");
}

template <typename T>
std::unique_ptr<Forecaster<T>> NearestNeighborForecaster<T>::clone() const {
  return std::make_unique<NearestNeighborForecaster<T>>(*this);
}

template class HistoricalLastForecaster<float>;
template class HistoricalLastForecaster<double>;
template class LinearForecaster<float>;
template class LinearForecaster<double>;
template class NearestNeighborForecaster<float>;
template class NearestNeighborForecaster<double>;

}  // namespace rpmixer
