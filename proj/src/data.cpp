#include "rpmixer/data.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "binary_io.hpp"
#include "rpmixer/rng.hpp"

namespace rpmixer {

RawSeries RawSeries::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > steps()) {
    throw DataError("series slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                    ") out of range for " + std::to_string(steps()) + " steps");
  }
  const std::size_t n = nodes();
  const std::size_t d = features();
  const std::size_t t = steps();
  const std::size_t len = end - begin;
  Tensor out({n, d, len});
  for (std::size_t row = 0; row < n * d; ++row) {
    const float* src = values.data().data() + row * t + begin;
    std::copy(src, src + len, out.data().data() + row * len);
  }
  RawSeries result{std::move(out), interval_minutes,
                   start_timestamp + static_cast<std::int64_t>(begin) * interval_minutes * 60,
                   adjacency};
  return result;
}

RawSeries make_series(const Tensor& node_by_time, std::uint32_t interval_minutes,
                      std::int64_t start_timestamp) {
  if (node_by_time.rank() != 2) {
    throw DimensionError("make_series: expected [n x t], got " +
                         shape_string(node_by_time.shape()));
  }
  return RawSeries{node_by_time.reshaped({node_by_time.dim(0), 1, node_by_time.dim(1)}),
                   interval_minutes, start_timestamp, std::nullopt};
}

RawSeries aggregate(const RawSeries& raw, std::uint32_t target_minutes) {
  if (raw.interval_minutes == 0 || target_minutes == 0 ||
      target_minutes % raw.interval_minutes != 0) {
    throw DataError("aggregate: target interval " + std::to_string(target_minutes) +
                    " min is not a multiple of the source interval " +
                    std::to_string(raw.interval_minutes) + " min");
  }
  const std::size_t factor = target_minutes / raw.interval_minutes;
  if (factor == 1) return raw;
  const std::size_t t = raw.steps();
  const std::size_t out_t = t / factor;
  if (out_t == 0) {
    throw DataError("aggregate: " + std::to_string(t) + " steps do not fill one " +
                    std::to_string(target_minutes) + "-minute window");
  }
  const std::size_t rows = raw.nodes() * raw.features();
  Tensor out({raw.nodes(), raw.features(), out_t});
  for (std::size_t row = 0; row < rows; ++row) {
    const float* src = raw.values.data().data() + row * t;
    float* dst = out.data().data() + row * out_t;
    for (std::size_t w = 0; w < out_t; ++w) {
      double sum = 0.0;
      for (std::size_t j = 0; j < factor; ++j) sum += src[w * factor + j];
      dst[w] = static_cast<float>(sum / static_cast<double>(factor));
    }
  }
  return RawSeries{std::move(out), target_minutes, raw.start_timestamp, raw.adjacency};
}

SplitSeries chronological_split(const RawSeries& raw, std::array<std::uint32_t, 3> ratios) {
  if (ratios[0] == 0 || ratios[1] == 0 || ratios[2] == 0) {
    throw DataError("chronological_split: ratios must be positive");
  }
  const std::uint64_t total = std::uint64_t{ratios[0]} + ratios[1] + ratios[2];
  const std::uint64_t t = raw.steps();
  const std::size_t first = static_cast<std::size_t>(t * ratios[0] / total);
  const std::size_t second = static_cast<std::size_t>(t * (ratios[0] + ratios[1]) / total);
  if (first == 0 || second == first || second == t) {
    throw DataError("chronological_split: " + std::to_string(t) +
                    " steps leave an empty split (boundaries " + std::to_string(first) + ", " +
                    std::to_string(second) + ")");
  }
  return SplitSeries{raw.slice(0, first), raw.slice(first, second), raw.slice(second, t)};
}

// ---------------------------------------------------------------------------
// WindowedDataset

WindowedDataset::WindowedDataset(RawSeries series, std::size_t t_past, std::size_t t_future,
                                 std::size_t stride)
    : series_(std::move(series)), t_past_(t_past), t_future_(t_future), stride_(stride) {
  if (t_past == 0 || t_future == 0 || stride == 0) {
    throw DataError("make_windows: t_past, t_future and stride must be >= 1");
  }
  if (series_.values.rank() != 3) {
    throw DataError("make_windows: series values must be [n x d x t], got " +
                    shape_string(series_.values.shape()));
  }
  const std::size_t len = series_.steps();
  if (len < t_past + t_future) {
    throw DataError("make_windows: split of " + std::to_string(len) + " steps is shorter than " +
                    "t_past + t_future = " + std::to_string(t_past + t_future));
  }
  count_ = (len - t_past - t_future) / stride + 1;
}

void WindowedDataset::fill_past(std::size_t i, float* dst) const {
  const std::size_t n = nodes();
  const std::size_t d = features();
  const std::size_t t = series_.steps();
  const std::size_t offset = start(i);
  for (std::size_t node = 0; node < n; ++node) {
    for (std::size_t f = 0; f < d; ++f) {
      const float* src = series_.values.data().data() + (node * d + f) * t + offset;
      std::copy(src, src + t_past_, dst + node * d * t_past_ + f * t_past_);
    }
  }
}

void WindowedDataset::fill_future(std::size_t i, float* dst) const {
  const std::size_t n = nodes();
  const std::size_t d = features();
  const std::size_t t = series_.steps();
  const std::size_t offset = start(i) + t_past_;
  for (std::size_t node = 0; node < n; ++node) {
    const float* src = series_.values.data().data() + (node * d) * t + offset;
    std::copy(src, src + t_future_, dst + node * t_future_);
  }
}

Tensor WindowedDataset::past(std::size_t i) const {
  if (i >= count_) throw DataError("dataset: sample index out of range");
  Tensor out({nodes(), input_length()});
  fill_past(i, out.data().data());
  return out;
}

Tensor WindowedDataset::future(std::size_t i) const {
  if (i >= count_) throw DataError("dataset: sample index out of range");
  Tensor out({nodes(), t_future_});
  fill_future(i, out.data().data());
  return out;
}

Tensor WindowedDataset::past_batch(std::span<const std::size_t> indices) const {
  const std::size_t per = nodes() * input_length();
  Tensor out({indices.size(), nodes(), input_length()});
  for (std::size_t b = 0; b < indices.size(); ++b) {
    if (indices[b] >= count_) throw DataError("dataset: sample index out of range");
    fill_past(indices[b], out.data().data() + b * per);
  }
  return out;
}

Tensor WindowedDataset::future_batch(std::span<const std::size_t> indices) const {
  const std::size_t per = nodes() * t_future_;
  Tensor out({indices.size(), nodes(), t_future_});
  for (std::size_t b = 0; b < indices.size(); ++b) {
    if (indices[b] >= count_) throw DataError("dataset: sample index out of range");
    fill_future(indices[b], out.data().data() + b * per);
  }
  return out;
}

WindowedDataset make_windows(const RawSeries& split, std::size_t t_past, std::size_t t_future,
                             std::size_t stride) {
  return WindowedDataset(split, t_past, t_future, stride);
}

// ---------------------------------------------------------------------------
// Synthetic generator

void SyntheticSpec::validate() const {
  if (nodes == 0 || steps == 0 || steps_per_day == 0) {
    throw DataError("synthetic spec: nodes, steps and steps_per_day must be >= 1");
  }
  if (daily_amplitude_min > daily_amplitude_max || weekly_amplitude_min > weekly_amplitude_max ||
      base_min > base_max) {
    throw DataError("synthetic spec: every *_min must not exceed its *_max");
  }
  if (noise_std < 0.0 || factor_scale < 0.0 || base_min < 0.0) {
    throw DataError("synthetic spec: noise_std, factor_scale and base_min must be >= 0");
  }
  if (!(factor_persistence >= 0.0 && factor_persistence < 1.0)) {
    throw DataError("synthetic spec: factor_persistence must lie in [0, 1)");
  }
  if (interval_minutes == 0) throw DataError("synthetic spec: interval_minutes must be >= 1");
}

RawSeries synthetic_generate(const SyntheticSpec& spec) {
  spec.validate();
  // Separate streams keep node shapes and noise identical when only the
  // factor settings change.
  SeededRng node_rng(spec.seed);
  SeededRng factor_rng(spec.seed ^ 0xA0761D6478BD642FULL);
  SeededRng noise_rng(spec.seed ^ 0xE7037ED1A0B428DBULL);
  const std::size_t n = spec.nodes;
  const std::size_t t = spec.steps;
  const double two_pi = 2.0 * std::numbers::pi;
  const double day = static_cast<double>(spec.steps_per_day);
  const double week = 7.0 * day;

  // Latent factors, with max_lag steps of burn-in history in front.
  const std::size_t history = t + spec.max_lag;
  std::vector<std::vector<double>> factors(spec.latent_factors, std::vector<double>(history));
  const double innovation = std::sqrt(1.0 - spec.factor_persistence * spec.factor_persistence);
  for (auto& f : factors) {
    double state = factor_rng.normal();
    for (std::size_t s = 0; s < history; ++s) {
      f[s] = state;
      state = spec.factor_persistence * state + innovation * factor_rng.normal();
    }
  }

  Tensor values({n, 1, t});
  for (std::size_t node = 0; node < n; ++node) {
    const double daily_amp = node_rng.uniform(spec.daily_amplitude_min, spec.daily_amplitude_max);
    const double daily_phase = node_rng.uniform(0.0, two_pi);
    const double weekly_amp = node_rng.uniform(spec.weekly_amplitude_min, spec.weekly_amplitude_max);
    const double weekly_phase = node_rng.uniform(0.0, two_pi);
    const double base = node_rng.uniform(spec.base_min, spec.base_max);
    const std::size_t lag = spec.max_lag == 0 ? 0 : node_rng.below(spec.max_lag + 1);
    // Non-negative loadings: every node responds to a shared shock in the same direction.
    std::vector<double> loadings(spec.latent_factors);
    for (double& l : loadings) l = spec.factor_scale * std::abs(factor_rng.normal());

    std::vector<double> series(t);
    for (std::size_t s = 0; s < t; ++s) {
      const double tau = static_cast<double>(s);
      const double weekly = 1.0 + weekly_amp * std::sin(two_pi * tau / week + weekly_phase);
      double v = daily_amp * std::sin(two_pi * tau / day + daily_phase) * weekly;
      for (std::size_t k = 0; k < spec.latent_factors; ++k)
        v += loadings[k] * factors[k][s + spec.max_lag - lag];
      const double noise = noise_rng.normal();
      v += spec.noise_std * noise;
      series[s] = v;
    }
    const double lowest = *std::min_element(series.begin(), series.end());
    float* dst = values.data().data() + node * t;
    for (std::size_t s = 0; s < t; ++s) dst[s] = static_cast<float>(series[s] - lowest + base);
  }
  return RawSeries{std::move(values), spec.interval_minutes, 0, std::nullopt};
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

RawSeries parse_csv(const std::string& text, const CsvOptions& options) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || trim(line).empty()) {
    throw DataError("csv: missing header row of node ids");
  }
  const std::vector<std::string> header = split_line(line);
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (trim(header[c]).empty()) {
      throw DataError("csv: malformed header, column " + std::to_string(c + 1) + " has no node id");
    }
  }
  const std::size_t n = header.size();
  std::vector<std::vector<float>> columns(n);
  std::size_t row = 1;  // 1-based line number of the header
  while (std::getline(is, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != n) {
      throw DataError("csv: row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                      " cells, header has " + std::to_string(n));
    }
    for (std::size_t c = 0; c < n; ++c) {
      const std::string cell = trim(cells[c]);
      if (cell.empty()) {
        if (options.forward_fill && !columns[c].empty()) {
          columns[c].push_back(columns[c].back());
          continue;
        }
        throw DataError("csv: missing value at row " + std::to_string(row) + ", column " +
                        std::to_string(c + 1));
      }
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        throw DataError("csv: non-numeric value '" + cell + "' at row " + std::to_string(row) +
                        ", column " + std::to_string(c + 1));
      }
      if (!std::isfinite(value)) {
        throw DataError("csv: non-finite value at row " + std::to_string(row) + ", column " +
                        std::to_string(c + 1));
      }
      columns[c].push_back(static_cast<float>(value));
    }
  }
  const std::size_t t = columns.empty() ? 0 : columns[0].size();
  if (t == 0) throw DataError("csv: no data rows");
  Tensor values({n, 1, t});
  for (std::size_t c = 0; c < n; ++c)
    std::copy(columns[c].begin(), columns[c].end(), values.data().data() + c * t);
  return RawSeries{std::move(values), options.interval_minutes, options.start_timestamp,
                   std::nullopt};
}

RawSeries load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("csv: cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), options);
}

// ---------------------------------------------------------------------------
// Binary

namespace {

constexpr char kMagic[4] = {'R', 'P', 'M', 'X'};
constexpr std::uint16_t kVersion = 1;
constexpr const char* kContext = "binary dataset";
using detail::get_le;
using detail::put_le;

}  // namespace

void save_binary(const RawSeries& raw, const std::filesystem::path& path) {
  if (raw.values.rank() != 3) throw DataError("binary dataset: values must be [n x d x t]");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("binary dataset: cannot write " + path.string());
  out.write(kMagic, 4);
  put_le<std::uint16_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(raw.nodes()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(raw.features()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(raw.steps()));
  put_le<std::uint32_t>(out, raw.interval_minutes);
  put_le<std::int64_t>(out, raw.start_timestamp);
  for (float v : raw.values.data()) put_le<float>(out, v);
  if (!out) throw DataError("binary dataset: write failed for " + path.string());
}

RawSeries load_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("binary dataset: cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError("binary dataset: " + path.string() + " does not start with RPMX");
  }
  const auto version = get_le<std::uint16_t>(in, kContext, "version");
  if (version != kVersion) {
    throw DataError("binary dataset: unsupported version " + std::to_string(version));
  }
  const auto n = get_le<std::uint32_t>(in, kContext, "n");
  const auto d = get_le<std::uint32_t>(in, kContext, "d");
  const auto t = get_le<std::uint32_t>(in, kContext, "t");
  RawSeries raw;
  raw.interval_minutes = get_le<std::uint32_t>(in, kContext, "interval_minutes");
  raw.start_timestamp = get_le<std::int64_t>(in, kContext, "start_timestamp");
  raw.values = Tensor({n, d, t});
  for (float& v : raw.values.data()) {
    v = get_le<float>(in, kContext, "values");
    if (!std::isfinite(v)) throw DataError("binary dataset: non-finite value in " + path.string());
  }
  return raw;
}

RawSeries load_dataset(const std::filesystem::path& path, const CsvOptions& csv_options) {
  if (path.extension() == ".csv") return load_csv(path, csv_options);
  return load_binary(path);
}

}  // namespace rpmixer
