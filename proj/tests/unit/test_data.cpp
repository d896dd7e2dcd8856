#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <unistd.h>

#include "rpmixer/data.hpp"

using namespace rpmixer;
namespace fs = std::filesystem;

namespace {

RawSeries ramp(std::size_t n, std::size_t d, std::size_t t) {
  Tensor v({n, d, t});
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(i);
  return RawSeries{v, 5, 1000, std::nullopt};
}

double pearson(std::span<const float> a, std::span<const float> b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

double mean_abs_pairwise_correlation(const RawSeries& s) {
  const std::size_t n = s.nodes(), t = s.steps();
  double acc = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      acc += std::abs(pearson(s.values.data().subspan(i * t, t), s.values.data().subspan(j * t, t)));
      ++pairs;
    }
  return acc / static_cast<double>(pairs);
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("rpmixer_data_" + std::to_string(::getpid()))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("aggregate") {
  SUBCASE("window means") {
    const auto out = aggregate(make_series(Tensor::matrix({{1, 2, 3, 4, 5, 6}}), 5), 15);
    CHECK(out.values == Tensor({1, 1, 2}, std::vector<float>{2, 5}));
    CHECK(out.interval_minutes == 15);
  }
  SUBCASE("same interval is unchanged") {
    const auto raw = ramp(2, 2, 7);
    const auto out = aggregate(raw, 5);
    CHECK(out.values == raw.values);
  }
  SUBCASE("one day of 5-minute data yields 96 windows") {
    CHECK(aggregate(ramp(3, 1, 288), 15).steps() == 96);
  }
  SUBCASE("trailing partial window dropped, covered mean preserved") {
    const auto raw = ramp(1, 1, 10);
    const auto out = aggregate(raw, 15);
    CHECK(out.steps() == 3);
    double covered = 0.0;
    for (std::size_t i = 0; i < 9; ++i) covered += raw.values[i];
    double agg = 0.0;
    for (float v : out.values.data()) agg += v;
    CHECK(agg / 3.0 == doctest::Approx(covered / 9.0).epsilon(1e-12));
  }
  SUBCASE("indivisible interval") {
    CHECK_THROWS_AS(aggregate(ramp(1, 1, 12), 7), DataError);
    CHECK_THROWS_AS(aggregate(ramp(1, 1, 2), 15), DataError);
  }
}

TEST_CASE("chronological split") {
  const auto raw = ramp(2, 1, 10);
  const auto s = chronological_split(raw);
  CHECK(s.train.steps() == 6);
  CHECK(s.val.steps() == 2);
  CHECK(s.test.steps() == 2);
  // Concatenation restores the original.
  for (std::size_t node = 0; node < 2; ++node)
    for (std::size_t t = 0; t < 10; ++t) {
      const RawSeries& part = t < 6 ? s.train : (t < 8 ? s.val : s.test);
      const std::size_t offset = t < 6 ? 0 : (t < 8 ? 6 : 8);
      CHECK(part.values.at(node, 0, t - offset) == raw.values.at(node, 0, t));
    }
  CHECK(s.val.start_timestamp == raw.start_timestamp + 6 * 5 * 60);

  const auto big = chronological_split(ramp(1, 1, 35040));
  CHECK(big.train.steps() == 21024);
  CHECK(big.val.steps() == 7008);
  CHECK(big.test.steps() == 7008);

  CHECK_THROWS_AS(chronological_split(ramp(1, 1, 2)), DataError);  // 1, 0, 1
  CHECK_THROWS_AS(chronological_split(raw, {6, 0, 2}), DataError);
}

TEST_CASE("windows") {
  SUBCASE("counting") {
    CHECK(make_windows(ramp(1, 1, 5), 2, 2).size() == 2);
    CHECK(make_windows(ramp(1, 1, 24), 12, 12).size() == 1);
    for (std::size_t len : {10, 17, 33})
      for (std::size_t stride : {1, 2, 3, 5})
        CHECK(make_windows(ramp(2, 1, len), 4, 3, stride).size() == (len - 7) / stride + 1);
    CHECK_THROWS_AS(make_windows(ramp(1, 1, 5), 3, 3), DataError);
  }
  SUBCASE("indexing contract") {
    const auto raw = ramp(3, 2, 20);
    const auto w = make_windows(raw, 4, 3, 2);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const auto past = w.past(i);
      const auto future = w.future(i);
      REQUIRE(past.shape() == Shape{3, 8});
      REQUIRE(future.shape() == Shape{3, 3});
      const std::size_t s = w.start(i);
      for (std::size_t n = 0; n < 3; ++n) {
        for (std::size_t f = 0; f < 2; ++f)
          for (std::size_t k = 0; k < 4; ++k)
            CHECK(past.at(n, f * 4 + k) == raw.values.at(n, f, s + k));
        // Future follows the past window with no gap, feature 0 only.
        for (std::size_t k = 0; k < 3; ++k) CHECK(future.at(n, k) == raw.values.at(n, 0, s + 4 + k));
      }
    }
    const std::vector<std::size_t> idx{2, 0};
    const auto batch = w.past_batch(idx);
    CHECK(batch.shape() == Shape{2, 3, 8});
    CHECK(batch.at(0, 1, 5) == w.past(2).at(1, 5));
    CHECK(w.future_batch(idx).at(1, 2, 2) == w.future(0).at(2, 2));
  }
}

TEST_CASE("synthetic generator") {
  SUBCASE("pure daily sinusoid has exact period") {
    SyntheticSpec spec;
    spec.nodes = 1;
    spec.steps = 960;
    spec.weekly_amplitude_min = spec.weekly_amplitude_max = 0.0;
    spec.latent_factors = 0;
    spec.noise_std = 0.0;
    const auto s = synthetic_generate(spec);
    const auto v = s.values.data();
    const std::size_t lag = spec.steps_per_day;
    CHECK(pearson(v.subspan(0, v.size() - lag), v.subspan(lag)) == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("determinism and seed sensitivity") {
    SyntheticSpec spec;
    spec.nodes = 5;
    spec.steps = 500;
    CHECK(synthetic_generate(spec).values == synthetic_generate(spec).values);
    auto other = spec;
    other.seed = 1;
    CHECK_FALSE(synthetic_generate(other).values == synthetic_generate(spec).values);
  }
  SUBCASE("shared factors raise cross-node correlation") {
    SyntheticSpec spec;
    spec.nodes = 12;
    spec.steps = 2000;
    // Random-phase daily cycles already make many pairs strongly (anti-)correlated,
    // so the factor effect is measured with the seasonal terms switched off.
    spec.daily_amplitude_min = spec.daily_amplitude_max = 0.0;
    spec.weekly_amplitude_min = spec.weekly_amplitude_max = 0.0;
    spec.latent_factors = 0;
    const double without = mean_abs_pairwise_correlation(synthetic_generate(spec));
    spec.latent_factors = 3;
    const double with = mean_abs_pairwise_correlation(synthetic_generate(spec));
    CHECK(with > without);
    CHECK(with > 0.3);
  }
  SUBCASE("traffic-like: finite, non-negative, desk defaults") {
    const auto s = synthetic_generate(SyntheticSpec{});
    CHECK(s.nodes() == 32);
    CHECK(s.steps() == 2688);
    CHECK(s.interval_minutes == 15);
    CHECK(s.values.all_finite());
    for (float v : s.values.data()) CHECK(v >= 0.0f);
  }
  SUBCASE("invalid spec") {
    SyntheticSpec spec;
    spec.nodes = 0;
    CHECK_THROWS(synthetic_generate(spec));
  }
}

TEST_CASE("csv ingestion") {
  SUBCASE("2x3 fixture") {
    const auto s = parse_csv("a,b\n1,2\n3,4\n5,6\n");
    CHECK(s.nodes() == 2);
    CHECK(s.steps() == 3);
    CHECK(s.features() == 1);
    CHECK(s.values.at(1, 0, 2) == 6.0f);
  }
  SUBCASE("error contracts name the location") {
    auto message = [](const std::string& text, CsvOptions o = {}) -> std::string {
      try {
        parse_csv(text, o);
      } catch (const DataError& e) {
        return e.what();
      }
      return "";
    };
    const auto bad_cell = message("a,b\n1,2\n3,x\n");
    CHECK(bad_cell.find("row 3") != std::string::npos);
    CHECK(bad_cell.find("column 2") != std::string::npos);
    CHECK(message("a,b\n1,2\n3\n").find("row 3") != std::string::npos);
    CHECK(message("a,b\n1,nan\n").find("column 2") != std::string::npos);
    CHECK_FALSE(message("a,b\n1,\n").empty());
    CHECK_FALSE(message("a,,b\n1,2,3\n").empty());
    CHECK_FALSE(message("").empty());
    CHECK_FALSE(message("a,b\n").empty());
  }
  SUBCASE("forward fill") {
    CsvOptions o;
    o.forward_fill = true;
    const auto s = parse_csv("a,b\n1,2\n,4\n", o);
    CHECK(s.values.at(0, 0, 1) == 1.0f);
  }
  SUBCASE("file loading") {
    TempDir dir;
    const auto path = dir.path / "tiny.csv";
    std::ofstream(path) << "n0,n1\r\n1.5,2\r\n3,4\r\n";
    const auto s = load_dataset(path);
    CHECK(s.values.at(0, 0, 0) == 1.5f);
    CHECK_THROWS_AS(load_csv(dir.path / "missing.csv"), DataError);
  }
}

TEST_CASE("binary format") {
  TempDir dir;
  SUBCASE("roundtrip is bit-identical") {
    SyntheticSpec spec;
    spec.nodes = 4;
    spec.steps = 100;
    auto raw = synthetic_generate(spec);
    raw.start_timestamp = -123456789;
    const auto path = dir.path / "d.rpmx";
    save_binary(raw, path);
    const auto back = load_dataset(path);
    CHECK(back.values == raw.values);
    CHECK(back.interval_minutes == raw.interval_minutes);
    CHECK(back.start_timestamp == raw.start_timestamp);
  }
  SUBCASE("header layout") {
    const auto path = dir.path / "h.rpmx";
    save_binary(RawSeries{Tensor({1, 1, 2}, std::vector<float>{1.0f, -2.0f}), 15, 7, std::nullopt},
                path);
    std::ifstream in(path, std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), {});
    const std::vector<unsigned char> expected{
        'R', 'P', 'M', 'X', 1, 0,                // magic, version
        1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0,      // n, d, t
        15, 0, 0, 0, 7, 0, 0, 0, 0, 0, 0, 0,     // interval, start
        0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0xc0};
    CHECK(bytes == expected);
  }
  SUBCASE("corrupt files") {
    const auto path = dir.path / "bad.rpmx";
    std::ofstream(path, std::ios::binary) << "RPMQ";
    CHECK_THROWS_AS(load_binary(path), DataError);
    save_binary(ramp(2, 1, 4), path);
    fs::resize_file(path, fs::file_size(path) - 2);
    CHECK_THROWS_AS(load_binary(path), DataError);
    CHECK_THROWS_AS(load_binary(dir.path / "nope.rpmx"), DataError);
  }
}
