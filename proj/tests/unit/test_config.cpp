#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "rpmixer/checkpoint.hpp"
#include "rpmixer/config.hpp"

using namespace rpmixer;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("rpmixer_cfg_" + std::to_string(::getpid()))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::string key_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return {};
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.nodes = 5;
  c.features = 1;
  c.t_past = 6;
  c.t_future = 3;
  c.n_block = 2;
  c.seed = 11;
  return c;
}

Tensor random_input(std::size_t b, std::size_t n, std::size_t len, std::uint64_t seed) {
  SeededRng rng(seed);
  Tensor x({b, n, len});
  for (float& v : x.data()) v = static_cast<float>(rng.normal());
  return x;
}

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("empty text gives defaults") {
    const auto c = parse_config("");
    CHECK(c.t_past == 12);
    CHECK(c.t_future == 12);
    CHECK(c.n_block == 8);
    CHECK(c.batch_size == 32);
    CHECK(c.lr == 1e-3);
    CHECK(c.patience == 7);
    CHECK(c.loss == LossKind::mae);
    CHECK(c.standardize);
    CHECK(c.mask_zero);
    CHECK(c.dataset.empty());
  }
  SUBCASE("comments, blank lines and whitespace") {
    const auto c = parse_config(
        "# a run\n\n  t_past =  24  # two hours\nloss=mse\r\nrandom_projection = false\n"
        "split_ratios = 7, 1, 2\ndataset = data/x.rpmx\nsynthetic.nodes = 9\n");
    CHECK(c.t_past == 24);
    CHECK(c.loss == LossKind::mse);
    CHECK_FALSE(c.random_projection);
    CHECK(c.split_ratios == std::array<std::uint32_t, 3>{7, 1, 2});
    CHECK(c.dataset == "data/x.rpmx");
    CHECK(c.synthetic.nodes == 9);
  }
  SUBCASE("errors name the offending key") {
    CHECK(key_of("learning_rate = 0.1\n") == "learning_rate");
    CHECK(error_of("learning_rate = 0.1\n").find("unknown key") != std::string::npos);
    CHECK(key_of("lr = fast\n") == "lr");
    CHECK(error_of("lr = fast\n").find("'fast'") != std::string::npos);
    CHECK(key_of("t_past = -3\n") == "t_past");
    CHECK(key_of("t_past = 0\n") == "t_past");
    CHECK(key_of("batch_size = 12.5\n") == "batch_size");
    CHECK(key_of("loss = huber\n") == "loss");
    CHECK(key_of("standardize = maybe\n") == "standardize");
    CHECK(key_of("split_ratios = 6,2\n") == "split_ratios");
    CHECK(key_of("m_neuron = nan\n") == "m_neuron");
    CHECK(key_of("synthetic.noise_std = -1\n") == "synthetic");
    CHECK(error_of("just some words\n").find("line 1") != std::string::npos);
  }
  SUBCASE("booleans") {
    CHECK(parse_config("mask_zero = 0").mask_zero == false);
    CHECK(parse_config("mask_zero = off").mask_zero == false);
    CHECK(parse_config("mask_zero = yes").mask_zero == true);
  }
}

TEST_CASE("config serialization round-trips") {
  ExperimentConfig c;
  c.dataset = "some/file.csv";
  c.aggregate_minutes = 15;
  c.split_ratios = {5, 3, 2};
  c.m_neuron = 0.1;
  c.lr = 3e-4;
  c.weight_decay = 0.0;
  c.seed = 18446744073709551615ULL;
  c.loss = LossKind::mse;
  c.frequency_domain = false;
  c.synthetic.factor_scale = 0.3;
  c.synthetic.noise_std = 1.0 / 3.0;
  c.nodes = 716;
  const std::string text = serialize_config(c);
  const ExperimentConfig back = parse_config(text);
  CHECK(serialize_config(back) == text);
  CHECK(back.seed == c.seed);
  CHECK(back.m_neuron == c.m_neuron);
  CHECK(back.synthetic.noise_std == c.synthetic.noise_std);
  CHECK(back.flags().frequency_domain == false);
  CHECK(back.nodes == 716);
  CHECK(text.find("lr = 3e-04\n") != std::string::npos);
}

TEST_CASE("config projections") {
  ExperimentConfig c = small_config();
  c.lr = 0.01;
  c.threads = 3;
  const ModelConfig m = c.model_config();
  CHECK(m.nodes == 5);
  CHECK(m.t_past == 6);
  CHECK(m.seed == 11);
  const FitOptions f = c.fit_options();
  CHECK(f.optimizer.lr == 0.01);
  CHECK(f.threads == 3);
  CHECK(f.seed == 11);
  CHECK(c.synthetic_spec().seed == 11);
  c.set_flags({false, true, false});
  CHECK_FALSE(c.model_config().pre_activation);
  CHECK_FALSE(c.model_config().frequency_domain);
}

TEST_CASE("load_config reports missing files") {
  CHECK_THROWS_AS(load_config("/nonexistent/run.cfg"), InputError);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  TempDir dir;
  const ExperimentConfig config = small_config();
  for (bool random_projection : {true, false}) {
    for (bool frequency_domain : {true, false}) {
      ExperimentConfig c = config;
      c.random_projection = random_projection;
      c.frequency_domain = frequency_domain;
      RPMixerModel<float> model(c.model_config());
      // A few optimizer steps so moments and weights differ from their init.
      AdamW<float> opt;
      const Tensor x = random_input(4, 5, 6, 3);
      for (int step = 0; step < 3; ++step) {
        model.zero_grad();
        const Tensor y = model.train_forward(x);
        model.train_backward(Tensor(y.shape(), 1.0f));
        const auto params = model.parameters();
        opt.step(params);
      }
      Tensor mean({5, 1}), std({5, 1});
      for (std::size_t i = 0; i < 5; ++i) {
        mean[i] = 0.25f * static_cast<float>(i);
        std[i] = 1.0f + 0.5f * static_cast<float>(i);
      }
      const Standardizer scaler(mean, std);
      const fs::path path = dir.path / "model.rpck";
      save_checkpoint(make_checkpoint(c, model, scaler, &opt, 0.125), path);

      const Checkpoint cp = load_checkpoint(path);
      CHECK(serialize_config(cp.config) == serialize_config(c));
      CHECK(cp.best_val_mae == 0.125);
      REQUIRE(cp.optimizer);
      CHECK(cp.optimizer->step == 3);
      CHECK(cp.optimizer->first_moments.size() == model.parameters().size());
      CHECK(cp.optimizer->first_moments[0].value == opt.first_moments()[0]);

      RestoredRun run = restore_run(cp);
      const Tensor probe = random_input(7, 5, 6, 99);
      CHECK(run.model.forward(probe) == model.forward(probe));
      CHECK(run.scaler.mean() == mean);
      CHECK(run.scaler.std() == std);
      CHECK(run.model.trainable_parameter_count() == model.trainable_parameter_count());
    }
  }
}

TEST_CASE("checkpoint without optimizer state") {
  TempDir dir;
  const ExperimentConfig c = small_config();
  RPMixerModel<float> model(c.model_config());
  const fs::path path = dir.path / "fresh.rpck";
  save_checkpoint(make_checkpoint(c, model, Standardizer::identity(5, 1), nullptr, 1.0), path);
  const Checkpoint cp = load_checkpoint(path);
  CHECK_FALSE(cp.optimizer);
  CHECK(cp.tensors.size() == model.state().size() + 2);
}

TEST_CASE("checkpoint corruption is detected") {
  TempDir dir;
  const ExperimentConfig c = small_config();
  RPMixerModel<float> model(c.model_config());
  const fs::path path = dir.path / "good.rpck";
  save_checkpoint(make_checkpoint(c, model, Standardizer::identity(5, 1), nullptr, 1.0), path);
  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  CHECK(bytes.substr(0, 4) == "RPCK");
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0);
  auto write = [&](const std::string& name, const std::string& content) {
    const fs::path p = dir.path / name;
    std::ofstream(p, std::ios::binary) << content;
    return p;
  };
  CHECK_THROWS_AS(load_checkpoint(write("magic.rpck", "RPMX" + bytes.substr(4))), DataError);
  CHECK_THROWS_AS(load_checkpoint(write("short.rpck", bytes.substr(0, bytes.size() - 5))),
                  DataError);
  CHECK_THROWS_AS(load_checkpoint(write("long.rpck", bytes + "x")), DataError);
  CHECK_THROWS_AS(load_checkpoint(dir.path / "absent.rpck"), InputError);

  Checkpoint cp = load_checkpoint(path);
  Checkpoint missing = cp;
  missing.tensors.erase(missing.tensors.begin());
  CHECK_THROWS_WITH_AS(restore_run(missing), doctest::Contains("missing tensor"), DataError);
  Checkpoint reshaped = cp;
  reshaped.tensors.front().value = Tensor({1});
  CHECK_THROWS_WITH_AS(restore_run(reshaped), doctest::Contains("has shape"), DataError);
  Checkpoint extra = cp;
  extra.tensors.push_back({"stray", Tensor({1})});
  CHECK_THROWS_WITH_AS(restore_run(extra), doctest::Contains("unexpected tensor"), DataError);
}
