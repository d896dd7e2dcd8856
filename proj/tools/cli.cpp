#include "cli.hpp"

#include <CLI11.hpp>

#include <optional>
#include <string>

#include "rpmixer/experiment.hpp"

namespace rpmixer {

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

struct Options {
  std::string config;
  std::string dataset;
  std::string checkpoint;
  std::string split = "test";
  std::string out;
  std::string which;
  std::string baseline;
  std::optional<std::size_t> threads;
  std::optional<std::uint64_t> seed;
};

ExperimentConfig resolve_config(const Options& o, bool out_is_dir = true) {
  ExperimentConfig config = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (!o.dataset.empty()) config.dataset = o.dataset;
  if (o.seed) config.seed = *o.seed;
  if (o.threads) {
    if (*o.threads == 0) throw ConfigError("threads", "must be >= 1");
    config.threads = *o.threads;
  }
  if (out_is_dir && !o.out.empty()) config.out_dir = o.out;
  config.validate();
  return config;
}

std::optional<std::string> dataset_override(const Options& o) {
  if (o.dataset.empty()) return std::nullopt;
  return o.dataset;
}

std::string out_dir(const Options& o, const char* fallback) {
  return o.out.empty() ? std::string(fallback) : o.out;
}

void add_config(CLI::App* cmd, Options& o, bool required) {
  auto* opt = cmd->add_option("--config", o.config, "Experiment config file (key = value)");
  if (required) opt->required();
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--threads", o.threads, "Worker threads for batch gradients");
  cmd->add_option("--seed", o.seed, "Overrides the config seed");
}

void add_split(CLI::App* cmd, Options& o) {
  cmd->add_option("--split", o.split, "Split to evaluate")
      ->check(CLI::IsMember({"train", "val", "test"}));
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"RPMixer forecasting experiments", "rpmixer"};
  app.require_subcommand(1);
  Options o;

  auto* generate = app.add_subcommand("generate", "Write a synthetic dataset");
  add_config(generate, o, false);
  generate->add_option("--out", o.out, "Dataset file to write")->required();
  generate->add_option("--seed", o.seed, "Overrides the config seed");

  auto* train = app.add_subcommand("train", "Train RPMixer and write a checkpoint");
  add_config(train, o, true);
  train->add_option("--dataset", o.dataset, "Dataset file (overrides the config)");
  add_common(train, o);

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint on one split");
  evaluate->add_option("--checkpoint", o.checkpoint, "Checkpoint from train");
  evaluate->add_option("--dataset", o.dataset, "Dataset file (defaults to the checkpoint's)");
  evaluate->add_option("--baseline", o.baseline, "Evaluate a training-free baseline instead")
      ->check(CLI::IsMember({"hl"}));
  add_config(evaluate, o, false);
  add_split(evaluate, o);
  add_common(evaluate, o);

  auto* ablate = app.add_subcommand("ablate", "Train the four ablation variants");
  add_config(ablate, o, true);
  ablate->add_option("--dataset", o.dataset, "Dataset file (overrides the config)");
  add_common(ablate, o);

  auto* diagnose = app.add_subcommand("diagnose", "Ensemble diagnostics for a checkpoint");
  diagnose->add_option("--checkpoint", o.checkpoint, "Pre-activation checkpoint")->required();
  diagnose->add_option("--dataset", o.dataset, "Dataset file (defaults to the checkpoint's)");
  add_split(diagnose, o);
  diagnose->add_option("--out", o.out, "Output directory");

  auto* baseline = app.add_subcommand("baseline", "Run the hl, linear or 1nn baseline");
  baseline->add_option("--which", o.which, "Baseline to run")
      ->required()
      ->check(CLI::IsMember({"hl", "linear", "1nn"}));
  add_config(baseline, o, false);
  baseline->add_option("--dataset", o.dataset, "Dataset file (overrides the config)");
  add_split(baseline, o);
  add_common(baseline, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    const Split split = parse_split(o.split);
    if (generate->parsed()) {
      ExperimentConfig config = resolve_config(o, false);
      run_generate(config, o.out, out);
    } else if (train->parsed()) {
      ExperimentConfig config = resolve_config(o);
      run_train(config, config.out_dir, out);
    } else if (evaluate->parsed()) {
      if (!o.baseline.empty()) {
        if (!o.checkpoint.empty()) throw InputError("--baseline and --checkpoint are exclusive");
        if (o.config.empty() && o.dataset.empty()) {
          throw InputError("--baseline needs --config or --dataset");
        }
        const ExperimentConfig config = resolve_config(o);
        run_baseline(config, parse_baseline(o.baseline), split, config.out_dir, out);
      } else {
        if (o.checkpoint.empty()) throw InputError("evaluate needs --checkpoint or --baseline");
        run_evaluate(o.checkpoint, dataset_override(o), split, out_dir(o, "out"), out);
      }
    } else if (ablate->parsed()) {
      ExperimentConfig config = resolve_config(o);
      run_ablate(config, config.out_dir, out);
    } else if (diagnose->parsed()) {
      run_diagnose(o.checkpoint, dataset_override(o), split, out_dir(o, "out"), out);
    } else if (baseline->parsed()) {
      const ExperimentConfig config = resolve_config(o);
      run_baseline(config, parse_baseline(o.which), split, config.out_dir, out);
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return 0;
}

}  // namespace rpmixer
