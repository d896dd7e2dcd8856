#include "rpmixer/experiment.hpp"

#include <cmath>
#include <cstdio>

#include "rpmixer/baselines.hpp"
#include "rpmixer/report.hpp"

namespace rpmixer {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kEvalBatch = 64;
constexpr std::size_t kJLVectors = 100;

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string shape_of(const RawSeries& raw) {
  return std::to_string(raw.nodes()) + " nodes x " + std::to_string(raw.features()) + " features";
}

void write_config(const ExperimentConfig& config, const fs::path& path) {
  write_text(path, serialize_config(config));
}

RawSeries load_path(const std::string& path, const ExperimentConfig& config) {
  if (!fs::exists(path)) throw InputError("dataset not found: " + path);
  CsvOptions csv;
  csv.forward_fill = config.forward_fill;
  return load_dataset(path, csv);
}

void log_report(std::ostream& log, const std::string& label, const MetricReport& report) {
  log << label << ": MAE " << fixed(report.average.mae) << "  RMSE " << fixed(report.average.rmse)
      << "  MAPE " << fixed(report.average.mape_pct) << "%\n";
}

EvaluationSummary write_evaluation(EvaluationSummary summary, const fs::path& out_dir) {
  write_text(out_dir / "metrics.csv", metrics_csv(summary_rows(summary.variant, summary.report)));
  write_text(out_dir / "table.md",
             horizon_table({{summary.variant, summary.report, summary.parameters}}));
  return summary;
}

/// A checkpoint's run, re-attached to its dataset (or a replacement).
struct LoadedRun {
  RestoredRun run;
  PreparedData data;
};

LoadedRun load_run(const fs::path& checkpoint, const std::optional<std::string>& dataset) {
  RestoredRun run = restore_run(load_checkpoint(checkpoint));
  ExperimentConfig config = run.config;
  if (dataset) config.dataset = *dataset;
  RawSeries raw = load_source(config);
  if (raw.nodes() != run.config.nodes || raw.features() != run.config.features) {
    throw InputError("checkpoint expects " + std::to_string(run.config.nodes) + " nodes x " +
                     std::to_string(run.config.features) + " features, dataset has " +
                     shape_of(raw));
  }
  PreparedData data = prepare_data(config, std::move(raw), &run.scaler);
  return {std::move(run), std::move(data)};
}

}  // namespace

Split parse_split(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw InputError("unknown split '" + name + "' (expected train, val or test)");
}

std::string to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "test";
}

RawSeries load_source(const ExperimentConfig& config) {
  RawSeries raw = config.dataset.empty() ? synthetic_generate(config.synthetic_spec())
                                         : load_path(config.dataset, config);
  if (config.aggregate_minutes != 0 && config.aggregate_minutes != raw.interval_minutes) {
    raw = aggregate(raw, config.aggregate_minutes);
  }
  return raw;
}

const WindowedDataset& PreparedData::split(Split which) const {
  switch (which) {
    case Split::train: return train;
    case Split::val: return val;
    case Split::test: return test;
  }
  return test;
}

PreparedData prepare_data(const ExperimentConfig& config, RawSeries raw,
                          const Standardizer* scaler) {
  SplitSeries parts = chronological_split(raw, config.split_ratios);
  PreparedData out;
  if (scaler) {
    out.scaler = *scaler;
  } else {
    out.scaler = config.standardize ? Standardizer::fit(parts.train)
                                    : Standardizer::identity(raw.nodes(), raw.features());
  }
  auto windows = [&](const RawSeries& part, const char* name) {
    const std::size_t needed = config.t_past + config.t_future;
    if (part.steps() < needed) {
      throw InputError(std::string(name) + " split has " + std::to_string(part.steps()) +
                       " steps, fewer than t_past + t_future = " + std::to_string(needed));
    }
    return WindowedDataset(out.scaler.transform(part), config.t_past, config.t_future,
                           config.stride);
  };
  out.train = windows(parts.train, "train");
  out.val = windows(parts.val, "val");
  out.test = windows(parts.test, "test");
  out.raw = std::move(raw);
  return out;
}

void resolve_dimensions(ExperimentConfig& config, const RawSeries& raw) {
  if ((config.nodes != 0 && config.nodes != raw.nodes()) ||
      (config.features != 0 && config.features != raw.features())) {
    throw InputError("config expects " + std::to_string(config.nodes) + " nodes x " +
                     std::to_string(config.features) + " features, dataset has " + shape_of(raw));
  }
  config.nodes = raw.nodes();
  config.features = raw.features();
}

double periodicity_score(const RawSeries& raw, std::size_t lag) {
  const std::size_t t = raw.steps();
  if (lag == 0 || t < lag + 2) return std::nan("");
  double sum = 0.0;
  std::size_t counted = 0;
  std::vector<double> a(t - lag), b(t - lag);
  for (std::size_t node = 0; node < raw.nodes(); ++node) {
    const float* x = raw.values.data().data() + node * raw.features() * t;
    for (std::size_t s = 0; s + lag < t; ++s) {
      a[s] = x[s];
      b[s] = x[s + lag];
    }
    if (const auto r = pearson(a, b)) {
      sum += *r;
      ++counted;
    }
  }
  return counted ? sum / static_cast<double>(counted) : std::nan("");
}

GenerateSummary run_generate(const ExperimentConfig& config, const fs::path& out_path,
                             std::ostream& log) {
  const SyntheticSpec spec = config.synthetic_spec();
  const RawSeries raw = synthetic_generate(spec);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  save_binary(raw, out_path);
  ExperimentConfig saved = config;
  saved.dataset = out_path.string();
  write_config(saved, fs::path(out_path.string() + ".cfg"));
  GenerateSummary s{raw.nodes(), raw.steps(), spec.steps_per_day,
                    periodicity_score(raw, spec.steps_per_day)};
  log << "wrote " << out_path.string() << ": n=" << s.nodes << " t=" << s.steps
      << " interval=" << raw.interval_minutes << "min\n"
      << "mean lag-" << s.steps_per_day << " autocorrelation: " << fixed(s.daily_autocorrelation, 4)
      << '\n';
  return s;
}

TrainSummary train_prepared(ExperimentConfig config, const PreparedData& data,
                            const fs::path& out_dir) {
  resolve_dimensions(config, data.raw);
  RPMixerModel<float> model(config.model_config());
  FitOptions options = config.fit_options();
  FitResult<float> result = fit(model, data.train, data.val, options, &data.scaler);

  TrainSummary summary;
  summary.config = config;
  summary.history = result.history;
  summary.best_epoch = result.best_epoch;
  summary.best_val_mae = result.best_val_mae;
  summary.stopped_early = result.stopped_early;
  summary.val_report =
      evaluate_forecaster(model, data.val, &data.scaler, config.mask_zero, kEvalBatch);
  summary.trainable_parameters = model.trainable_parameter_count();
  summary.frozen_parameters = model.frozen_parameter_count();

  save_checkpoint(make_checkpoint(config, model, data.scaler, &result.optimizer,
                                  result.best_val_mae),
                  out_dir / "checkpoint.rpck");
  write_text(out_dir / "history.csv", history_csv(result.history));
  write_config(config, out_dir / "config.cfg");
  return summary;
}

TrainSummary run_train(ExperimentConfig config, const fs::path& out_dir, std::ostream& log) {
  RawSeries raw = load_source(config);
  resolve_dimensions(config, raw);
  const PreparedData data = prepare_data(config, std::move(raw));
  log << "training on " << shape_of(data.raw) << ", " << data.train.size() << " train / "
      << data.val.size() << " val windows\n";
  TrainSummary s = train_prepared(config, data, out_dir);
  log << "epochs run: " << s.history.size() << (s.stopped_early ? " (early stop)" : "")
      << ", best epoch " << s.best_epoch << "\n"
      << "parameters: " << s.trainable_parameters << " trainable, " << s.frozen_parameters
      << " frozen\n";
  log_report(log, "best validation", s.val_report);
  log << "wrote " << (out_dir / "checkpoint.rpck").string() << '\n';
  return s;
}

EvaluationSummary run_evaluate(const fs::path& checkpoint, const std::optional<std::string>& dataset,
                               Split split, const fs::path& out_dir, std::ostream& log) {
  LoadedRun loaded = load_run(checkpoint, dataset);
  const ExperimentConfig& config = loaded.run.config;
  EvaluationSummary summary;
  summary.variant = "rpmixer";
  summary.split = split;
  summary.report = evaluate_forecaster(loaded.run.model, loaded.data.split(split),
                                       &loaded.data.scaler, config.mask_zero, kEvalBatch);
  summary.parameters = loaded.run.model.trainable_parameter_count();
  log_report(log, to_string(split) + " average", summary.report);
  return write_evaluation(std::move(summary), out_dir);
}

BaselineKind parse_baseline(const std::string& name) {
  if (name == "hl") return BaselineKind::hl;
  if (name == "linear") return BaselineKind::linear;
  if (name == "1nn") return BaselineKind::nearest_neighbor;
  throw InputError("unknown baseline '" + name + "' (expected hl, linear or 1nn)");
}

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::hl: return "hl";
    case BaselineKind::linear: return "linear";
    case BaselineKind::nearest_neighbor: return "1nn";
  }
  return "hl";
}

EvaluationSummary run_baseline(const ExperimentConfig& config_in, BaselineKind kind, Split split,
                               const fs::path& out_dir, std::ostream& log) {
  ExperimentConfig config = config_in;
  RawSeries raw = load_source(config);
  resolve_dimensions(config, raw);
  const PreparedData data = prepare_data(config, std::move(raw));
  const WindowedDataset& target = data.split(split);

  EvaluationSummary summary;
  summary.variant = to_string(kind);
  summary.split = split;
  switch (kind) {
    case BaselineKind::hl: {
      HistoricalLastForecaster<float> model(config.t_past, config.t_future);
      summary.report =
          evaluate_forecaster(model, target, &data.scaler, config.mask_zero, kEvalBatch);
      summary.parameters = 0;
      break;
    }
    case BaselineKind::linear: {
      LinearForecaster<float> model(data.train.input_length(), config.t_future, config.seed);
      const FitResult<float> result =
          fit(model, data.train, data.val, config.fit_options(), &data.scaler);
      write_text(out_dir / "history.csv", history_csv(result.history));
      summary.report =
          evaluate_forecaster(model, target, &data.scaler, config.mask_zero, kEvalBatch);
      summary.parameters = model.trainable_parameter_count();
      log << "linear baseline: " << *summary.parameters << " parameters, best epoch "
          << result.best_epoch << '\n';
      break;
    }
    case BaselineKind::nearest_neighbor: {
      NearestNeighborForecaster<float> model(data.train.series(), config.t_past,
                                             config.t_future);
      summary.report =
          evaluate_forecaster(model, target, &data.scaler, config.mask_zero, kEvalBatch);
      summary.parameters = 0;
      break;
    }
  }
  write_config(config, out_dir / "config.cfg");
  log_report(log, summary.variant + " " + to_string(split) + " average", summary.report);
  return write_evaluation(std::move(summary), out_dir);
}

std::vector<AblationVariant> ablation_variants() {
  return {
      {"full", {true, true, true}},
      {"post-activation", {false, true, true}},
      {"no-random-projection", {true, false, true}},
      {"no-frequency-domain", {true, true, false}},
  };
}

AblationSummary run_ablate(const ExperimentConfig& config_in, const fs::path& out_dir,
                           std::ostream& log) {
  ExperimentConfig config = config_in;
  RawSeries raw = load_source(config);
  resolve_dimensions(config, raw);
  const PreparedData data = prepare_data(config, std::move(raw));

  AblationSummary summary;
  std::vector<MetricsRow> rows;
  std::vector<TableEntry> table;
  for (const auto& variant : ablation_variants()) {
    ExperimentConfig vc = config;
    vc.set_flags(variant.flags);
    const TrainSummary run = train_prepared(vc, data, out_dir / variant.name);
    const RestoredRun restored = restore_run(load_checkpoint(out_dir / variant.name / "checkpoint.rpck"));
    const MetricReport report =
        evaluate_forecaster(restored.model, data.test, &data.scaler, vc.mask_zero, kEvalBatch);
    log_report(log, variant.name + " test average", report);
    for (auto& row : per_step_rows(variant.name, report)) rows.push_back(std::move(row));
    table.push_back({variant.name, report, run.trainable_parameters});
    summary.variants.push_back(variant.name);
    summary.runs.push_back(run);
    summary.test_reports.push_back(report);
  }
  write_text(out_dir / "metrics.csv", metrics_csv(rows));
  write_text(out_dir / "summary.md", horizon_table(table));
  write_config(config, out_dir / "config.cfg");
  return summary;
}

DiagnoseSummary run_diagnose(const fs::path& checkpoint, const std::optional<std::string>& dataset,
                             Split split, const fs::path& out_dir, std::ostream& log) {
  LoadedRun loaded = load_run(checkpoint, dataset);
  const ExperimentConfig& config = loaded.run.config;
  const RPMixerModel<float>& model = loaded.run.model;
  if (!config.pre_activation) {
    throw InputError(
        "diagnose needs a pre-activation checkpoint: with post-activation blocks the ReLU after "
        "each residual sum means no block reduces to identity plus a residual branch, so the "
        "output does not split into Y0 plus one additive contribution per block");
  }
  if (config.n_block < 2) {
    throw InputError("diagnose needs at least 2 blocks to form learner pairs, checkpoint has " +
                     std::to_string(config.n_block));
  }
  const WindowedDataset& data = loaded.data.split(split);

  DiagnoseSummary s;
  s.diagram = correlation_error_diagram(model, data, &loaded.data.scaler, config.mask_zero,
                                        kEvalBatch);
  s.decomposition_residual = decomposition_residual(model, data, kEvalBatch);

  // Node vectors (one per window, at the latest input step) through block 1's projection.
  const std::size_t n = config.nodes;
  const std::size_t k = std::min(kJLVectors, data.size());
  if (k < 2) throw InputError("diagnose: the " + to_string(split) + " split has fewer than 2 windows");
  TensorD vectors({k, n});
  for (std::size_t v = 0; v < k; ++v) {
    const Tensor past = data.past(v * (data.size() - 1) / (k - 1));
    for (std::size_t node = 0; node < n; ++node)
      vectors.at(v, node) = past.at(node, config.t_past - 1);
  }
  const auto& proj = model.blocks().front().projection();
  const Tensor& weight = std::holds_alternative<RandomProjectionLayer<float>>(proj)
                             ? std::get<RandomProjectionLayer<float>>(proj).weight()
                             : std::get<LinearLayer<float>>(proj).weight();
  s.jl = jl_report(vectors, weight.cast<double>());

  write_text(out_dir / "corr_error.csv", corr_error_csv(s.diagram));
  write_text(out_dir / "jl.csv", jl_csv(s.jl));
  const bool ok = s.decomposition_residual < kDecompositionTolerance;
  std::string report;
  report += "split = " + to_string(split) + "\n";
  report += "windows = " + std::to_string(data.size()) + "\n";
  report += "blocks = " + std::to_string(config.n_block) + "\n";
  char residual[32], tolerance[32];
  std::snprintf(residual, sizeof residual, "%.6e", s.decomposition_residual);
  std::snprintf(tolerance, sizeof tolerance, "%.0e", kDecompositionTolerance);
  report += std::string("max_relative_residual = ") + residual + "\n";
  report += std::string("tolerance = ") + tolerance + "\n";
  report += std::string("status = ") + (ok ? "PASS" : "FAIL") + "\n";
  report += "pairs = " + std::to_string(s.diagram.points.size()) + "\n";
  report += "undefined_correlations = " + std::to_string(s.diagram.undefined_count()) + "\n";
  report += "learner_mae_range = " + format_metric(s.diagram.mae_range()) + "\n";
  report += "jl_median_distortion = " + format_metric(s.jl.median) + "\n";
  report += "jl_iqr = " + format_metric(s.jl.iqr()) + "\n";
  write_text(out_dir / "decomposition.txt", report);
  write_config(config, out_dir / "config.cfg");

  log << "decomposition residual " << residual << " relative: " << (ok ? "PASS" : "FAIL") << '\n';
  log << s.diagram.points.size() << " learner pairs, learner MAE range "
      << format_metric(s.diagram.mae_range()) << '\n';
  log << "JL median distortion " << format_metric(s.jl.median) << ", IQR "
      << format_metric(s.jl.iqr()) << '\n';
  return s;
}

}  // namespace rpmixer
