#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rpmixer/checkpoint.hpp"
#include "rpmixer/config.hpp"
#include "rpmixer/diagnostics.hpp"
#include "rpmixer/metrics.hpp"
#include "rpmixer/training.hpp"

namespace rpmixer {

enum class Split { train, val, test };

Split parse_split(const std::string& name);
std::string to_string(Split split);

/// The series a config points at, aggregated if requested. A configured
/// dataset path that does not exist raises InputError naming it.
RawSeries load_source(const ExperimentConfig& config);

/// Standardized windows for all three splits.
struct PreparedData {
  RawSeries raw;
  Standardizer scaler;  // identity when standardize = false
  WindowedDataset train;
  WindowedDataset val;
  WindowedDataset test;

  const WindowedDataset& split(Split which) const;
};

/// Splits `raw` chronologically, fits the standardizer on the training part
/// (or uses `scaler` when given) and windows every split.
PreparedData prepare_data(const ExperimentConfig& config, RawSeries raw,
                          const Standardizer* scaler = nullptr);

/// Fills config.nodes/features from the data, or checks them against it.
void resolve_dimensions(ExperimentConfig& config, const RawSeries& raw);

/// Mean over nodes of the feature-0 autocorrelation at `lag`.
double periodicity_score(const RawSeries& raw, std::size_t lag);

struct GenerateSummary {
  std::size_t nodes = 0;
  std::size_t steps = 0;
  std::size_t steps_per_day = 0;
  double daily_autocorrelation = 0.0;
};

/// Writes the synthetic dataset to `out_path` and the resolved config beside
/// it (`<out_path>.cfg`), pointed at the new file so it can drive `train`.
GenerateSummary run_generate(const ExperimentConfig& config, const std::filesystem::path& out_path,
                             std::ostream& log);

struct TrainSummary {
  ExperimentConfig config;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_mae = 0.0;
  bool stopped_early = false;
  MetricReport val_report;
  std::size_t trainable_parameters = 0;
  std::size_t frozen_parameters = 0;
};

/// Trains on an already prepared dataset and writes checkpoint.rpck,
/// history.csv and config.cfg into `out_dir`.
TrainSummary train_prepared(ExperimentConfig config, const PreparedData& data,
                            const std::filesystem::path& out_dir);
TrainSummary run_train(ExperimentConfig config, const std::filesystem::path& out_dir,
                       std::ostream& log);

struct EvaluationSummary {
  std::string variant;
  Split split = Split::test;
  MetricReport report;
  std::optional<std::size_t> parameters;
};

/// Evaluates a checkpoint on `split`, optionally against another dataset.
/// Writes metrics.csv and table.md.
EvaluationSummary run_evaluate(const std::filesystem::path& checkpoint,
                               const std::optional<std::string>& dataset, Split split,
                               const std::filesystem::path& out_dir, std::ostream& log);

enum class BaselineKind { hl, linear, nearest_neighbor };

BaselineKind parse_baseline(const std::string& name);
std::string to_string(BaselineKind kind);

/// Runs a baseline on `split`; only `linear` trains (with the config's
/// optimizer settings). Writes metrics.csv, table.md and config.cfg.
EvaluationSummary run_baseline(const ExperimentConfig& config, BaselineKind kind, Split split,
                               const std::filesystem::path& out_dir, std::ostream& log);

struct AblationVariant {
  std::string name;
  AblationFlags flags;
};

/// full, post-activation, no-random-projection, no-frequency-domain.
std::vector<AblationVariant> ablation_variants();

struct AblationSummary {
  std::vector<std::string> variants;
  std::vector<TrainSummary> runs;
  std::vector<MetricReport> test_reports;
};

/// Trains every variant on the same data and seed. Each variant gets its own
/// subdirectory; the combined per-step metrics.csv and summary.md go in `out_dir`.
AblationSummary run_ablate(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                           std::ostream& log);

struct DiagnoseSummary {
  CorrelationErrorDiagram diagram;
  JLReport jl;
  double decomposition_residual = 0.0;
};

/// Correlation-error diagram, JL distortion of block 1's projection on the
/// split's node vectors, and the decomposition residual. Writes
/// corr_error.csv, jl.csv and decomposition.txt. A post-activation checkpoint
/// raises InputError explaining why no decomposition exists.
DiagnoseSummary run_diagnose(const std::filesystem::path& checkpoint,
                             const std::optional<std::string>& dataset, Split split,
                             const std::filesystem::path& out_dir, std::ostream& log);

/// Relative decomposition residual accepted by diagnose.
inline constexpr double kDecompositionTolerance = 1e-4;

}  // namespace rpmixer
