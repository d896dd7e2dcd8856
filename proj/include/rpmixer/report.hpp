#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rpmixer/diagnostics.hpp"
#include "rpmixer/metrics.hpp"
#include "rpmixer/training.hpp"

namespace rpmixer {

/// One metrics.csv line; `horizon` is a 1-based step number or "avg".
struct MetricsRow {
  std::string variant;
  std::string horizon;
  Metrics metrics;
};

/// Horizons 3, 6, 12 (those that exist) followed by the average.
std::vector<MetricsRow> summary_rows(const std::string& variant, const MetricReport& report);
/// Every step 1..H, no average row.
std::vector<MetricsRow> per_step_rows(const std::string& variant, const MetricReport& report);

struct TableEntry {
  std::string variant;
  MetricReport report;
  std::optional<std::size_t> parameters;
};

/// Markdown table in the column order Horizon 3 / 6 / 12 / Average, each with
/// MAE, RMSE and MAPE, followed by the parameter count.
std::string horizon_table(const std::vector<TableEntry>& entries);

/// Fixed six-decimal rendering used in every report file.
std::string format_metric(double value);

std::string metrics_csv(const std::vector<MetricsRow>& rows);
std::string corr_error_csv(const CorrelationErrorDiagram& diagram);
std::string jl_csv(const JLReport& report);
std::string history_csv(const std::vector<EpochRecord>& history);

/// Writes `text` to `path`, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace rpmixer
