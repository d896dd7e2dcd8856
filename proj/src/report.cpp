#include "rpmixer/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rpmixer {

namespace {

std::string format_g(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

}  // namespace

std::string format_metric(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

std::vector<MetricsRow> summary_rows(const std::string& variant, const MetricReport& report) {
  std::vector<MetricsRow> rows;
  for (std::size_t h : report.reporting_horizons())
    rows.push_back({variant, std::to_string(h), report.at_horizon(h)});
  rows.push_back({variant, "avg", report.average});
  return rows;
}

std::vector<MetricsRow> per_step_rows(const std::string& variant, const MetricReport& report) {
  std::vector<MetricsRow> rows;
  for (std::size_t h = 1; h <= report.steps(); ++h)
    rows.push_back({variant, std::to_string(h), report.at_horizon(h)});
  return rows;
}

std::string horizon_table(const std::vector<TableEntry>& entries) {
  std::ostringstream os;
  os << "| Variant | Params |";
  for (const char* h : {"H3", "H6", "H12", "Avg"})
    os << ' ' << h << " MAE | " << h << " RMSE | " << h << " MAPE |";
  os << "\n|---|---:|";
  for (int c = 0; c < 12; ++c) os << "---:|";
  os << '\n';
  for (const auto& e : entries) {
    os << "| " << e.variant << " | " << (e.parameters ? std::to_string(*e.parameters) : "-")
       << " |";
    auto cells = [&](const Metrics* m) {
      if (!m) {
        os << " - | - | - |";
        return;
      }
      os << ' ' << format_metric(m->mae) << " | " << format_metric(m->rmse) << " | "
         << format_metric(m->mape_pct) << "% |";
    };
    for (std::size_t h : {3u, 6u, 12u})
      cells(h <= e.report.steps() ? &e.report.at_horizon(h) : nullptr);
    cells(&e.report.average);
    os << '\n';
  }
  return os.str();
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream os;
  os << "variant,horizon,mae,rmse,mape_pct\n";
  for (const auto& r : rows)
    os << r.variant << ',' << r.horizon << ',' << format_metric(r.metrics.mae) << ','
       << format_metric(r.metrics.rmse) << ',' << format_metric(r.metrics.mape_pct) << '\n';
  return os.str();
}

std::string corr_error_csv(const CorrelationErrorDiagram& diagram) {
  std::ostringstream os;
  os << "i,j,pearson,mae_pair,rmse_pair,mape_pair\n";
  for (const auto& p : diagram.points)
    os << p.i << ',' << p.j << ',' << (p.pearson ? format_metric(*p.pearson) : "nan") << ','
       << format_metric(p.mae_pair) << ',' << format_metric(p.rmse_pair) << ','
       << format_metric(p.mape_pair) << '\n';
  return os.str();
}

std::string jl_csv(const JLReport& report) {
  std::ostringstream os;
  os << "pair_id,distortion\n";
  for (std::size_t k = 0; k < report.distortions.size(); ++k)
    os << k << ',' << format_metric(report.distortions[k]) << '\n';
  return os.str();
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  os << "epoch,train_loss,val_mae,lr,seconds\n";
  for (const auto& r : history)
    os << r.epoch << ',' << format_g(r.train_loss) << ',' << format_g(r.val_mae) << ','
       << format_g(r.lr) << ',' << format_g(r.seconds) << '\n';
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace rpmixer
