#pragma once

#include "poakit/detect.hpp"
#include "poakit/forecast.hpp"
#include "poakit/metrics.hpp"
#include "poakit/uncertainty.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace poakit {

struct ForecastStageOptions {
  WindowConfig window;
  std::vector<ForecasterSpec> members = default_member_pool();
  Index top_k = 5;
  SelectionCriterion criterion = SelectionCriterion::mse;
  unsigned jobs = 1;
};

struct ForecastStageResult {
  std::vector<ForecastScore> scoreboard;
  std::vector<std::string> selected;
  /// Selected members only.
  std::vector<EnsembleForecast> validation;
  std::vector<EnsembleForecast> test;
  /// "member: variable v fell back to persistence" lines.
  std::vector<std::string> fit_report;
};

/// Fits every member on train, scores them on validation windows, keeps the
/// top-k and forecasts validation and test windows with them.
ForecastStageResult run_forecast_stage(const TimeSeries& train, const TimeSeries& valid, const TimeSeries& test,
                                       const ForecastStageOptions& options);

/// The F1 that drives threshold search.
struct ThresholdMetric {
  enum class Kind { ptapr_f1, ptapr_auc, point_f1 } kind = Kind::ptapr_f1;
  double theta = 0.0;

  /// "ptapr-f1@<theta>", "ptapr-auc" or "point-f1".
  static ThresholdMetric parse(std::string_view text);
  std::string to_string() const;
};

F1Callback make_threshold_callback(const ThresholdMetric& metric, const LabelSequence& labels,
                                   const MetricParams& params);

struct EvaluateOptions {
  MetricParams params;
  std::vector<double> thetas = default_theta_grid();
  bool tapr = true;
  bool pak = true;
  std::vector<double> k_grid = default_k_grid();
};

MetricReport evaluate_detection(const Detection& detection, const LabelSequence& labels, const EvaluateOptions& options);

/// Every stage with default settings, in memory.
struct PipelineOptions {
  ForecastStageOptions forecast;
  double train_frac = 0.7;
  ScoreOptions score;
  ThresholdMetric threshold_metric;
  std::size_t grid_n = 256;
  EvaluateOptions evaluate;
};

struct PipelineResult {
  ForecastStageResult forecast;
  ScoreSeries scores;
  ThresholdChoice threshold;
  Detection detection;
  MetricReport report;
};

PipelineResult run_pipeline(const TimeSeries& train_full, const TimeSeries& test, const LabelSequence& labels,
                            const PipelineOptions& options);

/// Which metric parameter a sensitivity sweep varies.
enum class SweepParam { k, epsilon };

struct SweepPoint {
  double value = 0.0;
  double threshold = 0.0;
  double f1_at_0 = 0.0;
  double f1_at_1 = 0.0;
  double auc = 0.0;
};

/// Re-selects the threshold and re-evaluates for each parameter value.
std::vector<SweepPoint> sensitivity_sweep(const ScoreSeries& scores, const LabelSequence& labels, SweepParam param,
                                          std::span<const double> values, const ThresholdMetric& metric,
                                          const EvaluateOptions& options, std::size_t grid_n, unsigned jobs = 1);

/// Reproducibility record: free-form config, seed, tool version and file hashes.
std::string run_manifest_json(const std::string& command, const std::string& config_json, std::uint64_t seed,
                              const std::vector<std::filesystem::path>& files);

inline constexpr const char* kVersion = "0.1.0";

}  // namespace poakit
