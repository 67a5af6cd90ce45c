#include "poakit/pipeline.hpp"

#include "poakit/io.hpp"

#include <nlohmann/json.hpp>

#include <charconv>

namespace poakit {

ForecastStageResult run_forecast_stage(const TimeSeries& train, const TimeSeries& valid, const TimeSeries& test,
                                       const ForecastStageOptions& options) {
  options.window.validate();
  require(train.variables() == valid.variables() && train.variables() == test.variables(),
          "train, validation and test series have different variable counts");
  require(options.members.size() >= 2, "need at least two ensemble members");

  std::vector<FittedForecaster> models;
  ForecastStageResult out;
  for (const auto& spec : options.members) {
    models.push_back(fit(spec, train));
    for (Index v : models.back().fallback_variables()) {
      out.fit_report.push_back(spec.id() + ": variable " + std::to_string(v) + " fell back to persistence");
    }
  }

  const auto valid_windows = make_windows(valid, options.window, true);
  const auto all_valid = run_ensemble(models, valid_windows, options.window.horizon_len, options.jobs);
  std::vector<Matrix> targets;
  targets.reserve(valid_windows.size());
  for (const auto& w : valid_windows) targets.push_back(*w.target);
  out.scoreboard = evaluate_members(all_valid, targets);
  out.selected = select_top_k(out.scoreboard, options.top_k, options.criterion);
  out.validation = restrict_members(all_valid, out.selected);

  std::vector<FittedForecaster> chosen;
  for (const auto& id : out.selected) {
    for (const auto& m : models)
      if (m.id() == id) chosen.push_back(m);
  }
  const auto test_windows = make_windows(test, options.window, false);
  out.test = run_ensemble(chosen, test_windows, options.window.horizon_len, options.jobs);
  return out;
}

ThresholdMetric ThresholdMetric::parse(std::string_view text) {
  ThresholdMetric m;
  if (text == "ptapr-auc") {
    m.kind = Kind::ptapr_auc;
  } else if (text == "point-f1") {
    m.kind = Kind::point_f1;
  } else if (text.starts_with("ptapr-f1")) {
    m.kind = Kind::ptapr_f1;
    text.remove_prefix(8);
    if (!text.empty()) {
      if (text.front() != '@') fail(ErrorCode::validation, "expected ptapr-f1@<theta>");
      text.remove_prefix(1);
      auto res = std::from_chars(text.data(), text.data() + text.size(), m.theta);
      if (res.ec != std::errc() || res.ptr != text.data() + text.size() || m.theta < 0.0 || m.theta > 1.0) {
        fail(ErrorCode::validation, "theta in ptapr-f1@<theta> must be a number in [0, 1]");
      }
    }
  } else {
    fail(ErrorCode::validation, "unknown threshold metric '" + std::string(text) +
                                    "' (expected ptapr-f1@<theta>, ptapr-auc or point-f1)");
  }
  return m;
}

std::string ThresholdMetric::to_string() const {
  switch (kind) {
    case Kind::ptapr_auc: return "ptapr-auc";
    case Kind::point_f1: return "point-f1";
    case Kind::ptapr_f1: return "ptapr-f1@" + format_float(theta);
  }
  return "";
}

F1Callback make_threshold_callback(const ThresholdMetric& metric, const LabelSequence& labels,
                                   const MetricParams& params) {
  params.validate();
  auto anomalies = segments_from_flags(labels.flags());
  return [metric, labels, params, anomalies](const Detection& d) -> std::optional<double> {
    require(d.length() == labels.length(), "detection and label timelines differ in length");
    if (anomalies.empty()) return std::nullopt;
    if (metric.kind == ThresholdMetric::Kind::point_f1) return pointwise_prf(d.flags, labels.flags()).f1;
    const SegmentSet segs = split_precursor_prediction(d.flags, anomalies, params.delta);
    if (metric.kind == ThresholdMetric::Kind::ptapr_auc) {
      return ptapr_theta_sweep(segs, params, default_theta_grid()).auc;
    }
    MetricParams p = params;
    p.theta = metric.theta;
    return evaluate_ptapr(segs, p).f1;
  };
}

MetricReport evaluate_detection(const Detection& detection, const LabelSequence& labels, const EvaluateOptions& options) {
  require(detection.length() == labels.length(), "detection and label timelines differ in length");
  const auto anomalies = segments_from_flags(labels.flags());
  const SegmentSet segs = split_precursor_prediction(detection.flags, anomalies, options.params.delta);
  return build_report(segs, detection.flags, labels.flags(), options.params, options.thetas, options.tapr,
                      options.pak, options.k_grid);
}

PipelineResult run_pipeline(const TimeSeries& train_full, const TimeSeries& test, const LabelSequence& labels,
                            const PipelineOptions& options) {
  require(labels.length() == test.length(), "labels and test series differ in length");
  const auto [train, valid] = chronological_split(train_full, options.train_frac);
  PipelineResult out;
  out.forecast = run_forecast_stage(train, valid, test, options.forecast);
  out.scores = score_forecasts(out.forecast.validation, out.forecast.test, test.length(), options.score);
  const auto grid = default_grid(out.scores, options.grid_n);
  out.threshold = best_f1_threshold(out.scores, grid,
                                    make_threshold_callback(options.threshold_metric, labels, options.evaluate.params),
                                    options.forecast.jobs);
  out.detection = apply_threshold(out.scores, out.threshold.threshold);
  out.report = evaluate_detection(out.detection, labels, options.evaluate);
  return out;
}

std::vector<SweepPoint> sensitivity_sweep(const ScoreSeries& scores, const LabelSequence& labels, SweepParam param,
                                          std::span<const double> values, const ThresholdMetric& metric,
                                          const EvaluateOptions& options, std::size_t grid_n, unsigned jobs) {
  require(!values.empty(), "sweep needs at least one value");
  const auto grid = default_grid(scores, grid_n);
  std::vector<SweepPoint> out;
  for (double v : values) {
    EvaluateOptions opt = options;
    if (param == SweepParam::k) {
      opt.params.k = v;
    } else {
      require(v == std::floor(v), "epsilon values must be integers");
      opt.params.epsilon = static_cast<Index>(v);
    }
    opt.tapr = false;
    opt.pak = false;
    const auto choice = best_f1_threshold(scores, grid, make_threshold_callback(metric, labels, opt.params), jobs);
    const auto report = evaluate_detection(apply_threshold(scores, choice.threshold), labels, opt);
    out.push_back({v, choice.threshold, report.sweep.f1_at_0, report.sweep.f1_at_1, report.sweep.auc});
  }
  return out;
}

std::string run_manifest_json(const std::string& command, const std::string& config_json, std::uint64_t seed,
                              const std::vector<std::filesystem::path>& files) {
  nlohmann::json hashes = nlohmann::json::object();
  for (const auto& f : files) hashes[f.filename().string()] = sha256_file(f);
  nlohmann::json config = config_json.empty() ? nlohmann::json::object() : nlohmann::json::parse(config_json);
  nlohmann::json doc = {{"tool", "poakit"},  {"version", kVersion}, {"command", command},
                        {"seed", seed},      {"config", config},    {"files", hashes}};
  return doc.dump(2) + "\n";
}

}  // namespace poakit
