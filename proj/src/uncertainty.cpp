#include "poakit/uncertainty.hpp"

namespace poakit {

UncertaintyTensor uncertainty_tensor(std::span<const EnsembleForecast> forecasts) {
  UncertaintyTensor tensor;
  tensor.origins.reserve(forecasts.size());
  tensor.values.reserve(forecasts.size());
  for (const auto& f : forecasts) {
    f.validate();
    if (!tensor.values.empty()) {
      require(f.horizon() == tensor.horizon() && f.variables() == tensor.variables(),
              "forecast windows have inconsistent shapes");
    }
    tensor.origins.push_back(f.origin);
    tensor.values.push_back(ensemble_variance(f));
  }
  return tensor;
}

UncertaintyTensor normalize(UncertaintyTensor tensor, const HorizonStats& stats, double eps_sigma) {
  require(eps_sigma > 0.0, "eps_sigma must be positive");
  std::vector<Matrix> norm;
  norm.reserve(tensor.values.size());
  for (const auto& raw : tensor.values) norm.push_back(normalize_window<double>(raw, stats, eps_sigma));
  tensor.normalized = std::move(norm);
  return tensor;
}

VariableAggregation parse_aggregation(std::string_view text) {
  if (text == "mean") return VariableAggregation::mean;
  if (text == "max") return VariableAggregation::max;
  fail(ErrorCode::validation, "unknown aggregation '" + std::string(text) + "' (expected mean or max)");
}

Vector aggregate_variables(const Matrix& scores, VariableAggregation mode) {
  require(scores.cols() >= 1, "cannot aggregate zero variables");
  return mode == VariableAggregation::mean ? Vector(scores.rowwise().mean()) : Vector(scores.rowwise().maxCoeff());
}

CollateMode parse_collate(std::string_view text) {
  if (text == "max") return CollateMode::max;
  if (text == "latest") return CollateMode::latest;
  if (text == "earliest") return CollateMode::earliest;
  fail(ErrorCode::validation, "unknown collation '" + std::string(text) + "' (expected max, latest or earliest)");
}

ScoreSeries collate_timeline(const Matrix& per_window_scores, std::span<const Index> origins, Index series_len,
                             CollateMode mode) {
  require(per_window_scores.rows() == static_cast<Index>(origins.size()), "one origin per window is required");
  require(series_len >= 0, "series length must be non-negative");
  ScoreSeries out;
  out.scores.assign(static_cast<std::size_t>(series_len), std::nullopt);
  out.lead_times.assign(static_cast<std::size_t>(series_len), std::nullopt);
  const Index horizon = per_window_scores.cols();
  for (Index w = 0; w < per_window_scores.rows(); ++w) {
    for (Index i = 1; i <= horizon; ++i) {
      const Index tau = origins[w] + i;
      if (tau < 0 || tau >= series_len) continue;
      const double s = per_window_scores(w, i - 1);
      auto& cur = out.scores[tau];
      auto& lead = out.lead_times[tau];
      bool take = !cur;
      if (!take) {
        switch (mode) {
          // ties keep the shorter lead so the result is order independent
          case CollateMode::max: take = s > *cur || (s == *cur && i < *lead); break;
          case CollateMode::latest: take = i < *lead; break;
          case CollateMode::earliest: take = i > *lead; break;
        }
      }
      if (take) {
        cur = s;
        lead = i;
      }
    }
  }
  return out;
}

ScoreSeries score_forecasts(std::span<const EnsembleForecast> validation, std::span<const EnsembleForecast> test,
                            Index series_len, const ScoreOptions& options) {
  UncertaintyTensor test_tensor = uncertainty_tensor(test);
  const std::vector<Matrix>* source = &test_tensor.values;
  if (options.normalize) {
    const UncertaintyTensor valid_tensor = uncertainty_tensor(validation);
    const HorizonStats stats = horizon_stats(valid_tensor);
    test_tensor = normalize(std::move(test_tensor), stats, options.eps_sigma);
    source = &*test_tensor.normalized;
  }
  Matrix per_window(test_tensor.windows(), test_tensor.horizon());
  for (Index w = 0; w < test_tensor.windows(); ++w) {
    per_window.row(w) = aggregate_variables((*source)[w], options.aggregation).transpose();
  }
  return collate_timeline(per_window, test_tensor.origins, series_len, options.collate);
}

}  // namespace poakit
