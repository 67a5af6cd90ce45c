#pragma once

#include "poakit/core.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace poakit {

struct WindowConfig {
  Index input_len = 100;
  Index horizon_len = 24;
  Index stride = 1;

  void validate() const;
};

struct WindowPair {
  Index window_id = 0;
  /// Index of the last input row.
  Index origin = 0;
  Matrix input;
  std::optional<Matrix> target;
};

/// Number of windows make_windows would produce; 0 when the series is too short.
Index window_count(Index series_len, const WindowConfig& cfg, bool with_targets);

std::vector<WindowPair> make_windows(const TimeSeries& series, const WindowConfig& cfg, bool with_targets);

enum class ForecasterKind { persistence, seasonal_naive, moving_average, ar_ols, exp_smoothing, holt_linear };

struct ForecasterSpec {
  ForecasterKind kind = ForecasterKind::persistence;
  /// period, width or order depending on kind.
  Index param = 1;
  double alpha = 0.5;
  double beta = 0.1;

  static ForecasterSpec persistence();
  static ForecasterSpec seasonal_naive(Index period);
  static ForecasterSpec moving_average(Index width);
  static ForecasterSpec ar_ols(Index order);
  static ForecasterSpec exp_smoothing(double alpha);
  static ForecasterSpec holt_linear(double alpha, double beta);

  /// Parses the id syntax, e.g. "ar_ols(3)" or "holt_linear(0.5,0.1)".
  static ForecasterSpec parse(std::string_view text);

  /// Canonical member id; round-trips through parse().
  std::string id() const;
  /// Rows of input the model needs to produce a forecast.
  Index min_context() const;
  void validate() const;
};

/// Splits "a,b(1,2),c" on top-level commas.
std::vector<ForecasterSpec> parse_member_list(std::string_view text);

/// The twelve-member pool used when no explicit list is given.
std::vector<ForecasterSpec> default_member_pool();

class FittedForecaster {
 public:
  const ForecasterSpec& spec() const { return spec_; }
  std::string id() const { return spec_.id(); }

  /// AR intercept followed by lag coefficients (lag 1 first), per variable.
  const std::vector<Vector>& ar_coefficients() const { return ar_coef_; }
  /// Variables whose least-squares fit was singular and now forecast by persistence.
  const std::vector<Index>& fallback_variables() const { return fallback_; }

  Matrix predict(const Matrix& input, Index horizon) const;

 private:
  friend FittedForecaster fit(const ForecasterSpec& spec, const TimeSeries& train);

  ForecasterSpec spec_;
  std::vector<Vector> ar_coef_;
  std::vector<Index> fallback_;
};

FittedForecaster fit(const ForecasterSpec& spec, const TimeSeries& train);

inline Matrix predict(const FittedForecaster& model, const Matrix& input, Index horizon) {
  return model.predict(input, horizon);
}

/// Member predictions for one window.
struct EnsembleForecast {
  Index window_id = 0;
  Index origin = 0;
  std::vector<std::string> member_ids;
  /// One horizon x variables matrix per member.
  std::vector<Matrix> predictions;

  Index members() const { return static_cast<Index>(predictions.size()); }
  Index horizon() const { return predictions.empty() ? 0 : predictions.front().rows(); }
  Index variables() const { return predictions.empty() ? 0 : predictions.front().cols(); }
  void validate() const;
};

/// Runs every model on every window. Output is ordered by window id, then by
/// model order, independent of jobs.
std::vector<EnsembleForecast> run_ensemble(std::span<const FittedForecaster> models, std::span<const WindowPair> windows,
                                           Index horizon, unsigned jobs = 1);

struct ForecastScore {
  std::string member_id;
  double mse = 0.0;
  double mae = 0.0;
};

/// MSE/MAE per member over every (window, step, variable) cell.
std::vector<ForecastScore> evaluate_members(std::span<const EnsembleForecast> forecasts, std::span<const Matrix> targets);

enum class SelectionCriterion { mse, mae };
SelectionCriterion parse_criterion(std::string_view text);

std::vector<std::string> select_top_k(std::span<const ForecastScore> scores, Index k, SelectionCriterion criterion);

/// Keeps only the listed members in each forecast, in the listed order.
std::vector<EnsembleForecast> restrict_members(std::span<const EnsembleForecast> forecasts,
                                               std::span<const std::string> member_ids);

/// Forecast record files: CSV (header required) or NDJSON, picked by extension.
void write_forecasts(const std::filesystem::path& path, std::span<const EnsembleForecast> forecasts);
std::vector<EnsembleForecast> ingest_external_forecasts(const std::filesystem::path& path);

}  // namespace poakit
