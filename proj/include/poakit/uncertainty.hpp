#pragma once

#include "poakit/core.hpp"
#include "poakit/forecast.hpp"

#include <cmath>
#include <span>
#include <string_view>
#include <vector>

namespace poakit {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Sample variance across ensemble members, per (horizon step, variable),
/// with the 1/(M-1) divisor. Two-pass: mean first, then squared deviations.
template <typename Scalar>
Mat<Scalar> ensemble_variance(std::span<const Mat<Scalar>> members) {
  const auto M = static_cast<Index>(members.size());
  if (M < 2) fail(ErrorCode::validation, "ensemble too small for variance (need at least 2 members)");
  const Index rows = members.front().rows();
  const Index cols = members.front().cols();
  Mat<Scalar> mean = Mat<Scalar>::Zero(rows, cols);
  for (const auto& m : members) {
    require(m.rows() == rows && m.cols() == cols, "ensemble members have mismatched shapes");
    mean += m;
  }
  mean /= static_cast<Scalar>(M);
  Mat<Scalar> acc = Mat<Scalar>::Zero(rows, cols);
  for (const auto& m : members) acc += (m - mean).cwiseAbs2();
  return acc / static_cast<Scalar>(M - 1);
}

inline Matrix ensemble_variance(const EnsembleForecast& forecast) {
  return ensemble_variance<double>(std::span<const Matrix>(forecast.predictions));
}

/// Raw per-window variances (W x horizon x variables) and, once computed,
/// their normalized counterpart.
struct UncertaintyTensor {
  std::vector<Index> origins;
  std::vector<Matrix> values;
  std::optional<std::vector<Matrix>> normalized;

  Index windows() const { return static_cast<Index>(values.size()); }
  Index horizon() const { return values.empty() ? 0 : values.front().rows(); }
  Index variables() const { return values.empty() ? 0 : values.front().cols(); }
};

UncertaintyTensor uncertainty_tensor(std::span<const EnsembleForecast> forecasts);

/// Per-step mean and population standard deviation across windows.
template <typename Scalar>
struct HorizonStatsT {
  Mat<Scalar> mu;
  Mat<Scalar> sigma;
  Index n_windows = 0;
};
using HorizonStats = HorizonStatsT<double>;

template <typename Scalar>
HorizonStatsT<Scalar> horizon_stats(std::span<const Mat<Scalar>> windows) {
  const auto N = static_cast<Index>(windows.size());
  if (N < 2) fail(ErrorCode::validation, "horizon statistics need at least 2 windows");
  const Index rows = windows.front().rows();
  const Index cols = windows.front().cols();
  HorizonStatsT<Scalar> stats;
  stats.n_windows = N;
  stats.mu = Mat<Scalar>::Zero(rows, cols);
  for (const auto& w : windows) {
    require(w.rows() == rows && w.cols() == cols, "uncertainty windows have mismatched shapes");
    stats.mu += w;
  }
  stats.mu /= static_cast<Scalar>(N);
  Mat<Scalar> acc = Mat<Scalar>::Zero(rows, cols);
  for (const auto& w : windows) acc += (w - stats.mu).cwiseAbs2();
  stats.sigma = (acc / static_cast<Scalar>(N)).cwiseSqrt();
  return stats;
}

inline HorizonStats horizon_stats(const UncertaintyTensor& tensor) {
  return horizon_stats<double>(std::span<const Matrix>(tensor.values));
}

/// (raw - mu) / max(sigma, eps_sigma), cell by cell.
template <typename Scalar>
Mat<Scalar> normalize_window(const Mat<Scalar>& raw, const HorizonStatsT<Scalar>& stats, Scalar eps_sigma) {
  require(raw.rows() == stats.mu.rows() && raw.cols() == stats.mu.cols(), "statistics shape does not match tensor");
  return (raw - stats.mu).cwiseQuotient(stats.sigma.cwiseMax(eps_sigma));
}

inline constexpr double kDefaultEpsSigma = 1e-8;

UncertaintyTensor normalize(UncertaintyTensor tensor, const HorizonStats& stats, double eps_sigma = kDefaultEpsSigma);

enum class VariableAggregation { mean, max };
VariableAggregation parse_aggregation(std::string_view text);

/// Collapses the variable axis: one value per horizon step.
Vector aggregate_variables(const Matrix& scores, VariableAggregation mode);

enum class CollateMode { max, latest, earliest };
CollateMode parse_collate(std::string_view text);

/// Maps window-relative scores (W x horizon) onto the timeline. Step i of a
/// window with origin o scores timestamp o + i (i is 1-based); candidates
/// beyond series_len - 1 are dropped.
ScoreSeries collate_timeline(const Matrix& per_window_scores, std::span<const Index> origins, Index series_len,
                             CollateMode mode);

struct ScoreOptions {
  bool normalize = true;
  double eps_sigma = kDefaultEpsSigma;
  VariableAggregation aggregation = VariableAggregation::mean;
  CollateMode collate = CollateMode::max;
};

/// Variance, validation-based normalization, aggregation and collation.
ScoreSeries score_forecasts(std::span<const EnsembleForecast> validation, std::span<const EnsembleForecast> test,
                            Index series_len, const ScoreOptions& options);

}  // namespace poakit
