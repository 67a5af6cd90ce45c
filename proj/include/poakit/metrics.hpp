#pragma once

#include "poakit/core.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace poakit {

/// Which precursor point the early reward is measured from.
enum class EarlyPoint {
  earliest,    ///< first alert in p' (largest lead)
  max_reward,  ///< the point in p' whose lead earns the highest reward
};
EarlyPoint parse_early_point(std::string_view text);

struct MetricParams {
  double theta = 0.5;
  double alpha = 1.0 / 3.0;
  double beta = 1.0 / 3.0;
  double gamma = 1.0 / 3.0;
  Index delta = 24;
  Index epsilon = 7;
  double k = 0.001;
  double tapr_alpha = 0.5;
  EarlyPoint early_point = EarlyPoint::earliest;

  void validate() const;
};

/// Sigmoid weight of the ambiguous instance at `offset` steps past the anomaly end.
double ambiguous_weight(Index offset, Index delta);

/// Sum of sigmoid weights over the flagged ambiguous instances a' ∩ p.
double ambiguous_score(const Segment& a_prime, const Segment& p, Index delta);

/// |a ∩ p'| + |a ∩ p| + S(a', p).
double overlap_score(const Segment& a, const Segment& p, const std::optional<Segment>& p_prime,
                     const Segment& a_prime, Index delta);

/// Gaussian reward exp(-k (lead - epsilon)^2) measured from the precursor
/// point before the anomaly onset; 0 without such a point.
double early_reward(const Segment& a, const std::optional<Segment>& p_prime, Index epsilon, double k,
                    EarlyPoint point = EarlyPoint::earliest);

struct AnomalyDiagnostics {
  Segment segment;
  double overlap = 0.0;   ///< Σ_p O(a, p, p')
  double coverage = 0.0;  ///< overlap / |a|
  double reward = 0.0;
  bool detected = false;
};

struct PredictionDiagnostics {
  Segment segment;
  std::optional<Segment> precursor;
  double overlap = 0.0;  ///< Σ_a O(a, p, p')
  double ratio = 0.0;    ///< overlap / |p|
  double reward = 0.0;
  bool correct = false;
};

struct ComponentScore {
  double value = 0.0;
  double detection = 0.0;
  double portion = 0.0;
  double early = 0.0;
};

struct RecallResult : ComponentScore {
  std::vector<AnomalyDiagnostics> anomalies;
};

struct PrecisionResult : ComponentScore {
  std::vector<PredictionDiagnostics> predictions;
  bool no_predictions = false;
};

/// α·d + β·p + γ·e with the given component values.
double weighted_score(const ComponentScore& components, const MetricParams& params);

RecallResult ptar(const SegmentSet& segments, const MetricParams& params);
PrecisionResult ptap(const SegmentSet& segments, const MetricParams& params);

/// Harmonic mean; 0 when both inputs are 0.
double ptapr_f1(double recall, double precision);

struct PtaprResult {
  RecallResult recall;
  PrecisionResult precision;
  double f1 = 0.0;
};
PtaprResult evaluate_ptapr(const SegmentSet& segments, const MetricParams& params);

struct ThetaSweep {
  std::vector<double> thetas;
  std::vector<double> ptar;
  std::vector<double> ptap;
  std::vector<double> f1;
  double auc = 0.0;
  double f1_at_0 = 0.0;
  double f1_at_1 = 0.0;
};

/// 101 evenly spaced points on [0, 1].
std::vector<double> default_theta_grid(std::size_t n = 101);

/// F1 at every theta plus its trapezoidal area over [0, 1]; the endpoints are
/// added to the grid when missing.
ThetaSweep ptapr_theta_sweep(const SegmentSet& segments, const MetricParams& params, std::span<const double> thetas);

/// Trapezoidal area of y(x) over sorted x.
double trapezoid(std::span<const double> x, std::span<const double> y);

struct TaprResult {
  double tar = 0.0;
  double tap = 0.0;
  double f1 = 0.0;
  ComponentScore recall;
  ComponentScore precision;
};

/// The two-component baseline: precursors are folded into their predictions,
/// no early term, weights (tapr_alpha, 1 - tapr_alpha).
TaprResult tapr(const SegmentSet& segments, const MetricParams& params);

struct PointScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

PointScores pointwise_prf(std::span<const std::uint8_t> flags, std::span<const std::uint8_t> labels);

/// Marks a whole labeled segment as flagged once at least K% of it is flagged
/// (any flag at all when K = 0).
Flags point_adjust(std::span<const std::uint8_t> flags, std::span<const std::uint8_t> labels, double k_percent);

struct PakSuite {
  double f1_pa = 0.0;     ///< K = 0
  double f1_point = 0.0;  ///< no adjustment
  double auc = 0.0;       ///< area over K in [0, 100], scaled to [0, 1]
  std::vector<double> k_grid;
  std::vector<PointScores> curve;
};

std::vector<double> default_k_grid();
PakSuite pa_k_suite(std::span<const std::uint8_t> flags, std::span<const std::uint8_t> labels,
                    std::span<const double> k_grid);

/// Everything the evaluate stage reports for one detection.
struct MetricReport {
  MetricParams params;
  PtaprResult ptapr;
  ThetaSweep sweep;
  std::optional<TaprResult> tapr;
  std::optional<PakSuite> pak;
  /// Early-detection precision/recall/F1 (the e-components).
  PointScores early;
};

MetricReport build_report(const SegmentSet& segments, std::span<const std::uint8_t> flags,
                          std::span<const std::uint8_t> labels, const MetricParams& params,
                          std::span<const double> thetas, bool with_tapr, bool with_pak,
                          std::span<const double> k_grid);

}  // namespace poakit
