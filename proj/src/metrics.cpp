#include "poakit/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace poakit {

EarlyPoint parse_early_point(std::string_view text) {
  if (text == "earliest") return EarlyPoint::earliest;
  if (text == "max-reward" || text == "max_reward") return EarlyPoint::max_reward;
  fail(ErrorCode::validation, "unknown early point rule '" + std::string(text) + "' (expected earliest or max-reward)");
}

void MetricParams::validate() const {
  require(theta >= 0.0 && theta <= 1.0, "theta must lie in [0, 1]");
  require(alpha >= 0.0 && beta >= 0.0 && gamma >= 0.0, "alpha, beta and gamma must be non-negative");
  require(std::abs(alpha + beta + gamma - 1.0) <= 1e-12, "alpha + beta + gamma must equal 1");
  require(delta >= 0, "delta must be non-negative");
  require(epsilon >= 1, "epsilon must be >= 1");
  require(k > 0.0 && std::isfinite(k), "k must be positive");
  require(tapr_alpha >= 0.0 && tapr_alpha <= 1.0, "tapr_alpha must lie in [0, 1]");
}

double ambiguous_weight(Index offset, Index delta) {
  // with delta <= 1 the scaled distance is undefined; the lone position maps to -6
  const double scaled = delta <= 1 ? -6.0 : -6.0 + 12.0 * static_cast<double>(offset) / static_cast<double>(delta - 1);
  return 1.0 / (1.0 + std::exp(scaled));
}

double ambiguous_score(const Segment& a_prime, const Segment& p, Index delta) {
  if (a_prime.empty() || p.empty()) return 0.0;
  const Index lo = std::max(a_prime.start, p.start);
  const Index hi = std::min(a_prime.end(), p.end());
  double s = 0.0;
  for (Index i = lo; i <= hi; ++i) s += ambiguous_weight(i - a_prime.start, delta);
  return s;
}

double overlap_score(const Segment& a, const Segment& p, const std::optional<Segment>& p_prime,
                     const Segment& a_prime, Index delta) {
  return static_cast<double>(intersection_size(a, p_prime) + intersection_size(a, p)) +
         ambiguous_score(a_prime, p, delta);
}

double early_reward(const Segment& a, const std::optional<Segment>& p_prime, Index epsilon, double k,
                    EarlyPoint point) {
  if (!p_prime || p_prime->empty() || p_prime->start >= a.start) return 0.0;
  auto reward = [&](Index i) {
    const double lead = static_cast<double>(a.start - i);
    const double d = lead - static_cast<double>(epsilon);
    return std::exp(-k * d * d);
  };
  if (point == EarlyPoint::earliest) return reward(p_prime->start);
  double best = 0.0;
  for (Index i = p_prime->start; i <= std::min(p_prime->end(), a.start - 1); ++i) best = std::max(best, reward(i));
  return best;
}

double weighted_score(const ComponentScore& c, const MetricParams& params) {
  return params.alpha * c.detection + params.beta * c.portion + params.gamma * c.early;
}

namespace {

/// Overlap scores and rewards for every (anomaly, prediction) pair.
struct PairTable {
  std::size_t n_a = 0;
  std::size_t n_p = 0;
  std::vector<double> overlap;
  std::vector<double> reward;

  double o(std::size_t a, std::size_t p) const { return overlap[a * n_p + p]; }
  double e(std::size_t a, std::size_t p) const { return reward[a * n_p + p]; }
};

PairTable pair_table(const SegmentSet& s, const MetricParams& params) {
  PairTable t;
  t.n_a = s.anomalies.size();
  t.n_p = s.predictions.size();
  t.overlap.assign(t.n_a * t.n_p, 0.0);
  t.reward.assign(t.n_a * t.n_p, 0.0);
  for (std::size_t a = 0; a < t.n_a; ++a) {
    const Segment& seg = s.anomalies[a];
    for (std::size_t p = 0; p < t.n_p; ++p) {
      const auto& pre = s.precursors[p];
      t.overlap[a * t.n_p + p] = overlap_score(seg, s.predictions[p], pre, s.ambiguous[a], s.delta);
      // a prediction earns early credit only for an anomaly it (or its precursor) touches
      const bool paired = intersection_size(seg, s.predictions[p]) > 0 || intersection_size(seg, pre) > 0;
      if (paired) t.reward[a * t.n_p + p] = early_reward(seg, pre, params.epsilon, params.k, params.early_point);
    }
  }
  return t;
}

RecallResult recall_from_table(const SegmentSet& s, const PairTable& t, const MetricParams& params) {
  if (t.n_a == 0) fail(ErrorCode::validation, "no ground-truth segments: recall is undefined");
  RecallResult r;
  for (std::size_t a = 0; a < t.n_a; ++a) {
    AnomalyDiagnostics d;
    d.segment = s.anomalies[a];
    for (std::size_t p = 0; p < t.n_p; ++p) {
      d.overlap += t.o(a, p);
      d.reward = std::max(d.reward, t.e(a, p));
    }
    d.coverage = d.overlap / static_cast<double>(d.segment.length);
    d.detected = d.coverage >= params.theta;
    r.detection += d.detected ? 1.0 : 0.0;
    r.portion += std::min(1.0, d.coverage);
    r.early += d.reward;
    r.anomalies.push_back(d);
  }
  const double n = static_cast<double>(t.n_a);
  r.detection /= n;
  r.portion /= n;
  r.early /= n;
  r.value = weighted_score(r, params);
  return r;
}

PrecisionResult precision_from_table(const SegmentSet& s, const PairTable& t, const MetricParams& params) {
  PrecisionResult r;
  if (t.n_p == 0) {
    r.no_predictions = true;
    return r;
  }
  for (std::size_t p = 0; p < t.n_p; ++p) {
    PredictionDiagnostics d;
    d.segment = s.predictions[p];
    d.precursor = s.precursors[p];
    for (std::size_t a = 0; a < t.n_a; ++a) {
      d.overlap += t.o(a, p);
      d.reward = std::max(d.reward, t.e(a, p));
    }
    d.ratio = d.overlap / static_cast<double>(d.segment.length);
    d.correct = d.ratio >= params.theta;
    r.detection += d.correct ? 1.0 : 0.0;
    r.portion += std::min(1.0, d.ratio);
    r.early += d.reward;
    r.predictions.push_back(d);
  }
  const double n = static_cast<double>(t.n_p);
  r.detection /= n;
  r.portion /= n;
  r.early /= n;
  r.value = weighted_score(r, params);
  return r;
}

}  // namespace

RecallResult ptar(const SegmentSet& segments, const MetricParams& params) {
  params.validate();
  segments.validate();
  return recall_from_table(segments, pair_table(segments, params), params);
}

PrecisionResult ptap(const SegmentSet& segments, const MetricParams& params) {
  params.validate();
  segments.validate();
  return precision_from_table(segments, pair_table(segments, params), params);
}

double ptapr_f1(double recall, double precision) {
  const double sum = recall + precision;
  return sum > 0.0 ? 2.0 * recall * precision / sum : 0.0;
}

PtaprResult evaluate_ptapr(const SegmentSet& segments, const MetricParams& params) {
  params.validate();
  segments.validate();
  const PairTable table = pair_table(segments, params);
  PtaprResult out;
  out.recall = recall_from_table(segments, table, params);
  out.precision = precision_from_table(segments, table, params);
  out.f1 = ptapr_f1(out.recall.value, out.precision.value);
  return out;
}

std::vector<double> default_theta_grid(std::size_t n) {
  require(n >= 2, "theta grid needs at least 2 points");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "trapezoid needs matching x and y");
  double area = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) area += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return area;
}

ThetaSweep ptapr_theta_sweep(const SegmentSet& segments, const MetricParams& params, std::span<const double> thetas) {
  params.validate();
  segments.validate();
  require(!thetas.empty(), "theta grid is empty");
  std::vector<double> grid(thetas.begin(), thetas.end());
  for (double th : grid) require(th >= 0.0 && th <= 1.0, "theta values must lie in [0, 1]");
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.front() != 0.0) grid.insert(grid.begin(), 0.0);
  if (grid.back() != 1.0) grid.push_back(1.0);

  const PairTable table = pair_table(segments, params);
  ThetaSweep sweep;
  sweep.thetas = grid;
  MetricParams p = params;
  for (double th : grid) {
    p.theta = th;
    const double r = recall_from_table(segments, table, p).value;
    const double q = precision_from_table(segments, table, p).value;
    sweep.ptar.push_back(r);
    sweep.ptap.push_back(q);
    sweep.f1.push_back(ptapr_f1(r, q));
  }
  sweep.auc = trapezoid(sweep.thetas, sweep.f1);
  sweep.f1_at_0 = sweep.f1.front();
  sweep.f1_at_1 = sweep.f1.back();
  return sweep;
}

TaprResult tapr(const SegmentSet& segments, const MetricParams& params) {
  params.validate();
  segments.validate();
  SegmentSet merged = segments;
  for (std::size_t i = 0; i < merged.predictions.size(); ++i) {
    if (const auto& pre = merged.precursors[i]) {
      merged.predictions[i] = {pre->start, merged.predictions[i].end() - pre->start + 1};
    }
    merged.precursors[i].reset();
  }
  MetricParams p = params;
  p.alpha = params.tapr_alpha;
  p.beta = 1.0 - params.tapr_alpha;
  p.gamma = 0.0;
  const PairTable table = pair_table(merged, p);
  TaprResult out;
  const RecallResult r = recall_from_table(merged, table, p);
  const PrecisionResult q = precision_from_table(merged, table, p);
  out.recall = r;
  out.precision = q;
  out.tar = r.value;
  out.tap = q.value;
  out.f1 = ptapr_f1(out.tar, out.tap);
  return out;
}

PointScores pointwise_prf(std::span<const std::uint8_t> flags, std::span<const std::uint8_t> labels) {
  require(flags.size() == labels.size(), "flags and labels differ in length");
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i] && labels[i]) ++tp;
    else if (flags[i]) ++fp;
    else if (labels[i]) ++fn;
  }
  PointScores s;
  s.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  s.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  s.f1 = ptapr_f1(s.recall, s.precision);
  return s;
}

Flags point_adjust(std::span<const std::uint8_t> flags, std::span<const std::uint8_t> labels, double k_percent) {
  require(flags.size() == labels.size(), "flags and labels differ in length");
  require(k_percent >= 0.0 && k_percent <= 100.0, "K must lie in [0, 100]");
  Flags out(flags.begin(), flags.end());
  for (const Segment& seg : segments_from_flags(labels)) {
    Index hit = 0;
    for (Index i = seg.start; i <= seg.end(); ++i) hit += flags[i] ? 1 : 0;
    const bool adjust = k_percent == 0.0 ? hit > 0
                                         : static_cast<double>(hit) * 100.0 >= k_percent * static_cast<double>(seg.length);
    if (adjust)
      for (Index i = seg.start; i <= seg.end(); ++i) out[i] = 1;
  }
  return out;
}

std::vector<double> default_k_grid() {
  std::vector<double> out;
  for (int k = 0; k <= 100; k += 10) out.push_back(k);
  return out;
}

PakSuite pa_k_suite(std::span<const std::uint8_t> flags, std::span<const std::uint8_t> labels,
                    std::span<const double> k_grid) {
  std::vector<double> grid(k_grid.begin(), k_grid.end());
  for (double k : grid) require(k >= 0.0 && k <= 100.0, "K values must lie in [0, 100]");
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.empty() || grid.front() != 0.0) grid.insert(grid.begin(), 0.0);
  if (grid.back() != 100.0) grid.push_back(100.0);

  PakSuite suite;
  suite.k_grid = grid;
  std::vector<double> x, y;
  for (double k : grid) {
    const Flags adjusted = point_adjust(flags, labels, k);
    suite.curve.push_back(pointwise_prf(adjusted, labels));
    x.push_back(k / 100.0);
    y.push_back(suite.curve.back().f1);
  }
  suite.f1_pa = suite.curve.front().f1;
  suite.f1_point = pointwise_prf(flags, labels).f1;
  suite.auc = trapezoid(x, y);
  return suite;
}

MetricReport build_report(const SegmentSet& segments, std::span<const std::uint8_t> flags,
                          std::span<const std::uint8_t> labels, const MetricParams& params,
                          std::span<const double> thetas, bool with_tapr, bool with_pak,
                          std::span<const double> k_grid) {
  MetricReport report;
  report.params = params;
  report.ptapr = evaluate_ptapr(segments, params);
  report.sweep = ptapr_theta_sweep(segments, params, thetas);
  if (with_tapr) report.tapr = tapr(segments, params);
  if (with_pak) report.pak = pa_k_suite(flags, labels, k_grid);
  report.early.precision = report.ptapr.precision.early;
  report.early.recall = report.ptapr.recall.early;
  report.early.f1 = ptapr_f1(report.early.recall, report.early.precision);
  return report;
}

}  // namespace poakit
