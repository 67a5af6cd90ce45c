#pragma once

#include "poakit/core.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace poakit {

struct Detection {
  Flags flags;
  double threshold = 0.0;
  /// Lead time of each flagged timestamp; empty where not flagged.
  std::vector<std::optional<Index>> lead_times;

  Index length() const { return static_cast<Index>(flags.size()); }
};

/// Flags every defined score >= tau. Missing scores are never flagged.
Detection apply_threshold(const ScoreSeries& scores, double tau);

/// n evenly spaced quantiles of the defined scores, deduplicated and sorted.
std::vector<double> default_grid(const ScoreSeries& scores, std::size_t n = 256);

/// F1 of a detection, or nullopt when undefined.
using F1Callback = std::function<std::optional<double>(const Detection&)>;

struct ThresholdChoice {
  double threshold = 0.0;
  double f1 = 0.0;
  /// Every candidate produced an undefined F1.
  bool undefined = false;
};

/// Grid point with the best F1; ties go to the larger threshold.
ThresholdChoice best_f1_threshold(const ScoreSeries& scores, std::span<const double> grid, const F1Callback& metric,
                                  unsigned jobs = 1);

/// Splits each flagged run at the first anomaly onset it covers: the part
/// before the onset becomes the precursor, the rest the prediction.
SegmentSet split_precursor_prediction(std::span<const std::uint8_t> flags, std::span<const Segment> anomalies,
                                      Index delta);

inline SegmentSet split_precursor_prediction(const Detection& detection, std::span<const Segment> anomalies,
                                             Index delta) {
  return split_precursor_prediction(detection.flags, anomalies, delta);
}

}  // namespace poakit
