#include "poakit/core.hpp"

#include <algorithm>
#include <cmath>

namespace poakit {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::validation: return "E_VALIDATION";
    case ErrorCode::io: return "E_IO";
    case ErrorCode::numeric: return "E_NUMERIC";
  }
  return "E_UNKNOWN";
}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

Index intersection_size(const Segment& a, const Segment& b) {
  if (a.empty() || b.empty()) return 0;
  const Index lo = std::max(a.start, b.start);
  const Index hi = std::min(a.end(), b.end());
  return hi >= lo ? hi - lo + 1 : 0;
}

Index intersection_size(const Segment& a, const std::optional<Segment>& b) {
  return b ? intersection_size(a, *b) : 0;
}

TimeSeries::TimeSeries(std::vector<Index> timestamps, Matrix values, std::vector<std::string> variable_names)
    : timestamps_(std::move(timestamps)), values_(std::move(values)), names_(std::move(variable_names)) {
  validate();
}

TimeSeries::TimeSeries(Matrix values, std::vector<std::string> variable_names)
    : values_(std::move(values)), names_(std::move(variable_names)) {
  timestamps_.resize(static_cast<std::size_t>(values_.rows()));
  for (std::size_t i = 0; i < timestamps_.size(); ++i) timestamps_[i] = static_cast<Index>(i);
  validate();
}

void TimeSeries::validate() const {
  require(values_.rows() >= 1, "time series must contain at least one row");
  require(values_.cols() >= 1, "time series must contain at least one variable");
  require(static_cast<Index>(timestamps_.size()) == values_.rows(), "timestamp count does not match row count");
  for (std::size_t i = 1; i < timestamps_.size(); ++i) {
    if (timestamps_[i] != timestamps_[i - 1] + 1) {
      fail(ErrorCode::validation, "timestamps must increase with unit step (row " + std::to_string(i) + ")");
    }
  }
  if (!values_.allFinite()) fail(ErrorCode::validation, "time series contains non-finite values");
  if (!names_.empty()) {
    require(static_cast<Index>(names_.size()) == values_.cols(), "variable name count does not match column count");
  }
}

TimeSeries TimeSeries::slice(Index begin, Index count) const {
  require(begin >= 0 && count >= 1 && begin + count <= length(), "slice out of range");
  std::vector<Index> ts(timestamps_.begin() + begin, timestamps_.begin() + begin + count);
  return TimeSeries(std::move(ts), values_.middleRows(begin, count), names_);
}

LabelSequence::LabelSequence(Flags flags) : flags_(std::move(flags)) {
  for (std::size_t i = 0; i < flags_.size(); ++i) {
    if (flags_[i] > 1) fail(ErrorCode::validation, "label at index " + std::to_string(i) + " is not 0 or 1");
  }
}

namespace {

void check_sorted_disjoint(const std::vector<Segment>& segs, const char* what) {
  for (std::size_t i = 0; i < segs.size(); ++i) {
    require(segs[i].start >= 0, std::string(what) + ": negative start");
    require(segs[i].length >= 1, std::string(what) + ": empty segment");
    if (i > 0) require(segs[i].start > segs[i - 1].end(), std::string(what) + ": segments overlap or are unsorted");
  }
}

}  // namespace

void SegmentSet::validate() const {
  check_sorted_disjoint(anomalies, "anomalies");
  check_sorted_disjoint(predictions, "predictions");
  require(delta >= 0, "delta must be non-negative");
  require(precursors.size() == predictions.size(), "precursor list must align with predictions");
  require(ambiguous.size() == anomalies.size(), "ambiguous list must align with anomalies");
  for (std::size_t i = 0; i < anomalies.size(); ++i) {
    const auto& amb = ambiguous[i];
    require(amb.start == anomalies[i].end() + 1, "ambiguous window must start right after its anomaly");
    require(amb.length >= 0 && amb.length <= delta, "ambiguous window longer than delta");
  }
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (!precursors[i]) continue;
    require(precursors[i]->length >= 1 && precursors[i]->start >= 0, "precursor must be non-empty when present");
    require(precursors[i]->end() == predictions[i].start - 1, "precursor must end right before its prediction");
    if (i > 0) require(precursors[i]->start > predictions[i - 1].end(), "precursor overlaps previous prediction");
  }
}

SegmentSet make_segment_set(std::vector<Segment> anomalies, std::vector<Segment> predictions,
                            std::vector<std::optional<Segment>> precursors, Index delta, Index series_len) {
  SegmentSet set;
  set.ambiguous = ambiguous_extensions(anomalies, delta, series_len);
  set.anomalies = std::move(anomalies);
  set.predictions = std::move(predictions);
  set.precursors = std::move(precursors);
  if (set.precursors.empty()) set.precursors.resize(set.predictions.size());
  set.delta = delta;
  set.validate();
  return set;
}

std::vector<double> ScoreSeries::defined() const {
  std::vector<double> out;
  out.reserve(scores.size());
  for (const auto& s : scores)
    if (s) out.push_back(*s);
  return out;
}

void ScoreSeries::validate() const {
  require(lead_times.size() == scores.size(), "score and lead-time lengths differ");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!scores[i]) {
      require(!lead_times[i], "missing score carries a lead time at index " + std::to_string(i));
    } else {
      require(std::isfinite(*scores[i]), "non-finite score at index " + std::to_string(i));
      require(!lead_times[i] || *lead_times[i] >= 0, "negative lead time at index " + std::to_string(i));
    }
  }
}

std::vector<Segment> segments_from_flags(std::span<const std::uint8_t> flags) {
  std::vector<Segment> out;
  const Index n = static_cast<Index>(flags.size());
  Index i = 0;
  while (i < n) {
    if (!flags[i]) {
      ++i;
      continue;
    }
    Index j = i;
    while (j < n && flags[j]) ++j;
    out.push_back({i, j - i});
    i = j;
  }
  return out;
}

Flags flags_from_segments(std::span<const Segment> segments, Index series_len) {
  Flags flags(static_cast<std::size_t>(series_len), 0);
  for (const auto& s : segments) {
    for (Index i = std::max<Index>(s.start, 0); i <= s.end() && i < series_len; ++i) flags[i] = 1;
  }
  return flags;
}

std::vector<Segment> ambiguous_extensions(std::span<const Segment> anomalies, Index delta, Index series_len) {
  require(delta >= 0, "delta must be non-negative");
  std::vector<Segment> out;
  out.reserve(anomalies.size());
  for (std::size_t i = 0; i < anomalies.size(); ++i) {
    const Index e = anomalies[i].end();
    Index len = std::min(delta, series_len - 1 - e);
    if (i + 1 < anomalies.size()) len = std::min(len, anomalies[i + 1].start - (e + 1));
    out.push_back({e + 1, std::max<Index>(len, 0)});
  }
  return out;
}

}  // namespace poakit
