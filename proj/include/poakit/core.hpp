#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace poakit {

using Index = std::int64_t;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Flags = std::vector<std::uint8_t>;

/// Exit-code aligned error categories.
enum class ErrorCode : int { validation = 2, io = 3, numeric = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

const char* error_code_name(ErrorCode code) noexcept;

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::validation, what);
}

/// Inclusive index range [start, start + length - 1]. A zero length is the
/// empty segment (used for clipped ambiguous windows).
struct Segment {
  Index start = 0;
  Index length = 0;

  Index end() const { return start + length - 1; }
  bool empty() const { return length <= 0; }
  bool contains(Index i) const { return !empty() && i >= start && i <= end(); }

  friend bool operator==(const Segment&, const Segment&) = default;
};

Index intersection_size(const Segment& a, const Segment& b);
Index intersection_size(const Segment& a, const std::optional<Segment>& b);

/// Multivariate series on a unit-step integer timeline.
class TimeSeries {
 public:
  TimeSeries() = default;
  TimeSeries(std::vector<Index> timestamps, Matrix values, std::vector<std::string> variable_names = {});
  /// Timestamps 0..T-1.
  explicit TimeSeries(Matrix values, std::vector<std::string> variable_names = {});

  Index length() const { return values_.rows(); }
  Index variables() const { return values_.cols(); }
  const std::vector<Index>& timestamps() const { return timestamps_; }
  const Matrix& values() const { return values_; }
  const std::vector<std::string>& variable_names() const { return names_; }

  /// Rows [begin, begin + count) with their timestamps.
  TimeSeries slice(Index begin, Index count) const;

 private:
  void validate() const;

  std::vector<Index> timestamps_;
  Matrix values_;
  std::vector<std::string> names_;
};

class LabelSequence {
 public:
  LabelSequence() = default;
  explicit LabelSequence(Flags flags);

  Index length() const { return static_cast<Index>(flags_.size()); }
  const Flags& flags() const { return flags_; }

 private:
  Flags flags_;
};

/// A, P, P' and A' together with the ambiguous-window length.
struct SegmentSet {
  std::vector<Segment> anomalies;
  std::vector<Segment> predictions;
  std::vector<std::optional<Segment>> precursors;
  std::vector<Segment> ambiguous;
  Index delta = 0;

  /// Throws on any broken structural invariant.
  void validate() const;
};

/// Builds a SegmentSet, deriving the ambiguous extensions from the anomalies.
SegmentSet make_segment_set(std::vector<Segment> anomalies, std::vector<Segment> predictions,
                            std::vector<std::optional<Segment>> precursors, Index delta, Index series_len);

/// Per-timestamp score with the lead (steps ahead of emission) that produced it.
struct ScoreSeries {
  std::vector<std::optional<double>> scores;
  std::vector<std::optional<Index>> lead_times;

  Index length() const { return static_cast<Index>(scores.size()); }
  std::vector<double> defined() const;
  void validate() const;
};

std::vector<Segment> segments_from_flags(std::span<const std::uint8_t> flags);
Flags flags_from_segments(std::span<const Segment> segments, Index series_len);

/// Window of up to delta instances after each anomaly, clipped at the series
/// end and at the next anomaly's start.
std::vector<Segment> ambiguous_extensions(std::span<const Segment> anomalies, Index delta, Index series_len);

}  // namespace poakit
