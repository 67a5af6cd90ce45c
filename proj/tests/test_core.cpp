#include "poakit/core.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace poakit;

TEST_SUITE("core") {

TEST_CASE("segments_from_flags examples") {
  CHECK(segments_from_flags(Flags{0, 0, 0}).empty());
  const auto segs = segments_from_flags(Flags{1, 1, 0, 1});
  REQUIRE(segs.size() == 2);
  CHECK(segs[0] == Segment{0, 2});
  CHECK(segs[1] == Segment{3, 1});
  CHECK(segments_from_flags(Flags{}).empty());
}

TEST_CASE("segments cover exactly the flagged indices") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    Flags flags(50);
    for (auto& f : flags) f = rng() % 2;
    std::set<Index> from_segs;
    const auto segs = segments_from_flags(flags);
    for (std::size_t i = 0; i < segs.size(); ++i) {
      if (i > 0) CHECK(segs[i].start > segs[i - 1].end() + 1);  // maximal runs
      for (Index t = segs[i].start; t <= segs[i].end(); ++t) from_segs.insert(t);
    }
    std::set<Index> flagged;
    for (Index t = 0; t < 50; ++t)
      if (flags[t]) flagged.insert(t);
    CHECK(from_segs == flagged);
    CHECK(flags_from_segments(segs, 50) == flags);
  }
}

TEST_CASE("flags and segments round trip") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Segment> segs;
    Index pos = static_cast<Index>(rng() % 4);
    while (true) {
      const Index len = 1 + static_cast<Index>(rng() % 5);
      if (pos + len > 60) break;
      segs.push_back({pos, len});
      pos += len + 1 + static_cast<Index>(rng() % 4);
    }
    CHECK(segments_from_flags(flags_from_segments(segs, 60)) == segs);
  }
}

TEST_CASE("ambiguous extension examples") {
  const std::vector<Segment> one{{5, 3}};
  CHECK(ambiguous_extensions(one, 4, 20).front() == Segment{8, 4});
  CHECK(ambiguous_extensions(one, 4, 10).front() == Segment{8, 2});
  const std::vector<Segment> two{{0, 3}, {5, 2}};
  const auto ext = ambiguous_extensions(two, 4, 20);
  CHECK(ext[0] == Segment{3, 2});
  CHECK(ext[1] == Segment{7, 4});
  // anomaly touching the series end: empty extension
  const std::vector<Segment> last{{7, 3}};
  CHECK(ambiguous_extensions(last, 4, 10).front().empty());
  // adjacent anomalies leave no room
  const std::vector<Segment> adjacent{{0, 2}, {2, 2}};
  CHECK(ambiguous_extensions(adjacent, 3, 10).front().length == 0);
}

TEST_CASE("ambiguous windows avoid anomalies and respect delta") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const Index T = 10 + static_cast<Index>(rng() % 40);
    Flags labels(T);
    for (auto& f : labels) f = rng() % 3 == 0;
    const auto anomalies = segments_from_flags(labels);
    const Index delta = static_cast<Index>(rng() % 6);
    const auto ext = ambiguous_extensions(anomalies, delta, T);
    REQUIRE(ext.size() == anomalies.size());
    for (std::size_t i = 0; i < ext.size(); ++i) {
      CHECK(ext[i].length <= delta);
      CHECK(ext[i].start == anomalies[i].end() + 1);
      for (Index t = ext[i].start; t <= ext[i].end(); ++t) {
        CHECK(t < T);
        CHECK(labels[t] == 0);
      }
    }
  }
}

TEST_CASE("segment intersection matches index sets") {
  for (Index s1 = 0; s1 < 8; ++s1)
    for (Index l1 = 0; l1 < 5; ++l1)
      for (Index s2 = 0; s2 < 8; ++s2)
        for (Index l2 = 0; l2 < 5; ++l2) {
          Index brute = 0;
          for (Index t = 0; t < 20; ++t) brute += (t >= s1 && t < s1 + l1 && t >= s2 && t < s2 + l2) ? 1 : 0;
          CHECK(intersection_size(Segment{s1, l1}, Segment{s2, l2}) == brute);
        }
  CHECK(intersection_size(Segment{0, 5}, std::optional<Segment>{}) == 0);
}

TEST_CASE("time series validation") {
  Matrix m(3, 2);
  m << 1, 2, 3, 4, 5, 6;
  TimeSeries ts(m, {"a", "b"});
  CHECK(ts.length() == 3);
  CHECK(ts.variables() == 2);
  CHECK(ts.timestamps() == std::vector<Index>{0, 1, 2});
  CHECK_THROWS_AS(TimeSeries({0, 2, 3}, m), Error);
  CHECK_THROWS_AS(TimeSeries({0, 1}, m), Error);
  CHECK_THROWS_AS(TimeSeries(m, {"a"}), Error);
  Matrix bad = m;
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(TimeSeries{bad}, Error);
  const auto s = ts.slice(1, 2);
  CHECK(s.timestamps() == std::vector<Index>{1, 2});
  CHECK(s.values()(0, 0) == 3);
  CHECK_THROWS_AS(ts.slice(2, 2), Error);
}

TEST_CASE("label values must be binary") {
  CHECK_NOTHROW(LabelSequence(Flags{0, 1, 1}));
  try {
    LabelSequence(Flags{0, 2});
    FAIL("expected a validation error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::validation);
  }
}

TEST_CASE("segment set structural checks") {
  const auto ok = make_segment_set({{5, 3}}, {{5, 2}}, {Segment{3, 2}}, 2, 20);
  CHECK(ok.ambiguous.front() == Segment{8, 2});
  CHECK_THROWS_AS(make_segment_set({{5, 3}, {6, 2}}, {}, {}, 2, 20), Error);
  // precursor must end right before its prediction
  CHECK_THROWS_AS(make_segment_set({{5, 3}}, {{5, 2}}, {Segment{2, 2}}, 2, 20), Error);
  CHECK_THROWS_AS(make_segment_set({{5, 3}}, {{5, 2}, {9, 1}}, {std::nullopt}, 2, 20), Error);
}

TEST_CASE("score series invariants") {
  ScoreSeries s;
  s.scores = {1.0, std::nullopt};
  s.lead_times = {Index{2}, std::nullopt};
  CHECK_NOTHROW(s.validate());
  CHECK(s.defined() == std::vector<double>{1.0});
  s.lead_times[1] = 3;
  CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("error codes map to exit codes") {
  CHECK(static_cast<int>(ErrorCode::validation) == 2);
  CHECK(static_cast<int>(ErrorCode::io) == 3);
  CHECK(static_cast<int>(ErrorCode::numeric) == 4);
  CHECK(std::string(error_code_name(ErrorCode::io)) == "E_IO");
}

}
