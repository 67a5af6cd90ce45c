#include "poakit/io.hpp"
#include "poakit/synth.hpp"

#include <doctest.h>

#include <filesystem>

using namespace poakit;
namespace fs = std::filesystem;

namespace {

SynthConfig small_config() {
  SynthConfig c = default_synth_config();
  c.length = 1200;
  c.train_length = 400;
  c.anomalies = {{300, 20, AnomalyKind::spike, 3.0}, {700, 25, AnomalyKind::level_shift, 2.0},
                 {1000, 30, AnomalyKind::variance_burst, 2.0}};
  return c;
}

double diff_variance(const Matrix& x, Index begin, Index len, Index var) {
  std::vector<double> d;
  for (Index t = begin + 1; t < begin + len; ++t) d.push_back(x(t, var) - x(t - 1, var));
  double mean = 0;
  for (double v : d) mean += v;
  mean /= static_cast<double>(d.size());
  double sq = 0;
  for (double v : d) sq += (v - mean) * (v - mean);
  return sq / static_cast<double>(d.size() - 1);
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("mt19937_64 stream is the standard one") {
  // the standard fixes the 10000th output of a default-seeded engine
  NormalStream s(5489u);
  for (int i = 0; i < 9999; ++i) s.uniform();
  CHECK(s.uniform() == static_cast<double>(9981545732273789042ULL >> 11) * 0x1.0p-53);
}

TEST_CASE("normal stream has unit moments") {
  NormalStream s(1);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("no anomalies means all-zero labels") {
  SynthConfig c = small_config();
  c.anomalies.clear();
  const auto d = generate(c);
  for (auto f : d.labels.flags()) CHECK(f == 0);
  CHECK(d.precursor_truth.empty());
}

TEST_CASE("one spike labels exactly its span") {
  SynthConfig c = small_config();
  c.anomalies = {{500, 10, AnomalyKind::spike, 3.0}};
  const auto d = generate(c);
  for (Index t = 0; t < c.length; ++t) CHECK(d.labels.flags()[t] == (t >= 500 && t <= 509 ? 1 : 0));
  REQUIRE(d.precursor_truth.size() == 1);
  CHECK(d.precursor_truth[0] == Segment{480, 20});
}

TEST_CASE("shapes and clean training data") {
  const auto c = small_config();
  const auto d = generate(c);
  CHECK(d.train.length() == 400);
  CHECK(d.test.length() == 1200);
  CHECK(d.test.variables() == 3);
  CHECK(d.test.timestamps().front() == 0);
  CHECK(d.test.variable_names() == std::vector<std::string>{"x0", "x1", "x2"});
}

TEST_CASE("identical seeds give identical files") {
  const fs::path dir = fs::temp_directory_path() / "poakit_synth_tests";
  fs::create_directories(dir);
  const auto c = default_synth_config();
  write_series_csv(dir / "a.csv", generate(c).test);
  write_series_csv(dir / "b.csv", generate(c).test);
  CHECK(sha256_file(dir / "a.csv") == sha256_file(dir / "b.csv"));
  SynthConfig other = c;
  other.seed = 43;
  write_series_csv(dir / "c.csv", generate(other).test);
  CHECK(sha256_file(dir / "a.csv") != sha256_file(dir / "c.csv"));
}

TEST_CASE("config validation") {
  SynthConfig c = small_config();
  c.anomalies = {{300, 20, AnomalyKind::spike, 3.0}, {310, 5, AnomalyKind::spike, 3.0}};
  CHECK_THROWS_AS(c.validate(), Error);
  c = small_config();
  c.anomalies = {{300, 20, AnomalyKind::spike, 3.0}, {330, 5, AnomalyKind::spike, 3.0}};  // precursor overlaps
  CHECK_THROWS_AS(c.validate(), Error);
  c = small_config();
  c.anomalies = {{1190, 20, AnomalyKind::spike, 3.0}};
  CHECK_THROWS_AS(c.validate(), Error);
  c = small_config();
  c.anomalies = {{10, 5, AnomalyKind::spike, 3.0}};  // precursor before the start
  CHECK_THROWS_AS(c.validate(), Error);
  c = small_config();
  c.base.pop_back();
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("config JSON round trip") {
  const auto c = small_config();
  const auto back = synth_config_from_json(synth_config_to_json(c));
  CHECK(synth_config_to_json(back) == synth_config_to_json(c));
  CHECK(back.anomalies.size() == 3);
  CHECK(back.anomalies[2].kind == AnomalyKind::variance_burst);
  CHECK_THROWS_AS(synth_config_from_json("{not json"), Error);
  CHECK_THROWS_AS(synth_config_from_json(R"({"anomalies":[{"start":5,"length":2,"kind":"wobble"}]})"), Error);
  // partial documents fill in defaults
  CHECK(synth_config_from_json(R"({"seed": 7})").seed == 7);
}

TEST_CASE("precursors raise first-difference variance (sign test over 20 seeds)") {
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SynthConfig c = small_config();
    c.seed = seed;
    const auto d = generate(c);
    double pre = 0, clean = 0;
    for (const Segment& p : d.precursor_truth) {
      const Index len = c.precursor.length;
      const Index pre_start = p.end() + 1 - len;
      // matched clean region: same length, 100 steps earlier
      for (Index v = 0; v < c.variables; ++v) {
        pre += diff_variance(d.test.values(), pre_start, len, v);
        clean += diff_variance(d.test.values(), pre_start - 100, len, v);
      }
    }
    wins += pre > clean ? 1 : 0;
  }
  // one-sided sign test: P(X >= 17 | n=20, p=0.5) ~ 0.0013
  CHECK(wins >= 17);
}

}
