#include "poakit/uncertainty.hpp"

#include <doctest.h>

#include <random>

using namespace poakit;

namespace {

Matrix random_matrix(std::mt19937_64& rng, Index r, Index c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

EnsembleForecast forecast(Index id, Index origin, std::vector<Matrix> preds) {
  EnsembleForecast f;
  f.window_id = id;
  f.origin = origin;
  for (std::size_t m = 0; m < preds.size(); ++m) f.member_ids.push_back("m" + std::to_string(m));
  f.predictions = std::move(preds);
  return f;
}

}  // namespace

TEST_SUITE("uncertainty") {

TEST_CASE("ensemble variance examples") {
  const std::vector<Matrix> same(3, Matrix::Constant(2, 2, 4.0));
  CHECK(ensemble_variance<double>(same).cwiseAbs().maxCoeff() == 0.0);
  const std::vector<Matrix> three{Matrix::Constant(1, 1, 1), Matrix::Constant(1, 1, 2), Matrix::Constant(1, 1, 3)};
  CHECK(ensemble_variance<double>(three)(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  try {
    ensemble_variance<double>(std::vector<Matrix>{Matrix::Zero(1, 1)});
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("ensemble too small for variance") != std::string::npos);
  }
}

TEST_CASE("ensemble variance is permutation and shift invariant") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Matrix> m;
    for (int i = 0; i < 5; ++i) m.push_back(random_matrix(rng, 6, 3));
    const Matrix v = ensemble_variance<double>(m);
    CHECK((v.array() >= 0).all());
    auto perm = m;
    std::shuffle(perm.begin(), perm.end(), rng);
    CHECK((ensemble_variance<double>(perm) - v).cwiseAbs().maxCoeff() < 1e-12);
    auto shifted = m;
    const Matrix offset = random_matrix(rng, 6, 3, 10.0);
    for (auto& x : shifted) x += offset;
    CHECK((ensemble_variance<double>(shifted) - v).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("ensemble variance is templated on the scalar") {
  using MatF = Mat<float>;
  const std::vector<MatF> m{MatF::Constant(1, 1, 1.f), MatF::Constant(1, 1, 3.f)};
  CHECK(ensemble_variance<float>(m)(0, 0) == doctest::Approx(2.0f));
}

TEST_CASE("horizon statistics use the population deviation") {
  const std::vector<Matrix> two{Matrix::Constant(1, 1, 0.0), Matrix::Constant(1, 1, 2.0)};
  const auto s = horizon_stats<double>(two);
  CHECK(s.mu(0, 0) == 1.0);
  CHECK(s.sigma(0, 0) == 1.0);
  CHECK(s.n_windows == 2);
  const std::vector<Matrix> equal(4, Matrix::Constant(3, 2, 1.5));
  CHECK(horizon_stats<double>(equal).sigma.cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(horizon_stats<double>(std::vector<Matrix>{Matrix::Zero(1, 1)}), Error);
}

TEST_CASE("horizon statistics match a flat loop") {
  std::mt19937_64 rng(4);
  std::vector<Matrix> w;
  for (int i = 0; i < 17; ++i) w.push_back(random_matrix(rng, 5, 3).cwiseAbs());
  const auto s = horizon_stats<double>(w);
  for (Index i = 0; i < 5; ++i)
    for (Index v = 0; v < 3; ++v) {
      double sum = 0;
      for (const auto& m : w) sum += m(i, v);
      const double mu = sum / 17.0;
      double sq = 0;
      for (const auto& m : w) sq += (m(i, v) - mu) * (m(i, v) - mu);
      CHECK(std::abs(s.mu(i, v) - mu) < 1e-12);
      CHECK(std::abs(s.sigma(i, v) - std::sqrt(sq / 17.0)) < 1e-12);
    }
}

TEST_CASE("normalization cases") {
  HorizonStats st;
  st.mu = Matrix::Constant(2, 1, 3.0);
  st.sigma = Matrix::Constant(2, 1, 2.0);
  st.n_windows = 5;
  const Matrix raw = Matrix::Constant(2, 1, 3.0);
  CHECK(normalize_window<double>(raw, st, 1e-8).cwiseAbs().maxCoeff() == 0.0);
  HorizonStats unit;
  unit.mu = Matrix::Zero(2, 2);
  unit.sigma = Matrix::Ones(2, 2);
  Matrix r(2, 2);
  r << 1, -2, 3.5, 0;
  CHECK(normalize_window<double>(r, unit, 1e-8) == r);
  HorizonStats flat;
  flat.mu = Matrix::Zero(1, 1);
  flat.sigma = Matrix::Zero(1, 1);
  const Matrix z = normalize_window<double>(Matrix::Constant(1, 1, 1e-3), flat, 1e-8);
  CHECK(std::isfinite(z(0, 0)));
  CHECK(z(0, 0) == doctest::Approx(1e5));
}

TEST_CASE("normalized validation windows have zero mean and unit deviation") {
  std::mt19937_64 rng(8);
  std::vector<EnsembleForecast> fc;
  for (Index w = 0; w < 60; ++w) {
    std::vector<Matrix> preds;
    for (int m = 0; m < 4; ++m) preds.push_back(random_matrix(rng, 6, 2, 1.0 + 0.1 * w));
    fc.push_back(forecast(w, 10 + w, preds));
  }
  auto tensor = uncertainty_tensor(fc);
  const auto stats = horizon_stats(tensor);
  tensor = normalize(std::move(tensor), stats, kDefaultEpsSigma);
  REQUIRE(tensor.normalized);
  for (Index i = 0; i < 6; ++i)
    for (Index v = 0; v < 2; ++v) {
      double sum = 0, sq = 0;
      for (const auto& m : *tensor.normalized) sum += m(i, v);
      const double mean = sum / 60.0;
      for (const auto& m : *tensor.normalized) sq += (m(i, v) - mean) * (m(i, v) - mean);
      CHECK(std::abs(mean) < 1e-9);
      CHECK(std::abs(std::sqrt(sq / 60.0) - 1.0) < 1e-9);
    }
}

TEST_CASE("variable aggregation") {
  Matrix one(3, 1);
  one << 1, 2, 3;
  CHECK(aggregate_variables(one, VariableAggregation::mean) == Vector(one.col(0)));
  Matrix row(1, 2);
  row << 1, 3;
  CHECK(aggregate_variables(row, VariableAggregation::max)(0) == 3);
  CHECK(aggregate_variables(row, VariableAggregation::mean)(0) == 2);
  CHECK(parse_aggregation("max") == VariableAggregation::max);
  CHECK_THROWS_AS(parse_aggregation("median"), Error);
}

TEST_CASE("collation of a single window") {
  Matrix s(1, 5);
  s << 1, 2, 3, 4, 5;
  const std::vector<Index> origins{11};
  const auto out = collate_timeline(s, origins, 20, CollateMode::max);
  for (Index t = 0; t < 20; ++t) {
    if (t >= 12 && t <= 16) {
      REQUIRE(out.scores[t]);
      CHECK(*out.scores[t] == static_cast<double>(t - 11));
      CHECK(*out.lead_times[t] == t - 11);
    } else {
      CHECK_FALSE(out.scores[t]);
      CHECK_FALSE(out.lead_times[t]);
    }
  }
  // steps past the series end are dropped
  const auto cut = collate_timeline(s, origins, 14, CollateMode::max);
  CHECK(cut.scores[13]);
  CHECK(cut.length() == 14);
}

TEST_CASE("collation modes pick max, latest and earliest") {
  Matrix s(2, 2);
  s << 0.2, 0.5,  // origin 0: scores t=1, t=2
      0.9, 0.1;   // origin 1: scores t=2, t=3
  const std::vector<Index> origins{0, 1};
  const auto mx = collate_timeline(s, origins, 4, CollateMode::max);
  CHECK(*mx.scores[2] == 0.9);
  CHECK(*mx.lead_times[2] == 1);
  const auto latest = collate_timeline(s, origins, 4, CollateMode::latest);
  CHECK(*latest.scores[2] == 0.9);
  CHECK(*latest.lead_times[2] == 1);
  const auto earliest = collate_timeline(s, origins, 4, CollateMode::earliest);
  CHECK(*earliest.scores[2] == 0.5);
  CHECK(*earliest.lead_times[2] == 2);
  CHECK(parse_collate("earliest") == CollateMode::earliest);
  CHECK_THROWS_AS(parse_collate("mean"), Error);
}

TEST_CASE("dense stride-1 collation has min(Ly, available) candidates") {
  const Index Ly = 5, W = 12, T = 30;
  std::vector<Index> origins;
  for (Index w = 0; w < W; ++w) origins.push_back(4 + w);
  // encode the window id in the score so the winner under "earliest" reveals the candidate count
  Matrix s(W, Ly);
  for (Index w = 0; w < W; ++w)
    for (Index i = 0; i < Ly; ++i) s(w, i) = static_cast<double>(w);
  const auto e = collate_timeline(s, origins, T, CollateMode::earliest);
  const auto l = collate_timeline(s, origins, T, CollateMode::latest);
  for (Index t = 0; t < T; ++t) {
    Index count = 0;
    for (Index w = 0; w < W; ++w)
      for (Index i = 1; i <= Ly; ++i) count += origins[w] + i == t ? 1 : 0;
    if (count == 0) {
      CHECK_FALSE(e.scores[t]);
      continue;
    }
    REQUIRE(e.scores[t]);
    CHECK(*e.lead_times[t] - *l.lead_times[t] + 1 == count);
  }
}

TEST_CASE("max collation is monotone in every input") {
  std::mt19937_64 rng(13);
  const std::vector<Index> origins{0, 1, 2, 3, 4, 5};
  for (int trial = 0; trial < 100; ++trial) {
    Matrix s = random_matrix(rng, 6, 4);
    const auto base = collate_timeline(s, origins, 12, CollateMode::max);
    Matrix bumped = s;
    bumped(rng() % 6, rng() % 4) += std::abs(random_matrix(rng, 1, 1)(0, 0));
    const auto up = collate_timeline(bumped, origins, 12, CollateMode::max);
    for (Index t = 0; t < 12; ++t) {
      CHECK(base.scores[t].has_value() == up.scores[t].has_value());
      if (base.scores[t]) CHECK(*up.scores[t] >= *base.scores[t]);
    }
  }
}

TEST_CASE("score_forecasts combines the stages") {
  std::mt19937_64 rng(2);
  std::vector<EnsembleForecast> valid, test;
  for (Index w = 0; w < 10; ++w) {
    std::vector<Matrix> a, b;
    for (int m = 0; m < 3; ++m) {
      a.push_back(random_matrix(rng, 4, 2));
      b.push_back(random_matrix(rng, 4, 2));
    }
    valid.push_back(forecast(w, 20 + w, a));
    test.push_back(forecast(w, 3 + w, b));
  }
  ScoreOptions raw;
  raw.normalize = false;
  const auto plain = score_forecasts({}, test, 20, raw);
  // raw: score(t) with max collation = max over windows covering t of the mean variance
  for (Index t = 0; t < 20; ++t) {
    std::optional<double> best;
    for (const auto& f : test) {
      const Index step = t - f.origin;
      if (step < 1 || step > 4) continue;
      const double v = ensemble_variance(f).row(step - 1).mean();
      if (!best || v > *best) best = v;
    }
    CHECK(plain.scores[t].has_value() == best.has_value());
    if (best) CHECK(std::abs(*plain.scores[t] - *best) < 1e-12);
  }
  const auto norm = score_forecasts(valid, test, 20, ScoreOptions{});
  CHECK(norm.length() == 20);
  CHECK_THROWS_AS(score_forecasts({}, test, 20, ScoreOptions{}), Error);
}

}
