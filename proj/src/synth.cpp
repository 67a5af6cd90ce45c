#include "poakit/synth.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace poakit {

double NormalStream::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(angle);
  has_cached_ = true;
  return r * std::cos(angle);
}

std::string to_string(AnomalyKind kind) {
  switch (kind) {
    case AnomalyKind::spike: return "spike";
    case AnomalyKind::level_shift: return "level_shift";
    case AnomalyKind::variance_burst: return "variance_burst";
  }
  return "spike";
}

AnomalyKind parse_anomaly_kind(const std::string& text) {
  if (text == "spike") return AnomalyKind::spike;
  if (text == "level_shift") return AnomalyKind::level_shift;
  if (text == "variance_burst") return AnomalyKind::variance_burst;
  fail(ErrorCode::validation, "unknown anomaly kind '" + text + "'");
}

void SynthConfig::validate() const {
  require(length >= 1, "synthetic test length must be >= 1");
  require(train_length >= 1, "synthetic train length must be >= 1");
  require(variables >= 1, "synthetic series needs at least one variable");
  require(base.empty() || static_cast<Index>(base.size()) == variables, "base list must have one entry per variable");
  for (const auto& b : base) {
    for (const auto& s : b.sines) require(s.period > 0.0, "sine period must be positive");
    for (const auto& a : b.ar1) require(std::abs(a.coef) < 1.0 && a.noise_std >= 0.0, "ar1 needs |coef| < 1, noise_std >= 0");
  }
  require(precursor.lead >= 0 && precursor.length >= 0 && precursor.length <= precursor.lead,
          "precursor needs 0 <= length <= lead");
  require(precursor.noise_inflation >= 0.0, "noise inflation must be non-negative");

  std::vector<InjectedAnomaly> sorted = anomalies;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  Index previous_end = -1;
  for (const auto& a : sorted) {
    require(a.length >= 1, "anomaly length must be >= 1");
    require(a.start >= 0 && a.start + a.length <= length,
            "anomaly at " + std::to_string(a.start) + " lies outside [0, " + std::to_string(length) + ")");
    const Index region_start = a.start - precursor.lead;
    require(region_start >= 0, "precursor of anomaly at " + std::to_string(a.start) + " starts before the series");
    require(region_start > previous_end,
            "injections overlap: anomaly at " + std::to_string(a.start) + " collides with the previous injection");
    previous_end = a.start + a.length - 1;
  }
}

SynthConfig default_synth_config() {
  SynthConfig cfg;
  cfg.base = {
      VariableBase{0.0, {SineComponent{0.5, 24.0, 0.0}}, {Ar1Component{0.6, 0.3}}},
      VariableBase{0.5, {SineComponent{0.4, 50.0, 1.0}}, {Ar1Component{0.6, 0.3}}},
      VariableBase{-0.5, {SineComponent{0.6, 36.0, 2.0}}, {Ar1Component{0.6, 0.3}}},
  };
  const AnomalyKind kinds[] = {AnomalyKind::spike, AnomalyKind::level_shift, AnomalyKind::variance_burst};
  const double magnitudes[] = {3.0, 2.0, 2.0};
  const Index lengths[] = {30, 40, 50};
  for (int j = 0; j < 6; ++j) {
    cfg.anomalies.push_back(InjectedAnomaly{600 + 750 * j, lengths[j % 3], kinds[j % 3], magnitudes[j % 3]});
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

using nlohmann::json;

json to_json(const SynthConfig& c) {
  json base = json::array();
  for (const auto& b : c.base) {
    json sines = json::array(), ar = json::array();
    for (const auto& s : b.sines) sines.push_back({{"amplitude", s.amplitude}, {"period", s.period}, {"phase", s.phase}});
    for (const auto& a : b.ar1) ar.push_back({{"coef", a.coef}, {"noise_std", a.noise_std}});
    base.push_back({{"offset", b.offset}, {"sine", sines}, {"ar1", ar}});
  }
  json anomalies = json::array();
  for (const auto& a : c.anomalies) {
    anomalies.push_back(
        {{"start", a.start}, {"length", a.length}, {"kind", to_string(a.kind)}, {"magnitude", a.magnitude}});
  }
  return {{"length", c.length},
          {"train_length", c.train_length},
          {"variables", c.variables},
          {"seed", c.seed},
          {"base", base},
          {"anomalies", anomalies},
          {"precursor",
           {{"lead", c.precursor.lead},
            {"length", c.precursor.length},
            {"drift_magnitude", c.precursor.drift_magnitude},
            {"noise_inflation", c.precursor.noise_inflation}}}};
}

}  // namespace

std::string synth_config_to_json(const SynthConfig& cfg) { return to_json(cfg).dump(2); }

SynthConfig synth_config_from_json(const std::string& text) {
  SynthConfig c = default_synth_config();
  try {
    const json j = json::parse(text);
    c.length = j.value("length", c.length);
    c.train_length = j.value("train_length", c.train_length);
    c.variables = j.value("variables", c.variables);
    c.seed = j.value("seed", c.seed);
    if (j.contains("base")) {
      c.base.clear();
      for (const auto& b : j.at("base")) {
        VariableBase vb;
        vb.offset = b.value("offset", 0.0);
        for (const auto& s : b.value("sine", json::array())) {
          vb.sines.push_back({s.value("amplitude", 1.0), s.value("period", 24.0), s.value("phase", 0.0)});
        }
        for (const auto& a : b.value("ar1", json::array())) {
          vb.ar1.push_back({a.value("coef", 0.6), a.value("noise_std", 0.2)});
        }
        c.base.push_back(std::move(vb));
      }
    } else if (static_cast<Index>(c.base.size()) != c.variables) {
      c.base.clear();
    }
    if (j.contains("anomalies")) {
      c.anomalies.clear();
      for (const auto& a : j.at("anomalies")) {
        c.anomalies.push_back({a.at("start").get<Index>(), a.at("length").get<Index>(),
                               parse_anomaly_kind(a.value("kind", std::string("spike"))), a.value("magnitude", 3.0)});
      }
    }
    if (j.contains("precursor")) {
      const auto& p = j.at("precursor");
      c.precursor.lead = p.value("lead", c.precursor.lead);
      c.precursor.length = p.value("length", c.precursor.lead);
      c.precursor.drift_magnitude = p.value("drift_magnitude", c.precursor.drift_magnitude);
      c.precursor.noise_inflation = p.value("noise_inflation", c.precursor.noise_inflation);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::validation, std::string("bad synthetic config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Generation

SynthDataset generate(const SynthConfig& cfg) {
  cfg.validate();
  const Index total = cfg.train_length + cfg.length;
  const Index c = cfg.variables;
  std::vector<VariableBase> base = cfg.base;
  if (base.empty()) {
    for (Index v = 0; v < c; ++v) {
      base.push_back({0.0, {SineComponent{1.0, 24.0 + 12.0 * static_cast<double>(v), static_cast<double>(v)}},
                      {Ar1Component{}}});
    }
  }

  // per-timestamp noise scale and drift, in test coordinates
  std::vector<double> inflation(static_cast<std::size_t>(cfg.length), 1.0);
  std::vector<double> drift(static_cast<std::size_t>(cfg.length), 0.0);
  std::vector<Segment> precursor_truth;
  std::vector<InjectedAnomaly> anomalies = cfg.anomalies;
  std::sort(anomalies.begin(), anomalies.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  const auto& pc = cfg.precursor;
  if (pc.lead > 0) {
    for (const auto& a : anomalies) {
      const Index begin = a.start - pc.lead;
      precursor_truth.push_back({begin, pc.lead});
      for (Index i = 0; i < pc.lead; ++i) {
        drift[begin + i] = pc.drift_magnitude * static_cast<double>(i + 1) / static_cast<double>(pc.lead);
        if (i >= pc.lead - pc.length) inflation[begin + i] = pc.noise_inflation;
      }
    }
  }

  NormalStream rng(cfg.seed);
  Matrix values(total, c);
  std::vector<std::vector<double>> ar_state(static_cast<std::size_t>(c));
  for (Index v = 0; v < c; ++v) ar_state[v].assign(base[v].ar1.size(), 0.0);

  for (Index t = 0; t < total; ++t) {
    const Index tt = t - cfg.train_length;  // test coordinate
    const bool in_test = tt >= 0;
    const double scale = in_test ? inflation[tt] : 1.0;
    for (Index v = 0; v < c; ++v) {
      const auto& b = base[v];
      double x = b.offset;
      for (const auto& s : b.sines) {
        x += s.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / s.period + s.phase);
      }
      for (std::size_t k = 0; k < b.ar1.size(); ++k) {
        auto& state = ar_state[v][k];
        state = b.ar1[k].coef * state + b.ar1[k].noise_std * scale * rng.normal();
        x += state;
      }
      if (in_test) x += drift[tt];
      values(t, v) = x;
    }
  }

  Flags labels(static_cast<std::size_t>(cfg.length), 0);
  for (const auto& a : anomalies) {
    for (Index i = a.start; i < a.start + a.length; ++i) {
      labels[i] = 1;
      const Index t = cfg.train_length + i;
      for (Index v = 0; v < c; ++v) {
        switch (a.kind) {
          case AnomalyKind::spike: values(t, v) += (rng.uniform() < 0.5 ? -1.0 : 1.0) * a.magnitude; break;
          case AnomalyKind::level_shift: values(t, v) += a.magnitude; break;
          case AnomalyKind::variance_burst: values(t, v) += a.magnitude * rng.normal(); break;
        }
      }
    }
  }

  std::vector<std::string> names;
  for (Index v = 0; v < c; ++v) names.push_back("x" + std::to_string(v));
  SynthDataset out;
  out.train = TimeSeries(values.topRows(cfg.train_length), names);
  out.test = TimeSeries(Matrix(values.bottomRows(cfg.length)), names);
  out.labels = LabelSequence(std::move(labels));
  out.precursor_truth = std::move(precursor_truth);
  return out;
}

}  // namespace poakit
