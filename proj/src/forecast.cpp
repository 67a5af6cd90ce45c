#include "poakit/forecast.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <thread>

namespace poakit {

void WindowConfig::validate() const {
  require(input_len >= 1, "input length must be >= 1");
  require(horizon_len >= 1, "horizon length must be >= 1");
  require(stride >= 1, "stride must be >= 1");
}

Index window_count(Index series_len, const WindowConfig& cfg, bool with_targets) {
  cfg.validate();
  const Index span = cfg.input_len + (with_targets ? cfg.horizon_len : 0);
  if (series_len < span) return 0;
  return (series_len - span) / cfg.stride + 1;
}

std::vector<WindowPair> make_windows(const TimeSeries& series, const WindowConfig& cfg, bool with_targets) {
  cfg.validate();
  const Index T = series.length();
  const Index needed = cfg.input_len + (with_targets ? cfg.horizon_len : 0);
  if (T < needed) {
    fail(ErrorCode::validation, "insufficient length: series has " + std::to_string(T) + " rows, at least " +
                                    std::to_string(needed) + " required");
  }
  const Index count = window_count(T, cfg, with_targets);
  std::vector<WindowPair> out;
  out.reserve(static_cast<std::size_t>(count));
  for (Index w = 0; w < count; ++w) {
    WindowPair pair;
    pair.window_id = w;
    pair.origin = cfg.input_len - 1 + w * cfg.stride;
    pair.input = series.values().middleRows(pair.origin - cfg.input_len + 1, cfg.input_len);
    if (with_targets) pair.target = series.values().middleRows(pair.origin + 1, cfg.horizon_len);
    out.push_back(std::move(pair));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Forecaster specs

ForecasterSpec ForecasterSpec::persistence() { return {}; }

ForecasterSpec ForecasterSpec::seasonal_naive(Index period) {
  ForecasterSpec s;
  s.kind = ForecasterKind::seasonal_naive;
  s.param = period;
  return s;
}

ForecasterSpec ForecasterSpec::moving_average(Index width) {
  ForecasterSpec s;
  s.kind = ForecasterKind::moving_average;
  s.param = width;
  return s;
}

ForecasterSpec ForecasterSpec::ar_ols(Index order) {
  ForecasterSpec s;
  s.kind = ForecasterKind::ar_ols;
  s.param = order;
  return s;
}

ForecasterSpec ForecasterSpec::exp_smoothing(double alpha) {
  ForecasterSpec s;
  s.kind = ForecasterKind::exp_smoothing;
  s.alpha = alpha;
  return s;
}

ForecasterSpec ForecasterSpec::holt_linear(double alpha, double beta) {
  ForecasterSpec s;
  s.kind = ForecasterKind::holt_linear;
  s.alpha = alpha;
  s.beta = beta;
  return s;
}

namespace {

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view s, std::string_view context) {
  s = trim(s);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    fail(ErrorCode::validation, "bad numeric argument '" + std::string(s) + "' in " + std::string(context));
  }
  return v;
}

Index parse_integer(std::string_view s, std::string_view context) {
  const double v = parse_number(s, context);
  if (v != std::floor(v)) fail(ErrorCode::validation, "expected an integer argument in " + std::string(context));
  return static_cast<Index>(v);
}

}  // namespace

ForecasterSpec ForecasterSpec::parse(std::string_view text) {
  text = trim(text);
  std::string_view name = text;
  std::vector<std::string_view> args;
  if (auto open = text.find('('); open != std::string_view::npos) {
    if (text.back() != ')') fail(ErrorCode::validation, "unterminated argument list in '" + std::string(text) + "'");
    name = trim(text.substr(0, open));
    std::string_view inner = text.substr(open + 1, text.size() - open - 2);
    while (!inner.empty()) {
      auto comma = inner.find(',');
      args.push_back(inner.substr(0, comma));
      if (comma == std::string_view::npos) break;
      inner.remove_prefix(comma + 1);
    }
  }
  auto expect = [&](std::size_t n) {
    if (args.size() != n) {
      fail(ErrorCode::validation, "'" + std::string(name) + "' takes " + std::to_string(n) + " argument(s)");
    }
  };
  ForecasterSpec spec;
  if (name == "persistence") {
    expect(0);
    spec = persistence();
  } else if (name == "seasonal_naive") {
    expect(1);
    spec = seasonal_naive(parse_integer(args[0], text));
  } else if (name == "moving_average") {
    expect(1);
    spec = moving_average(parse_integer(args[0], text));
  } else if (name == "ar_ols") {
    expect(1);
    spec = ar_ols(parse_integer(args[0], text));
  } else if (name == "exp_smoothing") {
    expect(1);
    spec = exp_smoothing(parse_number(args[0], text));
  } else if (name == "holt_linear") {
    expect(2);
    spec = holt_linear(parse_number(args[0], text), parse_number(args[1], text));
  } else {
    fail(ErrorCode::validation, "unknown forecaster '" + std::string(name) + "'");
  }
  spec.validate();
  return spec;
}

std::string ForecasterSpec::id() const {
  switch (kind) {
    case ForecasterKind::persistence: return "persistence";
    case ForecasterKind::seasonal_naive: return "seasonal_naive(" + std::to_string(param) + ")";
    case ForecasterKind::moving_average: return "moving_average(" + std::to_string(param) + ")";
    case ForecasterKind::ar_ols: return "ar_ols(" + std::to_string(param) + ")";
    case ForecasterKind::exp_smoothing: return "exp_smoothing(" + shortest(alpha) + ")";
    case ForecasterKind::holt_linear: return "holt_linear(" + shortest(alpha) + "," + shortest(beta) + ")";
  }
  return "unknown";
}

Index ForecasterSpec::min_context() const {
  switch (kind) {
    case ForecasterKind::seasonal_naive:
    case ForecasterKind::moving_average:
    case ForecasterKind::ar_ols: return param;
    case ForecasterKind::holt_linear: return 2;
    default: return 1;
  }
}

void ForecasterSpec::validate() const {
  switch (kind) {
    case ForecasterKind::seasonal_naive:
    case ForecasterKind::moving_average:
    case ForecasterKind::ar_ols: require(param >= 1, id() + ": period/width/order must be >= 1"); break;
    case ForecasterKind::holt_linear:
      require(beta > 0.0 && beta <= 1.0, id() + ": beta must lie in (0, 1]");
      [[fallthrough]];
    case ForecasterKind::exp_smoothing: require(alpha > 0.0 && alpha <= 1.0, id() + ": alpha must lie in (0, 1]"); break;
    case ForecasterKind::persistence: break;
  }
}

std::vector<ForecasterSpec> parse_member_list(std::string_view text) {
  std::vector<ForecasterSpec> out;
  int depth = 0;
  std::size_t begin = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    const char ch = i < text.size() ? text[i] : ',';
    if (ch == '(') ++depth;
    if (ch == ')') --depth;
    if (ch == ',' && depth == 0) {
      auto item = trim(text.substr(begin, i - begin));
      if (!item.empty()) out.push_back(ForecasterSpec::parse(item));
      begin = i + 1;
    }
  }
  require(depth == 0, "unbalanced parentheses in member list");
  return out;
}

std::vector<ForecasterSpec> default_member_pool() {
  return {
      ForecasterSpec::persistence(),        ForecasterSpec::seasonal_naive(24),
      ForecasterSpec::seasonal_naive(50),   ForecasterSpec::moving_average(5),
      ForecasterSpec::moving_average(20),   ForecasterSpec::ar_ols(1),
      ForecasterSpec::ar_ols(3),            ForecasterSpec::ar_ols(8),
      ForecasterSpec::exp_smoothing(0.3),   ForecasterSpec::exp_smoothing(0.7),
      ForecasterSpec::holt_linear(0.5, 0.1), ForecasterSpec::holt_linear(0.3, 0.05),
  };
}

// ---------------------------------------------------------------------------
// Fitting and prediction

FittedForecaster fit(const ForecasterSpec& spec, const TimeSeries& train) {
  spec.validate();
  FittedForecaster model;
  model.spec_ = spec;
  const Index T = train.length();
  require(T >= spec.min_context(), spec.id() + ": training series shorter than the model context (" +
                                       std::to_string(spec.min_context()) + ")");
  if (spec.kind != ForecasterKind::ar_ols) return model;

  const Index p = spec.param;
  const Index rows = T - p;
  require(rows >= p + 1, spec.id() + ": training series too short for least squares (need " +
                             std::to_string(2 * p + 1) + " rows)");
  for (Index v = 0; v < train.variables(); ++v) {
    const auto x = train.values().col(v);
    Matrix design(rows, p + 1);
    Vector response(rows);
    for (Index r = 0; r < rows; ++r) {
      const Index t = r + p;
      design(r, 0) = 1.0;
      for (Index lag = 1; lag <= p; ++lag) design(r, lag) = x(t - lag);
      response(r) = x(t);
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    Vector coef;
    if (qr.rank() == p + 1) coef = qr.solve(response);
    if (coef.size() == 0 || !coef.allFinite()) {
      model.fallback_.push_back(v);
      coef = Vector::Zero(p + 1);
      coef(1) = 1.0;  // persistence: x_t = x_{t-1}
    }
    model.ar_coef_.push_back(std::move(coef));
  }
  return model;
}

Matrix FittedForecaster::predict(const Matrix& input, Index horizon) const {
  require(horizon >= 1, "forecast horizon must be >= 1");
  require(input.rows() >= spec_.min_context(), id() + ": input window shorter than model context");
  require(input.cols() >= 1, "input window has no variables");
  if (!input.allFinite()) fail(ErrorCode::numeric, id() + ": non-finite value in input window");

  const Index L = input.rows();
  const Index c = input.cols();
  Matrix out(horizon, c);

  switch (spec_.kind) {
    case ForecasterKind::persistence:
      out = input.row(L - 1).replicate(horizon, 1);
      break;
    case ForecasterKind::seasonal_naive: {
      const Index period = spec_.param;
      for (Index h = 0; h < horizon; ++h) out.row(h) = input.row(L - period + h % period);
      break;
    }
    case ForecasterKind::moving_average:
      out = input.bottomRows(spec_.param).colwise().mean().replicate(horizon, 1);
      break;
    case ForecasterKind::ar_ols: {
      require(static_cast<Index>(ar_coef_.size()) == c, id() + ": variable count differs from training data");
      const Index p = spec_.param;
      for (Index v = 0; v < c; ++v) {
        const Vector& coef = ar_coef_[v];
        // history holds the last p values, most recent last
        std::vector<double> history(input.col(v).data() + (L - p), input.col(v).data() + L);
        for (Index h = 0; h < horizon; ++h) {
          double next = coef(0);
          for (Index lag = 1; lag <= p; ++lag) next += coef(lag) * history[history.size() - lag];
          out(h, v) = next;
          history.push_back(next);
        }
      }
      break;
    }
    case ForecasterKind::exp_smoothing: {
      const double a = spec_.alpha;
      for (Index v = 0; v < c; ++v) {
        double level = input(0, v);
        for (Index t = 1; t < L; ++t) level = a * input(t, v) + (1.0 - a) * level;
        out.col(v).setConstant(level);
      }
      break;
    }
    case ForecasterKind::holt_linear: {
      const double a = spec_.alpha;
      const double b = spec_.beta;
      for (Index v = 0; v < c; ++v) {
        double level = input(0, v);
        double trend = input(1, v) - input(0, v);
        for (Index t = 1; t < L; ++t) {
          const double prev = level;
          level = a * input(t, v) + (1.0 - a) * (level + trend);
          trend = b * (level - prev) + (1.0 - b) * trend;
        }
        for (Index h = 0; h < horizon; ++h) out(h, v) = level + static_cast<double>(h + 1) * trend;
      }
      break;
    }
  }
  if (!out.allFinite()) fail(ErrorCode::numeric, id() + ": forecast diverged to non-finite values");
  return out;
}

// ---------------------------------------------------------------------------
// Ensembles

void EnsembleForecast::validate() const {
  require(!predictions.empty(), "ensemble forecast for window " + std::to_string(window_id) + " has no members");
  require(member_ids.size() == predictions.size(), "member id count does not match prediction count");
  std::set<std::string> seen;
  for (std::size_t m = 0; m < predictions.size(); ++m) {
    require(seen.insert(member_ids[m]).second, "duplicate ensemble member '" + member_ids[m] + "'");
    require(predictions[m].rows() == horizon() && predictions[m].cols() == variables(),
            "member '" + member_ids[m] + "' has a mismatched prediction shape");
    if (!predictions[m].allFinite()) fail(ErrorCode::numeric, "member '" + member_ids[m] + "' has non-finite values");
  }
}

std::vector<EnsembleForecast> run_ensemble(std::span<const FittedForecaster> models, std::span<const WindowPair> windows,
                                           Index horizon, unsigned jobs) {
  require(!models.empty(), "ensemble needs at least one model");
  std::set<std::string> ids;
  for (const auto& m : models) require(ids.insert(m.id()).second, "duplicate ensemble member '" + m.id() + "'");

  std::vector<EnsembleForecast> out(windows.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t w = begin; w < end; ++w) {
      auto& f = out[w];
      f.window_id = windows[w].window_id;
      f.origin = windows[w].origin;
      for (const auto& m : models) {
        f.member_ids.push_back(m.id());
        f.predictions.push_back(m.predict(windows[w].input, horizon));
      }
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(windows.size(), 1))));
  if (jobs == 1) {
    work(0, windows.size());
    return out;
  }
  std::vector<std::exception_ptr> errors(jobs);
  {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (windows.size() + jobs - 1) / jobs;
    for (unsigned j = 0; j < jobs; ++j) {
      const std::size_t begin = j * chunk;
      const std::size_t end = std::min(windows.size(), begin + chunk);
      pool.emplace_back([&, j, begin, end] {
        try {
          work(begin, end);
        } catch (...) {
          errors[j] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::vector<ForecastScore> evaluate_members(std::span<const EnsembleForecast> forecasts, std::span<const Matrix> targets) {
  require(!forecasts.empty(), "no validation windows to score members on");
  require(forecasts.size() == targets.size(), "forecast and target window counts differ");
  const auto& ids = forecasts.front().member_ids;
  std::vector<double> sq(ids.size(), 0.0), abs(ids.size(), 0.0);
  double cells = 0.0;
  for (std::size_t w = 0; w < forecasts.size(); ++w) {
    const auto& f = forecasts[w];
    require(f.member_ids == ids, "member set differs between windows");
    for (std::size_t m = 0; m < ids.size(); ++m) {
      require(f.predictions[m].rows() == targets[w].rows() && f.predictions[m].cols() == targets[w].cols(),
              "prediction and target shapes differ in window " + std::to_string(f.window_id));
      const Matrix err = f.predictions[m] - targets[w];
      sq[m] += err.squaredNorm();
      abs[m] += err.cwiseAbs().sum();
    }
    cells += static_cast<double>(targets[w].size());
  }
  std::vector<ForecastScore> out;
  for (std::size_t m = 0; m < ids.size(); ++m) out.push_back({ids[m], sq[m] / cells, abs[m] / cells});
  return out;
}

SelectionCriterion parse_criterion(std::string_view text) {
  if (text == "mse") return SelectionCriterion::mse;
  if (text == "mae") return SelectionCriterion::mae;
  fail(ErrorCode::validation, "unknown selection criterion '" + std::string(text) + "' (expected mse or mae)");
}

std::vector<std::string> select_top_k(std::span<const ForecastScore> scores, Index k, SelectionCriterion criterion) {
  std::set<std::string> ids;
  for (const auto& s : scores) require(ids.insert(s.member_id).second, "duplicate member id '" + s.member_id + "'");
  if (k < 2 || k > static_cast<Index>(scores.size())) {
    fail(ErrorCode::validation, "top-k must lie in [2, " + std::to_string(scores.size()) + "], got " + std::to_string(k));
  }
  std::vector<const ForecastScore*> order;
  for (const auto& s : scores) order.push_back(&s);
  auto key = [criterion](const ForecastScore* s) { return criterion == SelectionCriterion::mse ? s->mse : s->mae; };
  std::sort(order.begin(), order.end(), [&](const ForecastScore* a, const ForecastScore* b) {
    if (key(a) != key(b)) return key(a) < key(b);
    return a->member_id < b->member_id;
  });
  std::vector<std::string> out;
  for (Index i = 0; i < k; ++i) out.push_back(order[i]->member_id);
  return out;
}

std::vector<EnsembleForecast> restrict_members(std::span<const EnsembleForecast> forecasts,
                                               std::span<const std::string> member_ids) {
  std::vector<EnsembleForecast> out;
  out.reserve(forecasts.size());
  for (const auto& f : forecasts) {
    EnsembleForecast g;
    g.window_id = f.window_id;
    g.origin = f.origin;
    for (const auto& id : member_ids) {
      auto it = std::find(f.member_ids.begin(), f.member_ids.end(), id);
      require(it != f.member_ids.end(), "member '" + id + "' missing from window " + std::to_string(f.window_id));
      g.member_ids.push_back(id);
      g.predictions.push_back(f.predictions[static_cast<std::size_t>(it - f.member_ids.begin())]);
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace poakit
