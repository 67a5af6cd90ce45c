// poakit command-line driver. Stages exchange data only through files.

#include "poakit/detect.hpp"
#include "poakit/forecast.hpp"
#include "poakit/io.hpp"
#include "poakit/metrics.hpp"
#include "poakit/pipeline.hpp"
#include "poakit/synth.hpp"
#include "poakit/uncertainty.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace poakit;

namespace {

// Fixed file names inside a run directory.
namespace names {
constexpr const char* train = "train.csv";
constexpr const char* valid = "valid.csv";
constexpr const char* test = "test.csv";
constexpr const char* labels = "labels.csv";
constexpr const char* precursors = "precursors.csv";
constexpr const char* config = "config.json";
constexpr const char* scoreboard = "scoreboard.csv";
constexpr const char* fit_report = "fit_report.txt";
constexpr const char* forecasts_valid = "forecasts_valid.csv";
constexpr const char* forecasts_test = "forecasts_test.csv";
constexpr const char* scores = "scores.csv";
constexpr const char* detection = "detection.csv";
constexpr const char* report = "report.json";
constexpr const char* theta_curve = "theta_curve.csv";
constexpr const char* timeline = "timeline.csv";
constexpr const char* summary = "summary.json";
constexpr const char* manifest = "manifest.json";
}  // namespace names

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io, "cannot create directory " + dir.string() + ": " + ec.message());
}

std::uint64_t parse_seed(const std::string& text, const std::string& what) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    fail(ErrorCode::validation, what + " is not an unsigned integer: '" + text + "'");
  }
  return v;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) fail(ErrorCode::validation, what + ": empty list entry");
    out.push_back(parse_double_field(item, what));
  }
  require(!out.empty(), what + ": empty list");
  return out;
}

void write_manifest(const fs::path& dir, const std::string& command, const std::string& config_json,
                    std::uint64_t seed, const std::vector<fs::path>& files) {
  write_text(dir / names::manifest, run_manifest_json(command, config_json, seed, files));
}

// ---------------------------------------------------------------------------
// Shared option groups

struct MetricFlags {
  MetricParams params;
  std::size_t theta_points = 101;

  void add(CLI::App* app) {
    app->add_option("--alpha", params.alpha, "weight of the detection term")->capture_default_str();
    app->add_option("--beta", params.beta, "weight of the portion term")->capture_default_str();
    app->add_option("--gamma", params.gamma, "weight of the early-detection term")->capture_default_str();
    app->add_option("--epsilon", params.epsilon, "lead with maximal early reward")->capture_default_str();
    app->add_option("--k", params.k, "early-reward decay")->capture_default_str();
    app->add_option("--delta", params.delta, "ambiguous window length")->capture_default_str();
    app->add_option("--theta", params.theta, "overlap threshold for the headline F1")->capture_default_str();
    app->add_option("--tapr-alpha", params.tapr_alpha, "TaPR detection weight")->capture_default_str();
    app->add_option("--early-point", early_point_, "earliest|max-reward")->capture_default_str();
    app->add_option("--theta-grid", theta_points, "number of evenly spaced theta values")->capture_default_str();
  }

  MetricParams resolved() const {
    MetricParams p = params;
    p.early_point = parse_early_point(early_point_);
    p.validate();
    return p;
  }

  std::vector<double> thetas() const {
    require(theta_points >= 2, "--theta-grid needs at least 2 points");
    return default_theta_grid(theta_points);
  }

 private:
  std::string early_point_ = "earliest";
};

struct ScoreFlags {
  std::string agg = "mean";
  std::string collate = "max";
  bool no_normalize = false;
  double eps_sigma = kDefaultEpsSigma;

  void add(CLI::App* app) {
    app->add_option("--agg", agg, "variable aggregation: mean|max")->capture_default_str();
    app->add_option("--collate", collate, "timeline collation: max|latest|earliest")->capture_default_str();
    app->add_flag("--no-normalize", no_normalize, "score raw ensemble variance");
    app->add_option("--eps-sigma", eps_sigma, "floor on the normalizing deviation")->capture_default_str();
  }

  ScoreOptions resolved() const {
    require(eps_sigma > 0.0, "--eps-sigma must be positive");
    return {!no_normalize, eps_sigma, parse_aggregation(agg), parse_collate(collate)};
  }
};

struct WindowFlags {
  WindowConfig window;

  void add(CLI::App* app) {
    app->add_option("--lx", window.input_len, "input window length")->capture_default_str();
    app->add_option("--ly", window.horizon_len, "forecast horizon")->capture_default_str();
    app->add_option("--stride", window.stride, "window stride")->capture_default_str();
  }
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

struct MetricSet {
  bool ptapr = false, tapr = false, pak = false;
};

MetricSet parse_metric_set(const std::string& text) {
  MetricSet m;
  for (const auto& item : split_list(text)) {
    if (item == "ptapr") m.ptapr = true;
    else if (item == "tapr") m.tapr = true;
    else if (item == "pak") m.pak = true;
    else fail(ErrorCode::validation, "unknown metric '" + item + "' (expected ptapr, tapr or pak)");
  }
  require(m.ptapr, "--metrics must include ptapr");
  return m;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string config;
  std::string out;
};

SynthConfig load_synth_config(const std::string& path) {
  SynthConfig cfg = path.empty() ? default_synth_config() : synth_config_from_json(read_text(path));
  if (const char* env = std::getenv("POAKIT_SEED"); env && *env) cfg.seed = parse_seed(env, "POAKIT_SEED");
  cfg.validate();
  return cfg;
}

void write_dataset(const fs::path& dir, const SynthConfig& cfg, const SynthDataset& data) {
  ensure_dir(dir);
  write_series_csv(dir / names::train, data.train);
  write_series_csv(dir / names::test, data.test);
  write_labels_csv(dir / names::labels, data.labels);
  write_labels_csv(dir / names::precursors,
                   LabelSequence(flags_from_segments(data.precursor_truth, data.test.length())));
  write_text(dir / names::config, synth_config_to_json(cfg));
}

int run_synth(const SynthArgs& a) {
  const SynthConfig cfg = load_synth_config(a.config);
  const fs::path dir(a.out);
  write_dataset(dir, cfg, generate(cfg));
  write_manifest(dir, "synth", synth_config_to_json(cfg), cfg.seed,
                 {dir / names::train, dir / names::test, dir / names::labels, dir / names::precursors,
                  dir / names::config});
  return 0;
}

// ---------------------------------------------------------------------------
// split

struct SplitArgs {
  std::string series;
  double train_frac = 0.7;
  std::string out;
};

int run_split(const SplitArgs& a) {
  const auto [train, valid] = chronological_split(read_series_csv(a.series), a.train_frac);
  const fs::path dir(a.out);
  ensure_dir(dir);
  write_series_csv(dir / names::train, train);
  write_series_csv(dir / names::valid, valid);
  write_manifest(dir, "split", json{{"train_frac", a.train_frac}}.dump(), 0,
                 {fs::path(a.series), dir / names::train, dir / names::valid});
  return 0;
}

// ---------------------------------------------------------------------------
// forecast

struct ForecastArgs {
  std::string train, valid, test;
  std::string members;
  Index top_k = 5;
  std::string criterion = "mse";
  unsigned jobs = 1;
  WindowFlags window;
  std::string out;
};

void write_scoreboard(const fs::path& path, const std::vector<ForecastScore>& board,
                      const std::vector<std::string>& selected) {
  std::ostringstream out;
  out << "member_id,mse,mae,selected,rank\n";
  for (const auto& s : board) {
    const auto it = std::find(selected.begin(), selected.end(), s.member_id);
    const bool chosen = it != selected.end();
    out << csv_escape(s.member_id) << "," << format_float(s.mse) << "," << format_float(s.mae) << ","
        << (chosen ? 1 : 0) << ",";
    if (chosen) out << (it - selected.begin()) + 1;
    out << "\n";
  }
  write_text(path, out.str());
}

int run_forecast(const ForecastArgs& a) {
  ForecastStageOptions opt;
  opt.window = a.window.window;
  if (!a.members.empty()) opt.members = parse_member_list(a.members);
  opt.top_k = a.top_k;
  opt.criterion = parse_criterion(a.criterion);
  opt.jobs = a.jobs;
  require(a.jobs >= 1, "--jobs must be at least 1");

  const auto result =
      run_forecast_stage(read_series_csv(a.train), read_series_csv(a.valid), read_series_csv(a.test), opt);

  const fs::path dir(a.out);
  ensure_dir(dir);
  write_scoreboard(dir / names::scoreboard, result.scoreboard, result.selected);
  write_forecasts(dir / names::forecasts_valid, result.validation);
  write_forecasts(dir / names::forecasts_test, result.test);
  std::string fit_lines;
  for (const auto& line : result.fit_report) fit_lines += line + "\n";
  write_text(dir / names::fit_report, fit_lines);

  json members = json::array();
  for (const auto& m : opt.members) members.push_back(m.id());
  const json cfg = {{"members", members},
                    {"top_k", a.top_k},
                    {"criterion", a.criterion},
                    {"lx", opt.window.input_len},
                    {"ly", opt.window.horizon_len},
                    {"stride", opt.window.stride}};
  write_manifest(dir, "forecast", cfg.dump(), 0,
                 {fs::path(a.train), fs::path(a.valid), fs::path(a.test), dir / names::scoreboard,
                  dir / names::forecasts_valid, dir / names::forecasts_test, dir / names::fit_report});
  return 0;
}

// ---------------------------------------------------------------------------
// score

struct ScoreArgs {
  std::string forecasts;
  std::string valid_stats;
  std::string series;
  Index length = 0;
  ScoreFlags flags;
  std::string out;
};

int run_score(const ScoreArgs& a) {
  const ScoreOptions opt = a.flags.resolved();
  if (opt.normalize && a.valid_stats.empty()) {
    fail(ErrorCode::validation, "--valid-stats is required unless --no-normalize is given");
  }
  if (a.series.empty() == (a.length == 0)) fail(ErrorCode::validation, "give exactly one of --series and --length");
  const Index len = a.length > 0 ? a.length : read_series_csv(a.series).length();

  const auto test = ingest_external_forecasts(a.forecasts);
  std::vector<EnsembleForecast> valid;
  if (opt.normalize) valid = ingest_external_forecasts(a.valid_stats);
  write_scores(a.out, score_forecasts(valid, test, len, opt));
  return 0;
}

// ---------------------------------------------------------------------------
// detect

struct DetectArgs {
  std::string scores;
  std::string labels;
  std::size_t grid_n = 256;
  std::string metric = "ptapr-f1@0";
  std::optional<double> threshold;
  unsigned jobs = 1;
  MetricFlags metric_flags;
  std::string out;
};

int run_detect(const DetectArgs& a) {
  require(a.jobs >= 1, "--jobs must be at least 1");
  const ScoreSeries scores = read_scores(a.scores);
  json meta;
  Detection d;
  if (a.threshold) {
    if (!a.labels.empty()) fail(ErrorCode::validation, "--threshold and --labels are mutually exclusive");
    d = apply_threshold(scores, *a.threshold);
    meta = {{"threshold", *a.threshold}, {"mode", "fixed"}};
  } else {
    if (a.labels.empty()) fail(ErrorCode::validation, "threshold search needs --labels (or pass --threshold)");
    const LabelSequence labels = read_labels_csv(a.labels);
    require(labels.length() == scores.length(), "labels and scores differ in length");
    const ThresholdMetric metric = ThresholdMetric::parse(a.metric);
    const auto grid = default_grid(scores, a.grid_n);
    const auto choice =
        best_f1_threshold(scores, grid, make_threshold_callback(metric, labels, a.metric_flags.resolved()), a.jobs);
    d = apply_threshold(scores, choice.threshold);
    meta = {{"threshold", choice.threshold},
            {"mode", "best-f1"},
            {"metric", metric.to_string()},
            {"f1", choice.f1},
            {"undefined", choice.undefined},
            {"grid_size", grid.size()}};
  }
  write_detection(a.out, d, meta.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  std::string detection;
  std::string labels;
  std::string metrics = "ptapr,tapr,pak";
  MetricFlags metric_flags;
  std::string out;
  std::string curve;
};

int run_evaluate(const EvaluateArgs& a) {
  const MetricSet set = parse_metric_set(a.metrics);
  EvaluateOptions opt;
  opt.params = a.metric_flags.resolved();
  opt.thetas = a.metric_flags.thetas();
  opt.tapr = set.tapr;
  opt.pak = set.pak;
  const auto report = evaluate_detection(read_detection(a.detection), read_labels_csv(a.labels), opt);
  const fs::path out(a.out);
  fs::path curve = a.curve.empty() ? out.parent_path() / names::theta_curve : fs::path(a.curve);
  write_report(out, curve, report);
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
  std::string scores;
  std::string labels;
  std::string param;
  std::string values;
  std::string metric = "ptapr-f1@0";
  std::size_t grid_n = 256;
  unsigned jobs = 1;
  MetricFlags metric_flags;
  std::string out;
};

SweepParam parse_sweep_param(const std::string& text) {
  if (text == "k") return SweepParam::k;
  if (text == "epsilon") return SweepParam::epsilon;
  fail(ErrorCode::validation, "unknown sweep parameter '" + text + "' (expected k or epsilon)");
}

int run_sweep(const SweepArgs& a) {
  require(a.jobs >= 1, "--jobs must be at least 1");
  const SweepParam param = parse_sweep_param(a.param);
  const auto values = parse_double_list(a.values, "--values");
  EvaluateOptions opt;
  opt.params = a.metric_flags.resolved();
  opt.thetas = a.metric_flags.thetas();
  const auto points = sensitivity_sweep(read_scores(a.scores), read_labels_csv(a.labels), param, values,
                                        ThresholdMetric::parse(a.metric), opt, a.grid_n, a.jobs);
  std::ostringstream out;
  out << "param,value,threshold,f1_0,f1_1,auc\n";
  for (const auto& p : points) {
    out << a.param << "," << format_float(p.value) << "," << format_float(p.threshold) << ","
        << format_float(p.f1_at_0) << "," << format_float(p.f1_at_1) << "," << format_float(p.auc) << "\n";
  }
  write_text(a.out, out.str());
  return 0;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
  std::string run_dir;
};

json csv_to_json(const fs::path& path) {
  const CsvTable t = read_csv(path);
  json rows = json::array();
  for (const auto& row : t.rows) {
    json obj = json::object();
    for (std::size_t c = 0; c < t.header.size() && c < row.size(); ++c) obj[t.header[c]] = row[c];
    rows.push_back(obj);
  }
  return rows;
}

int run_report(const ReportArgs& a);

// A directory of per-entity run directories: report each, then macro-average.
int run_entity_report(const fs::path& dir) {
  std::vector<fs::path> entities;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory() && fs::exists(e.path() / names::scores)) entities.push_back(e.path());
  if (entities.empty()) fail(ErrorCode::io, "no " + std::string(names::scores) + " in " + dir.string() +
                                                " or its entity subdirectories");
  std::sort(entities.begin(), entities.end());
  json listed = json::array();
  std::vector<std::string> reports;
  for (const auto& e : entities) {
    run_report({e.string()});
    listed.push_back(e.filename().string());
    if (fs::exists(e / names::report)) reports.push_back(read_text(e / names::report));
  }
  json summary = {{"entities", listed}, {"reports_averaged", reports.size()}};
  if (!reports.empty()) summary["macro"] = json::parse(macro_average_reports(reports));
  write_text(dir / names::summary, summary.dump(2) + "\n");
  return 0;
}

int run_report(const ReportArgs& a) {
  const fs::path dir(a.run_dir);
  if (!fs::is_directory(dir)) fail(ErrorCode::io, "run directory not found: " + dir.string());
  if (!fs::exists(dir / names::scores)) return run_entity_report(dir);
  const ScoreSeries scores = read_scores(dir / names::scores);
  const LabelSequence labels = read_labels_csv(dir / names::labels);
  require(labels.length() == scores.length(), "labels and scores differ in length");
  const bool has_detection = fs::exists(dir / names::detection);
  const bool has_precursors = fs::exists(dir / names::precursors);
  Detection detection;
  if (has_detection) {
    detection = read_detection(dir / names::detection);
    require(detection.length() == scores.length(), "detection and scores differ in length");
  }
  LabelSequence precursors;
  if (has_precursors) {
    precursors = read_labels_csv(dir / names::precursors);
    require(precursors.length() == scores.length(), "precursor truth and scores differ in length");
  }

  std::ostringstream tl;
  tl << "timestamp,score,lead_time,label";
  if (has_precursors) tl << ",precursor";
  if (has_detection) tl << ",flag";
  tl << "\n";
  for (Index i = 0; i < scores.length(); ++i) {
    tl << i << ",";
    if (scores.scores[i]) tl << format_float(*scores.scores[i]);
    tl << ",";
    if (scores.lead_times[i]) tl << *scores.lead_times[i];
    tl << "," << int(labels.flags()[i]);
    if (has_precursors) tl << "," << int(precursors.flags()[i]);
    if (has_detection) tl << "," << int(detection.flags[i]);
    tl << "\n";
  }
  write_text(dir / names::timeline, tl.str());

  json summary = json::object();
  json anomalies = json::array();
  for (const auto& s : segments_from_flags(labels.flags())) anomalies.push_back({{"start", s.start}, {"length", s.length}});
  summary["anomalies"] = anomalies;
  if (fs::exists(dir / names::report)) summary["report"] = json::parse(read_text(dir / names::report));
  if (has_detection && fs::exists(detection_sidecar_path(dir / names::detection))) {
    summary["detection"] = json::parse(read_text(detection_sidecar_path(dir / names::detection)));
  }
  if (fs::exists(dir / names::scoreboard)) summary["scoreboard"] = csv_to_json(dir / names::scoreboard);
  json sweeps = json::object();
  for (const char* p : {"k", "epsilon"}) {
    const fs::path f = dir / (std::string("sweep_") + p + ".csv");
    if (fs::exists(f)) sweeps[p] = csv_to_json(f);
  }
  if (!sweeps.empty()) summary["sweeps"] = sweeps;
  json plots = {{"timeline", names::timeline}};
  if (fs::exists(dir / names::theta_curve)) plots["theta_curve"] = names::theta_curve;
  summary["plot_files"] = plots;
  write_text(dir / names::summary, summary.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------
// pipeline: every stage on a synth dataset, through the same files

struct PipelineArgs {
  std::string data;
  std::string config;
  std::string out;
  double train_frac = 0.7;
  std::string members;
  Index top_k = 5;
  std::string criterion = "mse";
  WindowFlags window;
  ScoreFlags score;
  std::string metric = "ptapr-f1@0";
  std::size_t grid_n = 256;
  std::string k_values = "0.1,0.01,0.001,0.0001";
  unsigned jobs = 1;
  MetricFlags metric_flags;
};

int run_pipeline_cmd(const PipelineArgs& a) {
  const fs::path dir(a.out);
  ensure_dir(dir);
  const fs::path data = a.data.empty() ? dir / "data" : fs::path(a.data);
  if (a.data.empty()) {
    const SynthConfig cfg = load_synth_config(a.config);
    write_dataset(data, cfg, generate(cfg));
  } else if (!a.config.empty()) {
    fail(ErrorCode::validation, "--data and --config are mutually exclusive");
  } else if (fs::weakly_canonical(data) == fs::weakly_canonical(dir)) {
    fail(ErrorCode::validation, "--data must differ from --out (the split would overwrite train.csv)");
  }
  for (const char* f : {names::test, names::labels, names::precursors, names::config}) {
    if (fs::exists(data / f)) fs::copy_file(data / f, dir / f, fs::copy_options::overwrite_existing);
  }

  run_split({(data / names::train).string(), a.train_frac, dir.string()});
  run_forecast({(dir / names::train).string(), (dir / names::valid).string(), (dir / names::test).string(), a.members,
                a.top_k, a.criterion, a.jobs, a.window, dir.string()});
  run_score({(dir / names::forecasts_test).string(), (dir / names::forecasts_valid).string(),
             (dir / names::test).string(), 0, a.score, (dir / names::scores).string()});
  run_detect({(dir / names::scores).string(), (dir / names::labels).string(), a.grid_n, a.metric, std::nullopt, a.jobs,
              a.metric_flags, (dir / names::detection).string()});
  run_evaluate({(dir / names::detection).string(), (dir / names::labels).string(), "ptapr,tapr,pak", a.metric_flags,
                (dir / names::report).string(), ""});
  if (!a.k_values.empty()) {
    run_sweep({(dir / names::scores).string(), (dir / names::labels).string(), "k", a.k_values, a.metric, a.grid_n,
               a.jobs, a.metric_flags, (dir / "sweep_k.csv").string()});
  }
  run_report({dir.string()});

  std::uint64_t seed = 0;
  if (fs::exists(dir / names::config)) seed = synth_config_from_json(read_text(dir / names::config)).seed;
  const json cfg = {{"data", a.data.empty() ? std::string("generated") : a.data},
                    {"train_frac", a.train_frac},
                    {"members", a.members.empty() ? "default" : a.members},
                    {"top_k", a.top_k},
                    {"criterion", a.criterion},
                    {"lx", a.window.window.input_len},
                    {"ly", a.window.window.horizon_len},
                    {"stride", a.window.window.stride},
                    {"metric", a.metric},
                    {"grid_n", a.grid_n},
                    {"k_values", a.k_values}};
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != names::manifest) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  write_manifest(dir, "pipeline", cfg.dump(), seed, files);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"poakit: precursor-of-anomaly detection and evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "generate a synthetic dataset");
  c_synth->add_option("--config", synth.config, "JSON config (defaults when omitted)");
  c_synth->add_option("--out", synth.out, "output directory")->required();

  SplitArgs split;
  auto* c_split = app.add_subcommand("split", "chronological train/validation split");
  c_split->add_option("series", split.series, "series CSV")->required();
  c_split->add_option("--train-frac", split.train_frac, "training fraction")->capture_default_str();
  c_split->add_option("--out", split.out, "output directory")->required();

  ForecastArgs fc;
  auto* c_fc = app.add_subcommand("forecast", "fit members, select top-K and forecast");
  c_fc->add_option("--train", fc.train, "training series CSV")->required();
  c_fc->add_option("--valid", fc.valid, "validation series CSV")->required();
  c_fc->add_option("--test", fc.test, "test series CSV")->required();
  c_fc->add_option("--members", fc.members, "comma-separated member specs (default pool when omitted)");
  c_fc->add_option("--top-k", fc.top_k, "ensemble size")->capture_default_str();
  c_fc->add_option("--criterion", fc.criterion, "selection criterion: mse|mae")->capture_default_str();
  c_fc->add_option("--jobs", fc.jobs, "worker threads")->capture_default_str();
  fc.window.add(c_fc);
  c_fc->add_option("--out", fc.out, "output directory")->required();

  ScoreArgs sc;
  auto* c_sc = app.add_subcommand("score", "uncertainty scores from forecast records");
  c_sc->add_option("--forecasts", sc.forecasts, "test forecast records")->required();
  c_sc->add_option("--valid-stats", sc.valid_stats, "validation forecast records for normalization")
      ;
  c_sc->add_option("--series", sc.series, "test series CSV (sets the timeline length)");
  c_sc->add_option("--length", sc.length, "timeline length");
  sc.flags.add(c_sc);
  c_sc->add_option("--out", sc.out, "scores CSV")->required();

  DetectArgs dt;
  auto* c_dt = app.add_subcommand("detect", "threshold scores into a detection");
  c_dt->add_option("--scores", dt.scores, "scores CSV")->required();
  c_dt->add_option("--labels", dt.labels, "labels CSV for best-F1 search");
  c_dt->add_option("--grid-n", dt.grid_n, "quantile grid size")->capture_default_str();
  c_dt->add_option("--metric", dt.metric, "ptapr-f1@<theta>|ptapr-auc|point-f1")->capture_default_str();
  c_dt->add_option("--threshold", dt.threshold, "fixed threshold instead of a search");
  c_dt->add_option("--jobs", dt.jobs, "worker threads")->capture_default_str();
  dt.metric_flags.add(c_dt);
  c_dt->add_option("--out", dt.out, "detection CSV")->required();

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "score a detection against labels");
  c_ev->add_option("--detection", ev.detection, "detection CSV")->required();
  c_ev->add_option("--labels", ev.labels, "labels CSV")->required();
  c_ev->add_option("--metrics", ev.metrics, "subset of ptapr,tapr,pak")->capture_default_str();
  ev.metric_flags.add(c_ev);
  c_ev->add_option("--out", ev.out, "report JSON")->required();
  c_ev->add_option("--curve", ev.curve, "theta-curve CSV (next to the report by default)");

  SweepArgs sw;
  auto* c_sw = app.add_subcommand("sweep", "metric sensitivity to k or epsilon");
  c_sw->add_option("--scores", sw.scores, "scores CSV")->required();
  c_sw->add_option("--labels", sw.labels, "labels CSV")->required();
  c_sw->add_option("--param", sw.param, "k|epsilon")->required();
  c_sw->add_option("--values", sw.values, "comma-separated values")->required();
  c_sw->add_option("--metric", sw.metric, "threshold-search metric")->capture_default_str();
  c_sw->add_option("--grid-n", sw.grid_n, "quantile grid size")->capture_default_str();
  c_sw->add_option("--jobs", sw.jobs, "worker threads")->capture_default_str();
  sw.metric_flags.add(c_sw);
  c_sw->add_option("--out", sw.out, "sweep CSV")->required();

  ReportArgs rp;
  auto* c_rp = app.add_subcommand("report", "consolidated JSON and plot CSVs for a run directory");
  c_rp->add_option("run_dir", rp.run_dir, "run directory, or a directory of per-entity run directories")->required();

  PipelineArgs pl;
  auto* c_pl = app.add_subcommand("pipeline", "run every stage on a synthetic dataset");
  c_pl->add_option("--data", pl.data, "directory from `synth` (generated when omitted)");
  c_pl->add_option("--config", pl.config, "synth JSON config when generating");
  c_pl->add_option("--out", pl.out, "run directory")->required();
  c_pl->add_option("--train-frac", pl.train_frac, "training fraction")->capture_default_str();
  c_pl->add_option("--members", pl.members, "comma-separated member specs");
  c_pl->add_option("--top-k", pl.top_k, "ensemble size")->capture_default_str();
  c_pl->add_option("--criterion", pl.criterion, "mse|mae")->capture_default_str();
  pl.window.add(c_pl);
  pl.score.add(c_pl);
  c_pl->add_option("--metric", pl.metric, "threshold-search metric")->capture_default_str();
  c_pl->add_option("--grid-n", pl.grid_n, "quantile grid size")->capture_default_str();
  c_pl->add_option("--k-values", pl.k_values, "k sweep values (empty to skip)")->capture_default_str();
  c_pl->add_option("--jobs", pl.jobs, "worker threads")->capture_default_str();
  pl.metric_flags.add(c_pl);

  try {
    app.parse(argc, argv);
    if (*c_synth) return run_synth(synth);
    if (*c_split) return run_split(split);
    if (*c_fc) return run_forecast(fc);
    if (*c_sc) return run_score(sc);
    if (*c_dt) return run_detect(dt);
    if (*c_ev) return run_evaluate(ev);
    if (*c_sw) return run_sweep(sw);
    if (*c_rp) return run_report(rp);
    if (*c_pl) return run_pipeline_cmd(pl);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error[" << error_code_name(ErrorCode::validation) << "]: " << e.what() << "\n";
    return static_cast<int>(ErrorCode::validation);
  } catch (const Error& e) {
    std::cerr << "error[" << error_code_name(e.code()) << "]: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const json::exception& e) {
    std::cerr << "error[" << error_code_name(ErrorCode::validation) << "]: " << e.what() << "\n";
    return static_cast<int>(ErrorCode::validation);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error[" << error_code_name(ErrorCode::io) << "]: " << e.what() << "\n";
    return static_cast<int>(ErrorCode::io);
  } catch (const std::exception& e) {
    std::cerr << "error[" << error_code_name(ErrorCode::numeric) << "]: " << e.what() << "\n";
    return static_cast<int>(ErrorCode::numeric);
  }
  return 0;
}
