#include "poakit/io.hpp"

#include "poakit/detect.hpp"
#include "poakit/metrics.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace poakit {

std::string format_float(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  fail(ErrorCode::validation, source + ": missing column '" + name + "'");
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::io, "failed writing " + path.string());
}

CsvTable read_csv(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  CsvTable table;
  table.source = path.string();
  std::vector<std::string> row;
  std::string field;
  std::size_t line = 1;
  std::size_t row_line = 1;
  bool quoted = false;
  bool row_has_content = false;
  auto end_row = [&] {
    row.push_back(std::move(field));
    field.clear();
    if (row_has_content || row.size() > 1) {
      if (table.header.empty() && table.rows.empty()) {
        table.header = std::move(row);
      } else {
        table.rows.push_back(std::move(row));
        table.lines.push_back(row_line);
      }
    }
    row.clear();
    row_has_content = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line;
        field += ch;
      }
      continue;
    }
    switch (ch) {
      case '"': quoted = true; row_has_content = true; break;
      case ',': row.push_back(std::move(field)); field.clear(); break;
      case '\r': break;
      case '\n':
        end_row();
        ++line;
        row_line = line;
        break;
      default: field += ch; row_has_content = true;
    }
  }
  if (quoted) fail(ErrorCode::validation, table.source + ": unterminated quoted field");
  if (!field.empty() || !row.empty()) end_row();
  if (table.header.empty()) fail(ErrorCode::validation, table.source + ": empty file");
  return table;
}

double parse_double_field(const std::string& text, const std::string& where) {
  const char* b = text.data();
  const char* e = b + text.size();
  while (b < e && *b == ' ') ++b;
  while (e > b && e[-1] == ' ') --e;
  double v = 0.0;
  auto res = std::from_chars(b, e, v);
  if (b == e || res.ec != std::errc() || res.ptr != e) {
    fail(ErrorCode::validation, where + ": expected a number, got '" + text + "'");
  }
  if (!std::isfinite(v)) fail(ErrorCode::validation, where + ": non-finite value '" + text + "'");
  return v;
}

Index parse_index_field(const std::string& text, const std::string& where) {
  const char* b = text.data();
  const char* e = b + text.size();
  while (b < e && *b == ' ') ++b;
  while (e > b && e[-1] == ' ') --e;
  Index v = 0;
  auto res = std::from_chars(b, e, v);
  if (b == e || res.ec != std::errc() || res.ptr != e) {
    fail(ErrorCode::validation, where + ": expected an integer, got '" + text + "'");
  }
  return v;
}

namespace {

std::string at(const CsvTable& t, std::size_t r) { return t.source + ":" + std::to_string(t.lines[r]); }

void check_timeline(const CsvTable& t, const std::vector<Index>& ts) {
  for (std::size_t r = 1; r < ts.size(); ++r) {
    if (ts[r] == ts[r - 1]) fail(ErrorCode::validation, at(t, r) + ": duplicated timestamp " + std::to_string(ts[r]));
    if (ts[r] != ts[r - 1] + 1) {
      fail(ErrorCode::validation, at(t, r) + ": timestamps must increase by 1 (got " + std::to_string(ts[r - 1]) +
                                      " then " + std::to_string(ts[r]) + ")");
    }
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  return out;
}

}  // namespace

TimeSeries read_series_csv(const std::filesystem::path& path, int index_base) {
  const CsvTable t = read_csv(path);
  require(t.header.size() >= 2, path.string() + ": need a timestamp column and at least one variable");
  if (t.rows.empty()) fail(ErrorCode::validation, path.string() + ": no data rows");
  const auto cols = static_cast<Index>(t.header.size() - 1);
  Matrix values(static_cast<Index>(t.rows.size()), cols);
  std::vector<Index> ts;
  ts.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (row.size() != t.header.size()) {
      fail(ErrorCode::validation, at(t, r) + ": expected " + std::to_string(t.header.size()) + " fields, got " +
                                      std::to_string(row.size()));
    }
    ts.push_back(parse_index_field(row[0], at(t, r)) - index_base);
    for (Index v = 0; v < cols; ++v) values(static_cast<Index>(r), v) = parse_double_field(row[v + 1], at(t, r));
  }
  check_timeline(t, ts);
  return TimeSeries(std::move(ts), std::move(values), std::vector<std::string>(t.header.begin() + 1, t.header.end()));
}

void write_series_csv(const std::filesystem::path& path, const TimeSeries& series, int index_base) {
  auto out = open_out(path);
  out << "timestamp";
  for (Index v = 0; v < series.variables(); ++v) {
    out << "," << (series.variable_names().empty() ? "x" + std::to_string(v) : csv_escape(series.variable_names()[v]));
  }
  out << "\n";
  for (Index r = 0; r < series.length(); ++r) {
    out << series.timestamps()[r] + index_base;
    for (Index v = 0; v < series.variables(); ++v) out << "," << format_float(series.values()(r, v));
    out << "\n";
  }
  if (!out) fail(ErrorCode::io, "failed writing " + path.string());
}

LabelSequence read_labels_csv(const std::filesystem::path& path, int index_base) {
  const CsvTable t = read_csv(path);
  require(t.header.size() == 1 || t.header.size() == 2, path.string() + ": expected [timestamp,] label columns");
  const std::size_t flag_col = t.header.size() - 1;
  Flags flags;
  std::vector<Index> ts;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (row.size() != t.header.size()) fail(ErrorCode::validation, at(t, r) + ": ragged row");
    const Index f = parse_index_field(row[flag_col], at(t, r));
    if (f != 0 && f != 1) fail(ErrorCode::validation, at(t, r) + ": label must be 0 or 1");
    flags.push_back(static_cast<std::uint8_t>(f));
    if (flag_col == 1) ts.push_back(parse_index_field(row[0], at(t, r)) - index_base);
  }
  if (flags.empty()) fail(ErrorCode::validation, path.string() + ": no data rows");
  if (!ts.empty()) {
    check_timeline(t, ts);
    require(ts.front() == 0, path.string() + ": label timeline must start at index " + std::to_string(index_base));
  }
  return LabelSequence(std::move(flags));
}

void write_labels_csv(const std::filesystem::path& path, const LabelSequence& labels, int index_base) {
  auto out = open_out(path);
  out << "timestamp,label\n";
  for (Index i = 0; i < labels.length(); ++i) out << i + index_base << "," << int(labels.flags()[i]) << "\n";
  if (!out) fail(ErrorCode::io, "failed writing " + path.string());
}

std::pair<TimeSeries, TimeSeries> chronological_split(const TimeSeries& series, double train_frac) {
  require(train_frac > 0.0 && train_frac < 1.0, "train fraction must lie in (0, 1)");
  const auto n_train = static_cast<Index>(std::floor(train_frac * static_cast<double>(series.length())));
  require(n_train >= 1 && n_train < series.length(),
          "split of " + std::to_string(series.length()) + " rows leaves an empty part");
  return {series.slice(0, n_train), series.slice(n_train, series.length() - n_train)};
}

void write_scores(const std::filesystem::path& path, const ScoreSeries& scores, int index_base) {
  scores.validate();
  auto out = open_out(path);
  out << "timestamp,score,lead_time\n";
  for (Index i = 0; i < scores.length(); ++i) {
    out << i + index_base << ",";
    if (scores.scores[i]) out << format_float(*scores.scores[i]);
    out << ",";
    if (scores.lead_times[i]) out << *scores.lead_times[i];
    out << "\n";
  }
  if (!out) fail(ErrorCode::io, "failed writing " + path.string());
}

ScoreSeries read_scores(const std::filesystem::path& path, int index_base) {
  const CsvTable t = read_csv(path);
  const std::size_t c_ts = t.column("timestamp"), c_score = t.column("score"), c_lead = t.column("lead_time");
  ScoreSeries s;
  std::vector<Index> ts;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (row.size() != t.header.size()) fail(ErrorCode::validation, at(t, r) + ": ragged row");
    ts.push_back(parse_index_field(row[c_ts], at(t, r)) - index_base);
    if (row[c_score].empty()) {
      s.scores.emplace_back();
    } else {
      s.scores.emplace_back(parse_double_field(row[c_score], at(t, r)));
    }
    if (row[c_lead].empty()) {
      s.lead_times.emplace_back();
    } else {
      s.lead_times.emplace_back(parse_index_field(row[c_lead], at(t, r)));
    }
  }
  check_timeline(t, ts);
  if (!ts.empty()) require(ts.front() == 0, path.string() + ": score timeline must start at index " + std::to_string(index_base));
  s.validate();
  return s;
}

std::filesystem::path detection_sidecar_path(const std::filesystem::path& path) {
  auto p = path;
  p.replace_extension(".meta.json");
  return p;
}

void write_detection(const std::filesystem::path& path, const Detection& d, const std::string& metadata_json,
                     int index_base) {
  auto out = open_out(path);
  out << "timestamp,flag,lead_time\n";
  for (Index i = 0; i < d.length(); ++i) {
    out << i + index_base << "," << int(d.flags[i]) << ",";
    if (d.lead_times[i]) out << *d.lead_times[i];
    out << "\n";
  }
  if (!out) fail(ErrorCode::io, "failed writing " + path.string());
  write_text(detection_sidecar_path(path), metadata_json);
}

Detection read_detection(const std::filesystem::path& path, int index_base) {
  const CsvTable t = read_csv(path);
  const std::size_t c_ts = t.column("timestamp"), c_flag = t.column("flag"), c_lead = t.column("lead_time");
  Detection d;
  std::vector<Index> ts;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (row.size() != t.header.size()) fail(ErrorCode::validation, at(t, r) + ": ragged row");
    ts.push_back(parse_index_field(row[c_ts], at(t, r)) - index_base);
    const Index f = parse_index_field(row[c_flag], at(t, r));
    if (f != 0 && f != 1) fail(ErrorCode::validation, at(t, r) + ": flag must be 0 or 1");
    d.flags.push_back(static_cast<std::uint8_t>(f));
    if (row[c_lead].empty()) {
      d.lead_times.emplace_back();
    } else {
      d.lead_times.emplace_back(parse_index_field(row[c_lead], at(t, r)));
    }
  }
  check_timeline(t, ts);
  const auto sidecar = detection_sidecar_path(path);
  if (std::filesystem::exists(sidecar)) {
    try {
      d.threshold = nlohmann::json::parse(read_text(sidecar)).value("threshold", 0.0);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::validation, sidecar.string() + ": " + e.what());
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

using nlohmann::json;

json segment_json(const Segment& s) { return {{"start", s.start}, {"length", s.length}}; }

json components_json(const ComponentScore& c) {
  return {{"value", c.value}, {"detection", c.detection}, {"portion", c.portion}, {"early", c.early}};
}

json params_json(const MetricParams& p) {
  return {{"theta", p.theta},     {"alpha", p.alpha},   {"beta", p.beta},
          {"gamma", p.gamma},     {"delta", p.delta},   {"epsilon", p.epsilon},
          {"k", p.k},             {"tapr_alpha", p.tapr_alpha},
          {"early_point", p.early_point == EarlyPoint::earliest ? "earliest" : "max-reward"}};
}

}  // namespace

void write_report(const std::filesystem::path& json_path, const std::filesystem::path& curve_csv_path,
                  const MetricReport& r) {
  json anomalies = json::array();
  for (const auto& a : r.ptapr.recall.anomalies) {
    anomalies.push_back({{"segment", segment_json(a.segment)},
                         {"overlap", a.overlap},
                         {"coverage", a.coverage},
                         {"early_reward", a.reward},
                         {"detected", a.detected}});
  }
  json predictions = json::array();
  for (const auto& p : r.ptapr.precision.predictions) {
    predictions.push_back({{"segment", segment_json(p.segment)},
                           {"precursor", p.precursor ? segment_json(*p.precursor) : json(nullptr)},
                           {"overlap", p.overlap},
                           {"ratio", p.ratio},
                           {"early_reward", p.reward},
                           {"correct", p.correct}});
  }
  json curve = json::array();
  for (std::size_t i = 0; i < r.sweep.thetas.size(); ++i) {
    curve.push_back({{"theta", r.sweep.thetas[i]}, {"ptar", r.sweep.ptar[i]}, {"ptap", r.sweep.ptap[i]}, {"f1", r.sweep.f1[i]}});
  }
  json doc = {
      {"params", params_json(r.params)},
      {"ptapr",
       {{"ptar", components_json(r.ptapr.recall)},
        {"ptap", components_json(r.ptapr.precision)},
        {"f1", r.ptapr.f1},
        {"no_predictions", r.ptapr.precision.no_predictions},
        {"f1_0", r.sweep.f1_at_0},
        {"f1_1", r.sweep.f1_at_1},
        {"auc", r.sweep.auc}}},
      {"early_detection", {{"precision", r.early.precision}, {"recall", r.early.recall}, {"f1", r.early.f1}}},
      {"anomalies", anomalies},
      {"predictions", predictions},
      {"theta_curve", curve},
  };
  if (r.tapr) {
    doc["tapr"] = {{"tar", r.tapr->tar}, {"tap", r.tapr->tap}, {"f1", r.tapr->f1}};
  }
  if (r.pak) {
    json k_curve = json::array();
    for (std::size_t i = 0; i < r.pak->k_grid.size(); ++i) {
      k_curve.push_back({{"k", r.pak->k_grid[i]},
                         {"precision", r.pak->curve[i].precision},
                         {"recall", r.pak->curve[i].recall},
                         {"f1", r.pak->curve[i].f1}});
    }
    doc["pak"] = {{"f1_pa", r.pak->f1_pa}, {"f1", r.pak->f1_point}, {"auc", r.pak->auc}, {"curve", k_curve}};
  }
  write_text(json_path, doc.dump(2) + "\n");

  auto out = open_out(curve_csv_path);
  out << "theta,ptar,ptap,f1\n";
  for (std::size_t i = 0; i < r.sweep.thetas.size(); ++i) {
    out << format_float(r.sweep.thetas[i]) << "," << format_float(r.sweep.ptar[i]) << ","
        << format_float(r.sweep.ptap[i]) << "," << format_float(r.sweep.f1[i]) << "\n";
  }
  if (!out) fail(ErrorCode::io, "failed writing " + curve_csv_path.string());
}

std::string sha256_file(const std::filesystem::path& path) {
  const std::string data = read_text(path);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorCode::io, "sha256 failed for " + path.string());
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

namespace {

json average_fields(const std::vector<const json*>& docs) {
  const json& first = *docs.front();
  if (first.is_number()) {
    double sum = 0;
    for (const json* d : docs) {
      if (!d->is_number()) return nullptr;
      sum += d->get<double>();
    }
    return sum / static_cast<double>(docs.size());
  }
  if (!first.is_object()) return nullptr;
  json out = json::object();
  for (const auto& [key, value] : first.items()) {
    std::vector<const json*> children;
    for (const json* d : docs) {
      if (!d->is_object() || !d->contains(key)) break;
      children.push_back(&d->at(key));
    }
    if (children.size() != docs.size()) continue;
    json avg = average_fields(children);
    if (!avg.is_null()) out[key] = std::move(avg);
  }
  return out.empty() ? json(nullptr) : out;
}

}  // namespace

std::string macro_average_reports(std::span<const std::string> reports) {
  require(!reports.empty(), "macro average needs at least one report");
  std::vector<json> parsed;
  for (const auto& r : reports) {
    try {
      parsed.push_back(json::parse(r));
    } catch (const json::exception& e) {
      fail(ErrorCode::validation, std::string("malformed report JSON: ") + e.what());
    }
  }
  std::vector<const json*> docs;
  for (const auto& p : parsed) docs.push_back(&p);
  json avg = average_fields(docs);
  if (avg.is_null()) avg = json::object();
  return avg.dump(2);
}

}  // namespace poakit
