#include "poakit/forecast.hpp"
#include "poakit/io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace poakit {

namespace {

struct Record {
  Index window_id;
  Index origin;
  std::string member_id;
  Index step;
  Index variable;
  double value;
  std::size_t line;
};

bool is_ndjson(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return ext == ".ndjson" || ext == ".jsonl";
}

std::vector<Record> read_csv_records(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  const std::size_t c_win = table.column("window_id"), c_org = table.column("origin"),
                    c_mem = table.column("member_id"), c_step = table.column("step"),
                    c_var = table.column("variable"), c_val = table.column("value");
  std::vector<Record> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = path.string() + ":" + std::to_string(table.lines[r]);
    if (row.size() != table.header.size()) fail(ErrorCode::validation, where + ": ragged row");
    out.push_back({parse_index_field(row[c_win], where), parse_index_field(row[c_org], where), row[c_mem],
                   parse_index_field(row[c_step], where), parse_index_field(row[c_var], where),
                   parse_double_field(row[c_val], where), table.lines[r]});
  }
  return out;
}

std::vector<Record> read_ndjson_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  std::vector<Record> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("window_id").get<Index>(), j.at("origin").get<Index>(), j.at("member_id").get<std::string>(),
                     j.at("step").get<Index>(), j.at("variable").get<Index>(), j.at("value").get<double>(), lineno});
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::validation, where + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

void write_forecasts(const std::filesystem::path& path, std::span<const EnsembleForecast> forecasts) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  const bool ndjson = is_ndjson(path);
  if (!ndjson) out << "window_id,origin,member_id,step,variable,value\n";
  std::string buf;
  for (const auto& f : forecasts) {
    for (std::size_t m = 0; m < f.predictions.size(); ++m) {
      const auto& pred = f.predictions[m];
      const std::string member = ndjson ? nlohmann::json(f.member_ids[m]).dump() : csv_escape(f.member_ids[m]);
      for (Index s = 0; s < pred.rows(); ++s) {
        for (Index v = 0; v < pred.cols(); ++v) {
          if (ndjson) {
            buf = "{\"window_id\":" + std::to_string(f.window_id) + ",\"origin\":" + std::to_string(f.origin) +
                  ",\"member_id\":" + member + ",\"step\":" + std::to_string(s + 1) +
                  ",\"variable\":" + std::to_string(v) + ",\"value\":" + format_float(pred(s, v)) + "}\n";
          } else {
            buf = std::to_string(f.window_id) + "," + std::to_string(f.origin) + "," + member + "," +
                  std::to_string(s + 1) + "," + std::to_string(v) + "," + format_float(pred(s, v)) + "\n";
          }
          out << buf;
        }
      }
    }
  }
  if (!out) fail(ErrorCode::io, "failed writing " + path.string());
}

std::vector<EnsembleForecast> ingest_external_forecasts(const std::filesystem::path& path) {
  const std::vector<Record> records = is_ndjson(path) ? read_ndjson_records(path) : read_csv_records(path);
  if (records.empty()) fail(ErrorCode::validation, path.string() + ": no forecast records");

  auto where = [&](const Record& r) { return path.string() + ":" + std::to_string(r.line); };

  Index horizon = 0;
  Index variables = 0;
  for (const auto& r : records) {
    if (r.step < 1) fail(ErrorCode::validation, where(r) + ": step must be >= 1 (1-based horizon index)");
    if (r.variable < 0) fail(ErrorCode::validation, where(r) + ": variable must be >= 0");
    if (!std::isfinite(r.value)) fail(ErrorCode::validation, where(r) + ": non-finite value");
    horizon = std::max(horizon, r.step);
    variables = std::max(variables, r.variable + 1);
  }

  struct Group {
    Index origin;
    std::size_t first_line;
    std::vector<std::string> members;
    std::map<std::string, std::pair<Matrix, Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>>> cells;
  };
  std::map<Index, Group> groups;
  for (const auto& r : records) {
    auto [it, inserted] = groups.try_emplace(r.window_id, Group{r.origin, r.line, {}, {}});
    Group& g = it->second;
    if (g.origin != r.origin) {
      fail(ErrorCode::validation, where(r) + ": window " + std::to_string(r.window_id) + " has conflicting origins " +
                                      std::to_string(g.origin) + " and " + std::to_string(r.origin));
    }
    auto cell = g.cells.find(r.member_id);
    if (cell == g.cells.end()) {
      g.members.push_back(r.member_id);
      cell = g.cells
                 .emplace(r.member_id, std::make_pair(Matrix(horizon, variables),
                                                      Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(
                                                          horizon, variables)))
                 .first;
    }
    auto& seen = cell->second.second(r.step - 1, r.variable);
    if (seen) {
      fail(ErrorCode::validation, where(r) + ": duplicate cell (window " + std::to_string(r.window_id) + ", member '" +
                                      r.member_id + "', step " + std::to_string(r.step) + ", variable " +
                                      std::to_string(r.variable) + ")");
    }
    seen = 1;
    cell->second.first(r.step - 1, r.variable) = r.value;
  }

  std::vector<EnsembleForecast> out;
  std::vector<std::string> reference;
  std::vector<std::string> member_order;
  Index last_origin = -1;
  for (auto& [id, g] : groups) {
    const std::string at = path.string() + ":" + std::to_string(g.first_line);
    std::vector<std::string> sorted = g.members;
    std::sort(sorted.begin(), sorted.end());
    if (out.empty()) {
      reference = sorted;
      member_order = g.members;
    } else if (sorted != reference) {
      fail(ErrorCode::validation, at + ": window " + std::to_string(id) + " has a different member set");
    }
    if (g.origin <= last_origin) {
      fail(ErrorCode::validation, at + ": window origins must increase with window_id (window " + std::to_string(id) + ")");
    }
    last_origin = g.origin;
    EnsembleForecast f;
    f.window_id = id;
    f.origin = g.origin;
    for (const auto& member : member_order) {
      auto& [values, seen] = g.cells.at(member);
      for (Index s = 0; s < horizon; ++s) {
        for (Index v = 0; v < variables; ++v) {
          if (!seen(s, v)) {
            fail(ErrorCode::validation, at + ": missing cell (window " + std::to_string(id) + ", member '" + member +
                                            "', step " + std::to_string(s + 1) + ", variable " + std::to_string(v) + ")");
          }
        }
      }
      f.member_ids.push_back(member);
      f.predictions.push_back(std::move(values));
    }
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace poakit
