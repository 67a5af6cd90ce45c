#pragma once

#include "poakit/core.hpp"

#include <filesystem>
#include <span>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace poakit {

struct Detection;
struct MetricReport;

/// Floats are serialized with 9 significant digits everywhere.
std::string format_float(double v);

/// Minimal RFC 4180 CSV table; quoted fields may contain commas.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based source line of each row.
  std::vector<std::size_t> lines;

  /// Column position by name, or throws naming the file.
  std::size_t column(const std::string& name) const;
  std::string source;
};

CsvTable read_csv(const std::filesystem::path& path);
std::string csv_escape(const std::string& field);

/// Parse helpers that report "<file>:<line>" on failure.
double parse_double_field(const std::string& text, const std::string& where);
Index parse_index_field(const std::string& text, const std::string& where);

/// Header row, first column timestamp, remaining columns variables.
TimeSeries read_series_csv(const std::filesystem::path& path, int index_base = 0);
void write_series_csv(const std::filesystem::path& path, const TimeSeries& series, int index_base = 0);

/// Either a single flag column or timestamp + flag columns.
LabelSequence read_labels_csv(const std::filesystem::path& path, int index_base = 0);
void write_labels_csv(const std::filesystem::path& path, const LabelSequence& labels, int index_base = 0);

/// First floor(train_frac * T) rows, then the rest; no shuffling.
std::pair<TimeSeries, TimeSeries> chronological_split(const TimeSeries& series, double train_frac);

/// Columns timestamp, score, lead_time; missing entries are empty.
void write_scores(const std::filesystem::path& path, const ScoreSeries& scores, int index_base = 0);
ScoreSeries read_scores(const std::filesystem::path& path, int index_base = 0);

/// Columns timestamp, flag, lead_time, plus a JSON sidecar with the threshold.
void write_detection(const std::filesystem::path& path, const Detection& detection, const std::string& metadata_json,
                     int index_base = 0);
Detection read_detection(const std::filesystem::path& path, int index_base = 0);
std::filesystem::path detection_sidecar_path(const std::filesystem::path& path);

/// JSON report plus a flat (theta, ptar, ptap, f1) CSV.
void write_report(const std::filesystem::path& json_path, const std::filesystem::path& curve_csv_path,
                  const MetricReport& report);

/// Macro average of per-entity report JSON texts: every numeric field present
/// in all reports is averaged; arrays and non-numeric fields are dropped.
std::string macro_average_reports(std::span<const std::string> reports);

std::string sha256_file(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace poakit
