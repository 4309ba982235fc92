#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "voxmatch/errors.hpp"
#include "voxmatch/matcher.hpp"

namespace voxmatch {

/// Serial-vs-parallel timing of the scoring phase only (I/O excluded).
/// Headline times are medians over `repetitions` runs.
struct BenchmarkResult {
  double serial_seconds = 0.0;
  double parallel_seconds = 0.0;
  double serial_min = 0.0, serial_max = 0.0;
  double parallel_min = 0.0, parallel_max = 0.0;
  unsigned workers = 1;
  double speedup = 0.0;  // serial_seconds / parallel_seconds
  std::size_t component_count = 0;
  std::array<std::size_t, 3> dims{};
  unsigned repetitions = 0;
};

inline double median(std::vector<double> samples) {
  if (samples.empty()) throw EmptyInput("median of no samples");
  std::sort(samples.begin(), samples.end());
  const std::size_t mid = samples.size() / 2;
  if (samples.size() % 2 == 1) return samples[mid];
  return 0.5 * (samples[mid - 1] + samples[mid]);
}

inline BenchmarkResult make_benchmark_result(std::vector<double> serial_samples,
                                             std::vector<double> parallel_samples,
                                             unsigned workers,
                                             std::size_t component_count,
                                             std::array<std::size_t, 3> dims) {
  if (serial_samples.empty() || parallel_samples.empty())
    throw EmptyInput("benchmark needs at least one repetition");
  BenchmarkResult r;
  r.repetitions = static_cast<unsigned>(serial_samples.size());
  r.serial_min = *std::min_element(serial_samples.begin(), serial_samples.end());
  r.serial_max = *std::max_element(serial_samples.begin(), serial_samples.end());
  r.parallel_min = *std::min_element(parallel_samples.begin(), parallel_samples.end());
  r.parallel_max = *std::max_element(parallel_samples.begin(), parallel_samples.end());
  r.serial_seconds = median(std::move(serial_samples));
  r.parallel_seconds = median(std::move(parallel_samples));
  r.workers = workers;
  r.speedup = r.serial_seconds / r.parallel_seconds;
  r.component_count = component_count;
  r.dims = dims;
  return r;
}

namespace detail {

/// Fixed-point with 9 decimal digits, the precision match reports carry.
inline std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  return buf;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += "\"";
  return quoted;
}

}  // namespace detail

/// CSV data frame of a match report. Schema is fixed:
/// component_index,label,metric,value,rank; rows in rank order.
inline std::string report_to_csv(const MatchReport& report) {
  std::ostringstream out;
  out << "component_index,label,metric,value,rank\n";
  for (const auto& s : report.scores) {
    out << s.component_index << ',' << detail::csv_escape(s.component_label)
        << ',' << to_string(s.metric) << ',' << detail::format_value(s.value)
        << ',' << s.rank << '\n';
  }
  return out.str();
}

inline nlohmann::json report_to_json(const MatchReport& report) {
  nlohmann::json scores = nlohmann::json::array();
  for (const auto& s : report.scores) {
    scores.push_back({{"component_index", s.component_index},
                      {"label", s.component_label},
                      {"metric", to_string(s.metric)},
                      {"value", s.value},
                      {"rank", s.rank}});
  }
  return nlohmann::json{
      {"metric", to_string(report.metric)},
      {"component_count", report.component_count},
      {"workers", report.workers},
      {"elapsed_seconds", report.elapsed_seconds},
      {"selected", {{"component_index", report.selected},
                    {"label", report.scores.front().component_label},
                    {"value", report.scores.front().value}}},
      {"scores", scores}};
}

inline nlohmann::json bench_to_json(const BenchmarkResult& r) {
  return nlohmann::json{{"serial_seconds", r.serial_seconds},
                        {"parallel_seconds", r.parallel_seconds},
                        {"serial_min", r.serial_min},
                        {"serial_max", r.serial_max},
                        {"parallel_min", r.parallel_min},
                        {"parallel_max", r.parallel_max},
                        {"workers", r.workers},
                        {"speedup", r.speedup},
                        {"component_count", r.component_count},
                        {"dims", r.dims},
                        {"repetitions", r.repetitions},
                        {"timing_basis", "wall clock over scoring only"}};
}

/// Human-readable benchmark table.
inline std::string bench_table(const BenchmarkResult& r) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-18s %14s %14s %14s\n", "configuration",
                "median (s)", "min (s)", "max (s)");
  out << line;
  std::snprintf(line, sizeof line, "%-18s %14.9f %14.9f %14.9f\n", "serial (w=1)",
                r.serial_seconds, r.serial_min, r.serial_max);
  out << line;
  char label[32];
  std::snprintf(label, sizeof label, "parallel (w=%u)", r.workers);
  std::snprintf(line, sizeof line, "%-18s %14.9f %14.9f %14.9f\n", label,
                r.parallel_seconds, r.parallel_min, r.parallel_max);
  out << line;
  std::snprintf(line, sizeof line, "speedup: %.3fx over %zu components at %zux%zux%zu, %u reps\n",
                r.speedup, r.component_count, r.dims[0], r.dims[1], r.dims[2],
                r.repetitions);
  out << line;
  return out.str();
}

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("short write on " + path.string());
}

}  // namespace voxmatch
