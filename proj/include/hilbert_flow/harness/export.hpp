#pragma once

#include <algorithm>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "hilbert_flow/harness/config.hpp"

namespace hflow::harness {

struct PlotRow {
  std::string run_id;
  std::size_t step = 0;
  std::string value;  // empty when the metric is undefined at that step
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace detail

// Long-format (run_id, step, value) rows for one metric across several metrics
// CSVs, stably sorted by (run_id, step).
inline std::vector<PlotRow> collect_plot_rows(const std::vector<std::pair<std::string, std::string>>& runs,
                                              const std::string& metric) {
  std::vector<PlotRow> rows;
  for (const auto& [run_id, text] : runs) {
    std::stringstream ss(text);
    std::string line;
    if (!std::getline(ss, line)) throw ValidationError(run_id, "empty metrics CSV");
    const auto header = detail::split_csv_line(line);
    const auto it = std::find(header.begin(), header.end(), metric);
    if (it == header.end()) throw ValidationError(metric, "no such metric column in " + run_id);
    const auto step_it = std::find(header.begin(), header.end(), "step");
    if (step_it == header.end()) throw ValidationError("step", "no step column in " + run_id);
    const auto col = static_cast<std::size_t>(it - header.begin());
    const auto step_col = static_cast<std::size_t>(step_it - header.begin());
    while (std::getline(ss, line)) {
      if (line.empty()) continue;
      const auto cells = detail::split_csv_line(line);
      if (cells.size() != header.size()) throw ValidationError(run_id, "ragged row '" + line + "'");
      PlotRow row;
      row.run_id = run_id;
      row.step = static_cast<std::size_t>(hflow::harness::detail::to_uint("step", cells[step_col]));
      row.value = cells[col];
      rows.push_back(std::move(row));
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const PlotRow& a, const PlotRow& b) {
    return a.run_id != b.run_id ? a.run_id < b.run_id : a.step < b.step;
  });
  return rows;
}

inline std::string export_plot_data(const std::vector<std::pair<std::string, std::string>>& runs,
                                    const std::string& metric) {
  std::ostringstream os;
  os << "run_id,step,value\n";
  for (const auto& r : collect_plot_rows(runs, metric)) os << r.run_id << ',' << r.step << ',' << r.value << '\n';
  return os.str();
}

// Inverse of export_plot_data.
inline std::vector<PlotRow> parse_plot_data(const std::string& text) {
  std::vector<PlotRow> rows;
  std::stringstream ss(text);
  std::string line;
  if (!std::getline(ss, line) || line != "run_id,step,value") throw ValidationError("export", "bad header");
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 3) throw ValidationError("export", "bad row '" + line + "'");
    rows.push_back({cells[0], static_cast<std::size_t>(hflow::harness::detail::to_uint("step", cells[1])), cells[2]});
  }
  return rows;
}

}  // namespace hflow::harness
