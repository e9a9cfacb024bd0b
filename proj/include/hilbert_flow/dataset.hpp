#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hilbert_flow/errors.hpp"

namespace hflow {

struct LabeledDataset {
  std::vector<std::vector<double>> inputs;
  std::vector<std::size_t> labels;
  std::size_t class_count = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t feature_dim() const noexcept { return inputs.empty() ? 0 : inputs.front().size(); }

  void validate() const {
    if (labels.empty()) throw ArgumentError("dataset: no samples");
    if (inputs.size() != labels.size()) throw ArgumentError("dataset: inputs/labels size mismatch");
    const std::size_t f = feature_dim();
    for (std::size_t i = 0; i < size(); ++i) {
      if (labels[i] >= class_count) {
        throw ArgumentError("dataset: label " + std::to_string(labels[i]) + " >= class count " +
                            std::to_string(class_count));
      }
      if (inputs[i].size() != f) throw ArgumentError("dataset: ragged feature rows");
      for (double v : inputs[i]) {
        if (!std::isfinite(v)) throw ArgumentError("dataset: non-finite feature");
      }
    }
  }

  LabeledDataset subset(const std::vector<std::size_t>& indices) const {
    LabeledDataset out;
    out.class_count = class_count;
    out.inputs.reserve(indices.size());
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) {
      out.inputs.push_back(inputs.at(i));
      out.labels.push_back(labels.at(i));
    }
    return out;
  }
};

inline bool operator==(const LabeledDataset& a, const LabeledDataset& b) {
  return a.class_count == b.class_count && a.labels == b.labels && a.inputs == b.inputs;
}

// Shortest round-trip decimal form of a double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// CSV layout: header x0,...,x{F-1},label; one sample per row.
inline void write_dataset_csv(std::ostream& os, const LabeledDataset& data) {
  const std::size_t f = data.feature_dim();
  for (std::size_t j = 0; j < f; ++j) os << 'x' << j << ',';
  os << "label\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.inputs[i]) os << format_double(v) << ',';
    os << data.labels[i] << '\n';
  }
}

// Class count is taken as max(label) + 1 unless a larger one is supplied.
inline LabeledDataset read_dataset_csv(std::istream& is, std::size_t class_count = 0) {
  std::string line;
  if (!std::getline(is, line)) throw ArgumentError("dataset csv: missing header");
  std::size_t columns = 1;
  for (char c : line) columns += (c == ',');
  if (columns < 2) throw ArgumentError("dataset csv: header needs feature and label columns");

  LabeledDataset data;
  std::size_t max_label = 0;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<double> x;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    std::size_t label = 0;
    while (std::getline(ss, cell, ',')) {
      ++col;
      if (col < columns) {
        double v = 0.0;
        auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc{} || p != cell.data() + cell.size()) {
          throw ArgumentError("dataset csv: bad number on row " + std::to_string(row));
        }
        x.push_back(v);
      } else {
        auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), label);
        if (ec != std::errc{} || p != cell.data() + cell.size()) {
          throw ArgumentError("dataset csv: bad label on row " + std::to_string(row));
        }
      }
    }
    if (col != columns) throw ArgumentError("dataset csv: wrong column count on row " + std::to_string(row));
    max_label = std::max(max_label, label);
    data.inputs.push_back(std::move(x));
    data.labels.push_back(label);
  }
  data.class_count = std::max(class_count, max_label + 1);
  data.validate();
  return data;
}

}  // namespace hflow
