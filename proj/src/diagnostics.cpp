#include "poco/diagnostics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "poco/version.hpp"

namespace poco {

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

ShotRefMatrix shot_to_ref_scores(const DenseMatrix& probs, const SequenceLayout& layout) {
  layout.validate();
  if (probs.rows() != layout.visual_len || probs.cols() != layout.visual_len) {
    throw argument_error("shot_to_ref_scores: probs must be L_v x L_v for this layout");
  }
  ShotRefMatrix m;
  m.shots = layout.shot_ranges.size();
  m.refs = layout.ref_ranges.size();
  m.values.assign(m.shots * m.refs, 0.0);
  for (std::size_t s = 0; s < m.shots; ++s) {
    m.row_labels.push_back("shot_" + std::to_string(s + 1));
    const IndexRange& rows = layout.shot_ranges[s];
    for (std::size_t r = 0; r < m.refs; ++r) {
      const IndexRange& cols = layout.ref_ranges[r];
      double sum = 0.0;
      for (std::size_t q = rows.begin; q < rows.end; ++q) {
        for (std::size_t k = cols.begin; k < cols.end; ++k) {
          sum += probs.at(q, k);
        }
      }
      m.at(s, r) = sum / (static_cast<double>(rows.size()) * static_cast<double>(cols.size()));
    }
  }
  for (std::size_t r = 0; r < m.refs; ++r) {
    m.col_labels.push_back("ref_" + std::to_string(r + 1));
  }
  return m;
}

ConfusionSummary confusion_argmax(const ShotRefMatrix& matrix, std::span<const int> bound_refs) {
  if (bound_refs.size() != matrix.shots) {
    throw argument_error("confusion_argmax: need one bound label per shot");
  }
  ConfusionSummary summary;
  std::size_t correct = 0;
  for (std::size_t s = 0; s < matrix.shots; ++s) {
    std::size_t best = 0;
    for (std::size_t r = 1; r < matrix.refs; ++r) {
      if (matrix.at(s, r) > matrix.at(s, best)) best = r;  // ties keep the lowest index
    }
    const int prediction = static_cast<int>(best) + 1;
    summary.predictions.push_back(prediction);
    if (prediction == bound_refs[s]) {
      ++correct;
    } else {
      summary.confused_shots.push_back(static_cast<int>(s));
    }
  }
  summary.accuracy = static_cast<double>(correct) / static_cast<double>(matrix.shots);
  return summary;
}

std::string shot_ref_to_csv(const ShotRefMatrix& matrix) {
  std::ostringstream out;
  out << "shot";
  for (const auto& label : matrix.col_labels) out << ',' << label;
  out << '\n';
  for (std::size_t s = 0; s < matrix.shots; ++s) {
    out << matrix.row_labels[s];
    for (std::size_t r = 0; r < matrix.refs; ++r) {
      out << ',' << format_double(matrix.at(s, r));
    }
    out << '\n';
  }
  return out.str();
}

ShotRefMatrix shot_ref_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw parse_error("shot-ref CSV: empty input");
  }
  ShotRefMatrix m;
  {
    std::istringstream header(line);
    std::string cell;
    bool first = true;
    while (std::getline(header, cell, ',')) {
      if (first) {
        first = false;
        continue;
      }
      m.col_labels.push_back(cell);
    }
  }
  m.refs = m.col_labels.size();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    m.row_labels.push_back(cell);
    std::size_t count = 0;
    while (std::getline(row, cell, ',')) {
      m.values.push_back(std::stod(cell));
      ++count;
    }
    if (count != m.refs) {
      throw parse_error("shot-ref CSV: row \"" + m.row_labels.back() + "\" has " +
                        std::to_string(count) + " cells, expected " + std::to_string(m.refs));
    }
  }
  m.shots = m.row_labels.size();
  return m;
}

std::string shot_ref_to_json(const ShotRefMatrix& matrix) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["normalization"] = matrix.normalization;
  j["row_labels"] = matrix.row_labels;
  j["col_labels"] = matrix.col_labels;
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t s = 0; s < matrix.shots; ++s) {
    auto row = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < matrix.refs; ++r) {
      row.push_back(matrix.at(s, r));
    }
    rows.push_back(row);
  }
  j["values"] = rows;
  return j.dump(2);
}

ShotRefMatrix shot_ref_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("shot-ref JSON: invalid JSON: ") + e.what());
  }
  ShotRefMatrix m;
  try {
    m.normalization = j.at("normalization").get<std::string>();
    m.row_labels = j.at("row_labels").get<std::vector<std::string>>();
    m.col_labels = j.at("col_labels").get<std::vector<std::string>>();
    for (const auto& row : j.at("values")) {
      for (const auto& v : row) {
        m.values.push_back(v.get<double>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("shot-ref JSON: missing or mistyped field: ") + e.what());
  }
  m.shots = m.row_labels.size();
  m.refs = m.col_labels.size();
  if (m.values.size() != m.shots * m.refs) {
    throw parse_error("shot-ref JSON: values shape does not match labels");
  }
  return m;
}

void export_shot_ref(const ShotRefMatrix& matrix, ExportFormat format, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw io_error("cannot open for writing: " + path);
  }
  out << (format == ExportFormat::Csv ? shot_ref_to_csv(matrix) : shot_ref_to_json(matrix));
  if (!out) {
    throw io_error("write failed: " + path);
  }
}

}  // namespace poco
