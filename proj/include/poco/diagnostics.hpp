#pragma once

#include <span>
#include <string>
#include <vector>

#include "poco/layout.hpp"
#include "poco/matrix.hpp"

namespace poco {

/// Shot-by-reference attention aggregate: entry (i, j) is the mean
/// post-softmax attention from shot i's query rows to reference j's key
/// columns. The normalization tag records what the entries are means of.
struct ShotRefMatrix {
  std::size_t shots = 0;
  std::size_t refs = 0;
  std::vector<double> values;  // row-major
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::string normalization = "post_softmax_mean";

  double& at(std::size_t shot, std::size_t ref) { return values[shot * refs + ref]; }
  double at(std::size_t shot, std::size_t ref) const { return values[shot * refs + ref]; }

  friend bool operator==(const ShotRefMatrix&, const ShotRefMatrix&) = default;
};

/// Aggregates an NxN self-attention probability matrix over a layout.
ShotRefMatrix shot_to_ref_scores(const DenseMatrix& probs, const SequenceLayout& layout);

struct ConfusionSummary {
  std::vector<int> predictions;     // per shot, 1-based reference index
  double accuracy = 0.0;
  std::vector<int> confused_shots;  // 0-based indices of wrongly routed shots
};

/// Per-shot argmax against bound labels; ties break toward the lowest
/// reference index.
ConfusionSummary confusion_argmax(const ShotRefMatrix& matrix, std::span<const int> bound_refs);

enum class ExportFormat { Csv, Json };

std::string shot_ref_to_csv(const ShotRefMatrix& matrix);
std::string shot_ref_to_json(const ShotRefMatrix& matrix);
ShotRefMatrix shot_ref_from_csv(const std::string& text);
ShotRefMatrix shot_ref_from_json(const std::string& text);

void export_shot_ref(const ShotRefMatrix& matrix, ExportFormat format, const std::string& path);

/// Decimal rendering used in all numeric exports: 17 significant digits,
/// enough to reproduce any double exactly.
std::string format_double(double value);

}  // namespace poco
