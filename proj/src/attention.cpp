#include "poco/attention.hpp"

#include <cmath>
#include <limits>

namespace poco {

DenseMatrix apply_positional(const DenseMatrix& mat, std::span<const TokenCoord> coords,
                             const RotaryConfig& cfg) {
  return apply_positional(mat, coords, build_plane_schedule(cfg));
}

DenseMatrix apply_positional(const DenseMatrix& mat, std::span<const TokenCoord> coords,
                             const PlaneSchedule& schedule) {
  const RotaryConfig& cfg = schedule.config;
  if (mat.cols() != static_cast<std::size_t>(cfg.head_dim)) {
    throw argument_error("apply_positional: matrix width must equal head_dim");
  }
  if (coords.size() != mat.rows()) {
    throw argument_error("apply_positional: need one coordinate per row");
  }
  DenseMatrix out = mat;
  for (std::size_t n = 0; n < mat.rows(); ++n) {
    const TokenCoord& c = coords[n];
    if (c.side.size() != cfg.num_refs) {
      throw argument_error("apply_positional: side bits length must equal num_refs");
    }
    const std::vector<double> angles = plane_angles(schedule, c.t, c.h, c.w, c.side.bits);
    apply_rotation_inplace(out.row(n), angles);
  }
  return out;
}

DenseMatrix attention_scores(const DenseMatrix& rotated_q, const DenseMatrix& rotated_k,
                             double scale) {
  if (rotated_q.cols() != rotated_k.cols()) {
    throw argument_error("attention_scores: Q and K widths differ");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw argument_error("attention_scores: scale must be a positive finite real");
  }
  DenseMatrix scores(rotated_q.rows(), rotated_k.rows());
  for (std::size_t m = 0; m < rotated_q.rows(); ++m) {
    for (std::size_t n = 0; n < rotated_k.rows(); ++n) {
      scores.at(m, n) = scale * dot(rotated_q.row(m), rotated_k.row(n));
    }
  }
  return scores;
}

DenseMatrix softmax_rows(const DenseMatrix& scores) {
  DenseMatrix probs(scores.rows(), scores.cols());
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < scores.cols(); ++c) {
      mx = std::max(mx, scores.at(r, c));
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < scores.cols(); ++c) {
      const double e = std::exp(scores.at(r, c) - mx);
      probs.at(r, c) = e;
      sum += e;
    }
    for (std::size_t c = 0; c < scores.cols(); ++c) {
      probs.at(r, c) /= sum;
    }
  }
  return probs;
}

DenseMatrix masked_softmax_rows(const DenseMatrix& scores, const AttentionMask& mask) {
  if (mask.rows != scores.rows() || mask.cols != scores.cols()) {
    throw argument_error("masked_softmax_rows: mask shape does not match scores");
  }
  DenseMatrix probs(scores.rows(), scores.cols());
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < scores.cols(); ++c) {
      if (mask.at(r, c)) mx = std::max(mx, scores.at(r, c));
    }
    if (!std::isfinite(mx)) {
      throw argument_error("masked_softmax_rows: row " + std::to_string(r) +
                           " has no unmasked keys");
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < scores.cols(); ++c) {
      if (mask.at(r, c)) {
        const double e = std::exp(scores.at(r, c) - mx);
        probs.at(r, c) = e;
        sum += e;
      }
    }
    for (std::size_t c = 0; c < scores.cols(); ++c) {
      if (mask.at(r, c)) probs.at(r, c) /= sum;
    }
  }
  return probs;
}

AttentionResult self_attention(const DenseMatrix& x_q, const DenseMatrix& x_k,
                               const DenseMatrix& x_v, std::span<const TokenCoord> coords,
                               const RotaryConfig& cfg, const AttentionMask* mask) {
  if (x_q.rows() != x_k.rows() || x_q.rows() != x_v.rows()) {
    throw argument_error("self_attention: Q/K/V row counts differ");
  }
  if (x_q.cols() != x_k.cols()) {
    throw argument_error("self_attention: Q and K widths differ");
  }
  if (mask != nullptr && (mask->rows != x_q.rows() || mask->cols != x_k.rows())) {
    throw argument_error("self_attention: mask shape must be NxN");
  }
  const PlaneSchedule schedule = build_plane_schedule(cfg);
  const DenseMatrix rotated_q = apply_positional(x_q, coords, schedule);
  const DenseMatrix rotated_k = apply_positional(x_k, coords, schedule);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.head_dim));
  const DenseMatrix scores = attention_scores(rotated_q, rotated_k, scale);
  AttentionResult result;
  result.probs = mask ? masked_softmax_rows(scores, *mask) : softmax_rows(scores);
  result.output = matmul(result.probs, x_v);
  return result;
}

AttentionMask hierarchical_mask(const SequenceLayout& layout) {
  layout.validate();
  AttentionMask mask(layout.visual_len, layout.text_len, 0);
  const std::size_t ref_len = layout.ref_len();
  for (std::size_t r = 0; r < ref_len; ++r) {
    for (std::size_t c = 0; c < layout.text_len; ++c) {
      mask.at(r, c) = 1;
    }
  }
  for (std::size_t s = 0; s < layout.shot_ranges.size(); ++s) {
    const IndexRange& rows = layout.shot_ranges[s];
    const IndexRange& cols = layout.text_segments[s];
    for (std::size_t r = rows.begin; r < rows.end; ++r) {
      for (std::size_t c = cols.begin; c < cols.end; ++c) {
        mask.at(r, c) = 1;
      }
    }
  }
  return mask;
}

DenseMatrix masked_cross_attention(const DenseMatrix& q_vis, const DenseMatrix& k_txt,
                                   const DenseMatrix& v_txt, const AttentionMask& mask) {
  if (q_vis.cols() != k_txt.cols()) {
    throw argument_error("masked_cross_attention: Q and K widths differ");
  }
  if (k_txt.rows() != v_txt.rows()) {
    throw argument_error("masked_cross_attention: K and V row counts differ");
  }
  if (mask.rows != q_vis.rows() || mask.cols != k_txt.rows()) {
    throw argument_error("masked_cross_attention: mask shape must be L_v x L_t");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(q_vis.cols()));
  DenseMatrix out(q_vis.rows(), v_txt.cols());
  for (std::size_t r = 0; r < q_vis.rows(); ++r) {
    // Scores, max and normalizer over this row's unmasked columns only.
    double mx = -std::numeric_limits<double>::infinity();
    std::vector<double> row_scores(k_txt.rows(), 0.0);
    for (std::size_t c = 0; c < k_txt.rows(); ++c) {
      if (!mask.at(r, c)) continue;
      row_scores[c] = scale * dot(q_vis.row(r), k_txt.row(c));
      mx = std::max(mx, row_scores[c]);
    }
    if (!std::isfinite(mx)) {
      throw argument_error("masked_cross_attention: visual row " + std::to_string(r) +
                           " has no unmasked text columns");
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < k_txt.rows(); ++c) {
      if (!mask.at(r, c)) continue;
      row_scores[c] = std::exp(row_scores[c] - mx);
      sum += row_scores[c];
    }
    for (std::size_t c = 0; c < k_txt.rows(); ++c) {
      if (!mask.at(r, c)) continue;
      const double p = row_scores[c] / sum;
      for (std::size_t d = 0; d < v_txt.cols(); ++d) {
        out.at(r, d) += p * v_txt.at(c, d);
      }
    }
  }
  return out;
}

}  // namespace poco
