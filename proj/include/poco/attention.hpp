#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "poco/layout.hpp"
#include "poco/matrix.hpp"
#include "poco/rotary.hpp"

namespace poco {

/// Binary attention mask; 1 = attend, 0 = blocked.
struct AttentionMask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> bits;

  AttentionMask() = default;
  AttentionMask(std::size_t rows, std::size_t cols, std::uint8_t fill = 0)
      : rows(rows), cols(cols), bits(rows * cols, fill) {}

  std::uint8_t& at(std::size_t r, std::size_t c) { return bits[r * cols + c]; }
  std::uint8_t at(std::size_t r, std::size_t c) const { return bits[r * cols + c]; }

  friend bool operator==(const AttentionMask&, const AttentionMask&) = default;
};

/// Rotates every row by its token's absolute per-plane angles. Queries and
/// keys rotated this way see the effective relative rotation R_{n-m} in their
/// dot product (see AxisOffsets for the sign convention). Row norms are
/// preserved.
DenseMatrix apply_positional(const DenseMatrix& mat, std::span<const TokenCoord> coords,
                             const RotaryConfig& cfg);
DenseMatrix apply_positional(const DenseMatrix& mat, std::span<const TokenCoord> coords,
                             const PlaneSchedule& schedule);

/// S[m][n] = scale * (q_m . k_n), fixed-order reductions.
DenseMatrix attention_scores(const DenseMatrix& rotated_q, const DenseMatrix& rotated_k,
                             double scale);

/// Row-wise max-subtracted softmax.
DenseMatrix softmax_rows(const DenseMatrix& scores);

/// Row-wise softmax over unmasked columns only; masked columns get exactly
/// zero probability and never enter the reduction, so perturbing a masked
/// column cannot change the row even in the last bit.
DenseMatrix masked_softmax_rows(const DenseMatrix& scores, const AttentionMask& mask);

struct AttentionResult {
  DenseMatrix output;
  DenseMatrix probs;
};

/// Scaled dot-product self-attention with positional rotation of Q and K
/// (scale 1/sqrt(head_dim)). An optional NxN mask floors blocked scores at
/// -inf before the softmax; a fully masked row is an error.
AttentionResult self_attention(const DenseMatrix& x_q, const DenseMatrix& x_k,
                               const DenseMatrix& x_v, std::span<const TokenCoord> coords,
                               const RotaryConfig& cfg, const AttentionMask* mask = nullptr);

/// The global-local cross-attention mask: reference rows attend to the whole
/// text sequence, each shot's video rows only to that shot's text segment.
AttentionMask hierarchical_mask(const SequenceLayout& layout);

/// Cross-attention of visual queries over text keys/values under a mask.
/// Neither side is rotated; routing comes from the mask alone. Output rows
/// are convex combinations of unmasked V_txt rows.
DenseMatrix masked_cross_attention(const DenseMatrix& q_vis, const DenseMatrix& k_txt,
                                   const DenseMatrix& v_txt, const AttentionMask& mask);

}  // namespace poco
