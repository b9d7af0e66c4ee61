#pragma once

#include <span>
#include <string>
#include <vector>

#include "poco/errors.hpp"

namespace poco {

enum class Axis { T, S, H, W };
enum class Realloc { None, TLow, THigh };

std::string axis_name(Axis axis);
std::string realloc_name(Realloc realloc);
Realloc realloc_from_name(const std::string& name);

/// Per-axis channel allocation of one attention head's rotary embedding.
///
/// d_t/d_h/d_w are the channels rotated by the temporal and spatial axes; d_s
/// hosts the side-information planes, two channels per reference. realloc
/// names which end of the original temporal subspace donated the side
/// channels: TLow the lowest-frequency temporal planes, THigh the
/// highest-frequency ones. With realloc = None the config is plain 3-axis
/// rotary embedding and d_s must be 0; otherwise d_s must equal 2*num_refs.
struct RotaryConfig {
  int head_dim = 32;
  double theta = 10000.0;
  int d_t = 8;
  int d_h = 10;
  int d_w = 10;
  int d_s = 4;
  int num_refs = 2;
  Realloc realloc = Realloc::TLow;

  int planes() const { return head_dim / 2; }

  /// Throws argument_error if any invariant fails.
  void validate() const;

  /// The pre-reallocation 3-axis config: side channels folded back into d_t.
  RotaryConfig without_sideinfo() const;

  friend bool operator==(const RotaryConfig&, const RotaryConfig&) = default;
};

RotaryConfig rotary_config_from_json(const std::string& text);
std::string rotary_config_to_json(const RotaryConfig& cfg);

/// 2x2 rotation block, row-major.
struct Rot2 {
  double m00 = 1.0, m01 = 0.0;
  double m10 = 0.0, m11 = 1.0;
};

/// [[cos a, -sin a], [sin a, cos a]].
Rot2 rotation_block(double angle);

/// Frequency of the rotation plane at 1-based global index i:
/// theta^(-2i/head_dim). Strictly decreasing in i.
double plane_frequency(int index, int head_dim, double theta);

struct PlaneDescriptor {
  Axis axis = Axis::T;
  int global_index = 0;      // 1-based position in the direct sum
  double coefficient = 0.0;  // omega_i for T/H/W planes, phi_j for side planes
  int ref_index = 0;         // 1..K for side planes, 0 otherwise
};

/// Where an emitted plane lived in the pre-reallocation 3-axis model.
struct PlaneProvenance {
  Axis original_axis = Axis::T;
  int original_index = 0;  // 1-based global plane index in the original model

  friend bool operator==(const PlaneProvenance&, const PlaneProvenance&) = default;
};

/// The direct-sum rotation schedule of one head: T planes, then side planes,
/// then H, then W. Coefficients are precomputed once; no trigonometry is
/// redone per token pair.
struct PlaneSchedule {
  RotaryConfig config;
  std::vector<PlaneDescriptor> planes;          // exactly head_dim/2 entries
  std::vector<PlaneProvenance> provenance;      // parallel to planes
};

PlaneSchedule build_plane_schedule(const RotaryConfig& cfg);

/// Absolute per-plane angles of a token at (t, h, w) with side bits.
/// Side bits act as absolute side coordinates: side plane j gets phi_j * s_j.
std::vector<double> plane_angles(const PlaneSchedule& schedule, long long t, long long h,
                                 long long w, std::span<const int> side_bits);

/// Rotates coordinate pair (2i, 2i+1) of vec by angles[i]. Norm-preserving.
std::vector<double> apply_rotation(std::span<const double> vec, std::span<const double> angles);
void apply_rotation_inplace(std::span<double> vec, std::span<const double> angles);

/// Single-precision path; same semantics, looser tolerances.
std::vector<float> apply_rotation(std::span<const float> vec, std::span<const float> angles);

/// Signed per-axis offsets between two tokens, key minus query.
///
/// Sign convention: the efficient path rotates queries and keys by their own
/// absolute coordinates with positive angle, so a (q, k) pair at positions
/// (m, n) sees the effective relative rotation R_{n-m}. The oracle takes the
/// same key-minus-query differences; side entries are the signed bit
/// differences in {-1, 0, 1} (the symmetric cos terms only depend on |ds|).
struct AxisOffsets {
  long long t = 0;
  long long h = 0;
  long long w = 0;
  std::vector<int> s;  // entries in {-1, 0, 1}, length num_refs
};

/// Brute-force relative-rotation score: materializes the full DxD
/// block-diagonal rotation with per-plane angle = coefficient * offset and
/// returns q^T R k. This is the oracle the efficient absolute-rotation path
/// is tested against.
double relative_score_oracle(std::span<const double> q, std::span<const double> k,
                             const AxisOffsets& delta, const RotaryConfig& cfg);

}  // namespace poco
