#pragma once

#include <span>
#include <string>
#include <vector>

#include "poco/errors.hpp"

namespace poco {

/// Per-reference presence bits attached to one token.
///
/// Reference tokens carry a one-hot vector (the reference's own slot); video
/// tokens carry the subset of references their shot prompt declares, possibly
/// none. Serialized as a compact bit string ("10", "01", "00") in manifests.
struct SideInfoVec {
  std::vector<int> bits;  // entries in {0,1}, length K

  static SideInfoVec zeros(int num_refs);
  static SideInfoVec one_hot(int num_refs, int ref_index);  // ref_index is 1-based
  static SideInfoVec from_bit_string(const std::string& s);

  std::string to_bit_string() const;
  int size() const { return static_cast<int>(bits.size()); }
  bool is_one_hot() const;
  void validate() const;

  friend bool operator==(const SideInfoVec&, const SideInfoVec&) = default;
};

/// Elementwise |a_i - b_i|; zero exactly where the two tokens agree on a
/// reference's presence.
std::vector<int> side_distance(const SideInfoVec& a, const SideInfoVec& b);

/// Discrete phase code of reference ref_index among num_refs:
/// (2*pi*i - pi) / K. The K values are equally spaced by 2*pi/K and none is
/// congruent to zero.
double ref_phase(int ref_index, int num_refs);

/// Per-plane side rotation angles: entry i is ref_phase(i+1, K) * delta[i].
std::vector<double> side_angles(std::span<const int> delta, int num_refs);

}  // namespace poco
