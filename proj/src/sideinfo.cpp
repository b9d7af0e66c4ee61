#include "poco/sideinfo.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>

namespace poco {

SideInfoVec SideInfoVec::zeros(int num_refs) {
  if (num_refs < 1) {
    throw argument_error("SideInfoVec::zeros: num_refs must be positive");
  }
  return SideInfoVec{std::vector<int>(static_cast<std::size_t>(num_refs), 0)};
}

SideInfoVec SideInfoVec::one_hot(int num_refs, int ref_index) {
  if (ref_index < 1 || ref_index > num_refs) {
    throw argument_error("SideInfoVec::one_hot: ref_index out of range");
  }
  SideInfoVec v = zeros(num_refs);
  v.bits[static_cast<std::size_t>(ref_index - 1)] = 1;
  return v;
}

SideInfoVec SideInfoVec::from_bit_string(const std::string& s) {
  if (s.empty()) {
    throw parse_error("SideInfoVec: empty bit string");
  }
  SideInfoVec v;
  v.bits.reserve(s.size());
  for (char c : s) {
    if (c != '0' && c != '1') {
      throw parse_error("SideInfoVec: bit string may contain only '0' and '1', got \"" + s + "\"");
    }
    v.bits.push_back(c - '0');
  }
  return v;
}

std::string SideInfoVec::to_bit_string() const {
  std::string s;
  s.reserve(bits.size());
  for (int b : bits) {
    s.push_back(b ? '1' : '0');
  }
  return s;
}

bool SideInfoVec::is_one_hot() const {
  int ones = 0;
  for (int b : bits) ones += b;
  return ones == 1;
}

void SideInfoVec::validate() const {
  if (bits.empty()) {
    throw argument_error("SideInfoVec: must have at least one entry");
  }
  for (int b : bits) {
    if (b != 0 && b != 1) {
      throw argument_error("SideInfoVec: entries must be 0 or 1");
    }
  }
}

std::vector<int> side_distance(const SideInfoVec& a, const SideInfoVec& b) {
  if (a.bits.size() != b.bits.size()) {
    throw argument_error("side_distance: length mismatch");
  }
  std::vector<int> d(a.bits.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = std::abs(a.bits[i] - b.bits[i]);
  }
  return d;
}

double ref_phase(int ref_index, int num_refs) {
  if (num_refs < 1) {
    throw argument_error("ref_phase: num_refs must be positive");
  }
  if (ref_index < 1 || ref_index > num_refs) {
    throw argument_error("ref_phase: ref_index out of range");
  }
  return (2.0 * std::numbers::pi * ref_index - std::numbers::pi) / num_refs;
}

std::vector<double> side_angles(std::span<const int> delta, int num_refs) {
  if (static_cast<int>(delta.size()) != num_refs) {
    throw argument_error("side_angles: delta length must equal num_refs");
  }
  std::vector<double> angles(delta.size());
  for (int i = 0; i < num_refs; ++i) {
    angles[static_cast<std::size_t>(i)] = ref_phase(i + 1, num_refs) * delta[static_cast<std::size_t>(i)];
  }
  return angles;
}

}  // namespace poco
