#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace poco {

struct CheckResult {
  std::string name;
  int cases = 0;
  double max_err = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Runtime invariant suite: oracle equivalence of the efficient rotation
/// path, rotation norm/composition invariants, hierarchical-mask structure
/// under fuzzed layouts, and the side-information attenuation identities.
std::vector<CheckResult> run_self_checks(int trials, std::uint64_t seed);

bool all_pass(const std::vector<CheckResult>& results);

}  // namespace poco
