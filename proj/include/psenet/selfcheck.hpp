#pragma once

#include <string>
#include <vector>

namespace psenet {

// One invariant group of the built-in self test.
struct CheckGroup {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Runs the library's invariant groups: gradient correctness against finite
// differences, B-spline recursion and partition of unity, structural
// equivalences (ResNet identity, generalized-net lowering), polynomial and
// piecewise exact representation, and a golden-file round trip.
// `golden_path` names the stored reference net; pass "" to skip that group.
std::vector<CheckGroup> run_selfcheck(const std::string& golden_path);

}  // namespace psenet
