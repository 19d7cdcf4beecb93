#pragma once

// The desk-scale acceptance suite, shared by the `acceptance` test binary and
// `dendrite selftest`.

#include <iosfwd>
#include <string>
#include <vector>

namespace dendrite {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;  // check passed and seconds <= budget
  std::string detail;
  double seconds = 0.0;
  double budget = 0.0;
};

/// Runs the criteria listed in `only` (all ten when empty).
std::vector<CriterionResult> run_acceptance(const std::vector<int>& only = {});

/// `[PASS] 3 hitting probabilities (12.1 s / 60 s): detail`
std::string format_result(const CriterionResult& r);

}  // namespace dendrite
