#pragma once

// The acceptance criteria, each a self-contained computation returning pass/fail and the
// measured numbers behind it.

#include <string>
#include <vector>

namespace thetaskew::acceptance {

struct Result {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  std::vector<std::string> notes;  // report lines (open questions, known discrepancies)
  double seconds = 0.0;
};

struct Options {
  std::string fixtures_path;  // empty: the fixtures file of the source tree
  long long null_realizations = 10000;
  long long noisy_realizations = 400;
};

/// Criteria 1..11.
std::vector<int> all_criteria();
/// Criterion 6 runs the full 10^4-realization null ensemble.
bool is_slow(int id);

/// Runs one criterion. Exceptions are caught and reported as failures.
Result run(int id, const Options& options = {});

/// One line: "[PASS] 3 closed-form validity: ..."
std::string format(const Result& r);

std::string default_fixtures_path();

}  // namespace thetaskew::acceptance
