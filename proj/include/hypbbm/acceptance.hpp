#pragma once

// The acceptance suite: fifteen desk-scale statistical checks of the
// simulator against the reference laws, each reported as one line.

#include <cstddef>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace hypbbm {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  bool exploratory = false;  // reported, never a failure
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::size_t workers = 0;  // 0 = hardware concurrency
  std::set<int> only;       // empty = all
};

/// Runs the selected criteria, printing one line per criterion to log as it
/// finishes.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options, std::ostream& log);

/// True when every non-exploratory criterion passed.
bool all_required_pass(const std::vector<CriterionResult>& results);

std::string format_line(const CriterionResult& r);

}  // namespace hypbbm
