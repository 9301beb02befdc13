#pragma once

// Small-n invariant suites run by `sdct selftest`.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sdct/integer_transform.hpp"

namespace sdct {

struct SelftestOptions {
  unsigned seed = 20240601;
  int trials = 50;
  /// Integer tables to check; the shipped tables when unset.
  std::optional<IntegerDctTables> integer_tables;
};

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<SuiteResult> run_selftest(const SelftestOptions& options);

/// Prints one line per suite; returns true when every suite passed.
bool report_selftest(const std::vector<SuiteResult>& results, std::ostream& out);

}  // namespace sdct
