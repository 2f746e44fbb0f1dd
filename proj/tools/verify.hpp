#pragma once

// Property suites behind `reclag verify`: each runs random instances and
// reports the measured quantities next to a pass/fail verdict.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "options.hpp"

namespace reclag::cli {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::vector<std::pair<std::string, double>> measured;
};

struct VerifyReport {
  std::string which;
  std::vector<CheckResult> checks;

  bool passed() const;
};

/// Throws InvalidArgument when the suite's preconditions do not hold, e.g.
/// thm1 with gamma <= N_H.
VerifyReport run_verify(const VerifyOptions& opts, std::uint64_t seed, unsigned threads);

std::string report_json(const VerifyReport& report);

}  // namespace reclag::cli
