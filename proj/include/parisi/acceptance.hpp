#pragma once

// The acceptance battery: thirteen numbered checks, each with a runtime
// budget, reported as one pass/fail line apiece.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace parisi::acceptance {

inline constexpr int kCriteria = 13;

struct Options {
  std::uint64_t seed = 20251019;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  /// The numeric checks hold.
  bool checks = false;
  double seconds = 0.0;
  double budget = 0.0;
  std::string summary;
  nlohmann::json details;

  bool pass() const { return checks && seconds <= budget; }
};

CriterionResult run_criterion(int id, const Options& options = {});
std::vector<CriterionResult> run_all(const Options& options = {});

/// "criterion 04 PASS  12.3 s / 120 s  <title>: <summary>"
std::string format_line(const CriterionResult& r);
nlohmann::json to_json(const CriterionResult& r);

}  // namespace parisi::acceptance
