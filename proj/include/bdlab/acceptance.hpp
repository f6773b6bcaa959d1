#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bdlab/shape.hpp"

namespace bdlab::acceptance {

struct CriterionInfo {
  int id;
  std::string title;
  double limit_seconds;  // 0 when the criterion has no runtime bound
};

// The desk-scale acceptance criteria, 1 through 13.
const std::vector<CriterionInfo>& criteria();

struct CriterionResult {
  int id = 0;
  std::string title;
  bool checks_passed = false;  // the numerical checks
  double seconds = 0.0;
  double limit_seconds = 0.0;
  std::string detail;
  nlohmann::json artifacts;  // deterministic content only
  std::uint64_t digest = 0;  // FNV-1a of artifacts.dump()

  bool within_time() const { return limit_seconds <= 0 || seconds <= limit_seconds; }
  bool passed() const { return checks_passed && within_time(); }
  std::string line() const;  // one-line PASS/FAIL summary
};

struct Options {
  std::uint64_t seed = 20240601;
  int workers = 1;
  std::string out_dir;  // when set, artifacts are written there
};

std::uint64_t fnv1a(const std::string& text);

class Suite {
 public:
  explicit Suite(Options opt);

  // Runs one of criteria 1..12. Criterion 13 needs two suites; see
  // determinism().
  CriterionResult run(int id);

  // Reruns `ids` on a fresh suite with the same seed and compares digests
  // against `first`.
  CriterionResult determinism(const std::vector<CriterionResult>& first);

  // Runs 1..12 then 13, calling `report` after each.
  std::vector<CriterionResult> run_all(const std::function<void(const CriterionResult&)>& report = {});

 private:
  const shape::GTable& coarse_table();  // n = 128 on a few nodes
  const shape::GTable& fine_table();    // n = 32 on a finer grid
  void write_artifacts(const CriterionResult& r) const;

  Options opt_;
  std::optional<shape::GTable> coarse_, fine_;
};

nlohmann::json summary_json(const std::vector<CriterionResult>& results);

}  // namespace bdlab::acceptance
