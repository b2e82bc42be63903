#pragma once

// Acceptance property suites 1-5. Each returns a pass/fail result with a
// one-line summary; all randomness comes from the given seed.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cbi/monitor.hpp"

namespace cbi::selftest {

struct SelfTestOptions {
  std::uint64_t seed{20240611};
  int programs{1000};   // criterion 1
  int cycles_per_program{3};
  int pairs{100};       // criterion 2
  int snapshots{100};
};

struct CriterionResult {
  int id{0};
  std::string name;
  bool pass{false};
  std::string detail;
  double seconds{0.0};
};

CriterionResult check_multi_exec_oracle(const SelfTestOptions& o);
CriterionResult check_consolidation(const SelfTestOptions& o);
CriterionResult check_zero_false_positives(const SelfTestOptions& o);
CriterionResult check_attack_recall(const SelfTestOptions& o);
CriterionResult check_roc(const SelfTestOptions& o);

/// Runs criteria 1-5 in order, reporting each result as it completes.
std::vector<CriterionResult> run_self_test(const SelfTestOptions& o,
                                           const std::function<void(const CriterionResult&)>& report = {});

/// "[PASS] 1 multi-execution oracle: ... (0.4 s)"
std::string format_result(const CriterionResult& r);

/// The ROC curve of the shipped plant, as committed in the golden file.
std::vector<RocPoint> plant_roc();

/// Replay latency bound ⌈τ / (|net rate|·F_c)⌉ of a frozen level sensor,
/// from the flows reported in the cycle before the attack starts.
/// Returns -1 when the tank is not moving.
std::int64_t replay_latency_bound(const PlantTopology& topology, const ThresholdSpec& tau,
                                  const CycleSnapshot& before, const std::string& level_sensor);

}  // namespace cbi::selftest
