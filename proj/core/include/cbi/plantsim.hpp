#pragma once

// Synthetic tank/flow plant driven by the PLC programs themselves, with
// attack injection. Produces the ground-truth stream and the stream the
// PLCs report.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cbi/consolidator.hpp"
#include "cbi/estimator.hpp"
#include "cbi/monitor.hpp"

namespace cbi {

enum class AttackKind : std::uint8_t { LogicReplace, SensorReplay, SensorBias, ActuationOverride, ThresholdTamper };

std::string_view to_string(AttackKind k);
std::optional<AttackKind> parse_attack_kind(std::string_view s);

struct AttackScenario {
  std::string name;
  Window window{0, 0};
  AttackKind kind{AttackKind::SensorBias};
  /// The attacker reports what the unmodified system would have reported.
  bool stealth{false};

  std::string plc;     // LogicReplace, ThresholdTamper
  std::string source;  // LogicReplace: ST source of the replacement program
  std::string target;  // sensor (replay, bias) or actuator (override)

  std::int64_t recorded_from{0};  // SensorReplay: first replayed cycle
  bool freeze{false};             // SensorReplay: repeat a single value

  double amount{0.0};  // SensorBias; with `ramp`, added once more each cycle
  bool ramp{false};

  double value{0.0};  // ActuationOverride

  int constant_site{0};  // ThresholdTamper: index among numeric literals
  double new_value{0.0};
};

struct SimConfig {
  PlantTopology topology;
  /// Relative parameter error of the true plant: "F_c" (every tank),
  /// "<level sensor>.F_c", "base_rate" (every flow), "<flow sensor>.base_rate".
  std::map<std::string, double, KeyLess> mismatch;
  /// Uniform additive noise bound per sensor.
  std::map<std::string, double, KeyLess> noise;
  /// Initial tank levels; the capacity midpoint when absent.
  ValueMap initial_levels;
  std::uint64_t seed{1};
  std::int64_t cycles{0};
};

using SimSink = std::function<void(const CycleSnapshot& truth, const CycleSnapshot& reported)>;

/// Runs the plant for cfg.cycles cycles, handing every cycle to `sink`.
/// Throws ConfigError on an inconsistent configuration.
void simulate(const SimConfig& cfg, const std::vector<PlcSource>& plcs, const std::vector<AttackScenario>& attacks,
              const SimSink& sink);

struct SimResult {
  std::vector<CycleSnapshot> truth;
  std::vector<CycleSnapshot> reported;
};

SimResult simulate(const SimConfig& cfg, const std::vector<PlcSource>& plcs,
                   const std::vector<AttackScenario>& attacks = {});

std::vector<Window> windows_of(const std::vector<AttackScenario>& attacks);

/// Numeric literals of the program body in pre-order (statement order; an
/// operator before its operands; IF conditions before their bodies).
std::vector<Value> numeric_constants(const StProgram& prog);
/// Copy of `prog` with numeric literal number `site` replaced by `new_value`
/// (converted to the literal's type). Throws ConfigError when out of range.
StProgram tamper_constant(const StProgram& prog, int site, double new_value);

}  // namespace cbi
