#pragma once

// Scan-cycle interpreter with taint tracking and error-margin
// multi-execution.

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "cbi/consolidator.hpp"

namespace cbi {

/// Per-variable numeric input of one cycle (sensors, optionally actuator
/// pre-cycle values). BOOL is 0/1.
using Inputs = std::map<std::string, double, KeyLess>;

/// Error margin ε per sensor, absolute units. Absent sensors have ε = 0.
using ErrorMarginSpec = std::map<std::string, double, KeyLess>;

/// Offsets δ ∈ {-1, 0, +1} for pinned sensors.
struct OffsetAssignment {
  std::map<std::string, int, KeyLess> delta;
};

namespace detail {
struct Program;
}

/// Interpreter state carried from one cycle to the next: every master
/// variable and every FB instance field.
class MachineState {
 public:
  MachineState() = default;

  const std::vector<Value>& slots() const { return slots_; }

  friend bool operator==(const MachineState& a, const MachineState& b) { return a.slots_ == b.slots_; }

 private:
  friend class Executable;
  std::vector<Value> slots_;
};

/// Branch-decision sequence of one execution: (site, arm) pairs.
using PathSignature = std::vector<std::uint32_t>;

struct ActuationSet {
  std::map<std::string, std::set<Value>, KeyLess> values;
  std::size_t fork_count{0};
  std::set<PathSignature> paths;

  bool contains(const std::string& actuator, const Value& v) const;
};

struct CycleResult {
  MachineState next;
  std::map<std::string, Value, KeyLess> actuators;
};

struct MultiOptions {
  std::size_t fork_cap{729};
  /// Skip forks whose pinned sensors read the same values as an already
  /// scheduled fork.
  bool prune{true};
};

struct MultiResult {
  MachineState next;  // from the all-zero-offset fork
  ActuationSet set;
};

enum class SiteKind : std::uint8_t { If, Case };

struct BranchSite {
  std::uint32_t id{0};
  SiteKind kind{SiteKind::If};
  SourceSpan span;
  std::string pou;  // "master" or the function / function block name
  /// Sensors the site's condition(s) depend on.
  std::set<std::string, KeyLess> sensors;
};

struct TaintedValue {
  Value value;
  std::set<std::string, KeyLess> taint;
};

/// A consolidated model compiled for execution. Immutable after
/// construction; safe to share between threads.
class Executable {
 public:
  explicit Executable(const StModel& model);
  ~Executable();
  Executable(Executable&&) noexcept;
  Executable& operator=(Executable&&) noexcept;

  const StModel& model() const { return model_; }

  MachineState initial_state() const;

  /// Variable value by name ("X" or "INST.FIELD"). Throws ConfigError.
  Value get(const MachineState& s, std::string_view name) const;
  void set(MachineState& s, std::string_view name, const Value& v) const;

  /// Fields of an FB instance (nested instances flattened as "A.B.F").
  std::map<std::string, Value, KeyLess> fb_fields(const MachineState& s, std::string_view instance) const;

  /// One plain scan cycle. `inputs` must name every sensor; entries naming
  /// actuators override their pre-cycle value.
  CycleResult run_cycle(const MachineState& state, const Inputs& inputs) const;

  /// Error-margin multi-execution of one cycle.
  MultiResult run_cycle_multi(const MachineState& state, const Inputs& inputs, const ErrorMarginSpec& eps,
                              const MultiOptions& options = {}) const;

  /// Cycle run with every sensor in `offsets` read as s + δ·ε.
  CycleResult run_cycle_offset(const MachineState& state, const Inputs& inputs, const ErrorMarginSpec& eps,
                               const OffsetAssignment& offsets) const;

  /// End-of-cycle taint of every master variable, with all sensors of
  /// `tainted` as taint sources.
  std::map<std::string, std::set<std::string, KeyLess>, KeyLess> trace_taint(
      const MachineState& state, const Inputs& inputs, const std::set<std::string, KeyLess>& tainted) const;

  /// Evaluates a typed expression over `state`; variables listed in `taint`
  /// carry the given taint sets.
  TaintedValue taint_eval(const Expr& expr, const MachineState& state,
                          const std::map<std::string, std::set<std::string, KeyLess>, KeyLess>& taint) const;

  /// Every If/Case site of the master body, in source order.
  std::vector<BranchSite> branch_sites() const;

  /// Condition value each master-body site evaluated to when last reached in
  /// a plain cycle (-1 when not reached; arm index for If and Case, with the
  /// else arm counted last).
  std::vector<int> site_decisions(const MachineState& state, const Inputs& inputs) const;

 private:
  StModel model_;
  std::unique_ptr<detail::Program> prog_;
};

/// Static forward data- and control-dependence analysis of the master body:
/// the sensors each branch condition may depend on. Calls are treated as
/// opaque (result depends on all arguments).
std::vector<BranchSite> sensor_dependent_branches(const StModel& model);

/// Oracle helper: union of run_cycle outputs over all 3^k offset assignments
/// of the sensors with ε > 0.
ActuationSet brute_force_actuations(const Executable& exe, const MachineState& state, const Inputs& inputs,
                                    const ErrorMarginSpec& eps);

struct PermutationCounterexample {
  Inputs snapshot;
  std::vector<std::string> order_a, order_b;
  std::string variable;
  Value value_a, value_b;
};

/// Executes random snapshots under every PLC order (sampled when there are
/// more than four PLCs) and compares end-of-cycle outputs.
std::optional<PermutationCounterexample> permutation_equivalence_check(const StModel& model, int trials,
                                                                       std::uint64_t seed = 1);

/// Same comparison on one given snapshot.
std::optional<PermutationCounterexample> permutation_equivalence_on(const StModel& model, const Inputs& snapshot);

}  // namespace cbi
