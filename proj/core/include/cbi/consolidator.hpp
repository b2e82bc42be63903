#pragma once

// Merging the main programs of several PLCs into one master program.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cbi/ast.hpp"

namespace cbi {

enum class Role : std::uint8_t { Sensor, Actuator, Internal };

std::string_view to_string(Role r);

struct IoEntry {
  Role role{Role::Internal};
  std::string owner_plc;
};

/// Half-open statement index range [begin, end) of the master body.
struct SegmentSpan {
  std::size_t begin{0};
  std::size_t end{0};
};

struct StModel {
  StProgram master;
  PouLibrary lib;
  std::vector<std::string> plc_order;
  std::map<std::string, SegmentSpan, KeyLess> segment_spans;
  std::map<std::string, IoEntry, KeyLess> io_map;
  /// Locals and FB instances renamed to keep PLCs apart: (plc, old, new).
  struct Rename {
    std::string plc, from, to;
  };
  std::vector<Rename> renames;

  /// Sensor and actuator names in master declaration order.
  std::vector<std::string> sensors() const;
  std::vector<std::string> actuators() const;
};

/// Merges `programs` in the given order. `plc_names` defaults to the program
/// names. Variables with the same name and type become one master variable;
/// locals that collide across PLCs are renamed `<plc>_<name>`.
/// Throws EmptyInput, TypeConflict or WriteWriteConflict.
StModel consolidate(const std::vector<StProgram>& programs, const std::vector<PouLibrary>& libs,
                    const std::vector<std::string>& plc_names = {});

/// Rebuilds the master body with the segments in `order` (a permutation of
/// plc_order). Segment spans follow the new order.
StModel reorder(const StModel& model, const std::vector<std::string>& order);

/// Pretty-printed master: library, program with one comment per PLC segment,
/// and configuration.
std::string print_master(const StModel& model);

struct TimingReport {
  bool ok{true};
  Millis sum_budget{0};
  Millis min_interval{0};
};

/// OK iff the summed execution budgets are strictly below the smallest task
/// interval.
TimingReport check_timing(const std::vector<StProgram>& programs);

/// One PLC of a deployment: its name and parsed source file.
struct PlcSource {
  std::string name;
  ParsedUnit unit;
};

StModel consolidate(const std::vector<PlcSource>& plcs);
std::vector<StProgram> programs_of(const std::vector<PlcSource>& plcs);

}  // namespace cbi
