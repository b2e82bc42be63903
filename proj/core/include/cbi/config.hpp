#pragma once

// Loaders for the JSON configuration files. Every loader validates its
// document and throws ConfigError naming the offending field, or IoError.

#include <functional>
#include <string>
#include <vector>

#include "cbi/consolidator.hpp"
#include "cbi/estimator.hpp"
#include "cbi/plantsim.hpp"

namespace cbi {

std::string read_file(const std::string& path);

/// Returns the contents of a file named relative to the document being
/// loaded. Lets callers serve documents from memory.
using FileReader = std::function<std::string(const std::string& relative_path)>;

/// Reader resolving paths against `base_dir` on disk.
FileReader disk_reader(const std::string& base_dir);

/// `[{plc_name, st_source_path, exec_budget_ms}]` or `{"plcs": [...]}`.
/// Source paths are relative to the manifest.
std::vector<PlcSource> load_manifest(const std::string& path);
std::vector<PlcSource> parse_manifest(const std::string& json_text, const FileReader& read);

PlantTopology parse_topology(const std::string& json_text);
PlantTopology load_topology(const std::string& path);

/// Per-sensor map `{"LIT1": 5.0, ...}`, used for both ε and τ.
std::map<std::string, double, KeyLess> parse_margins(const std::string& json_text, const std::string& what);
std::map<std::string, double, KeyLess> load_margins(const std::string& path, const std::string& what);

/// `[scenario...]` or `{"attacks": [...]}`. A logic_replace scenario gives
/// its program inline (`source`) or as a file (`source_path`).
std::vector<AttackScenario> parse_attacks(const std::string& json_text, const FileReader& read);
std::vector<AttackScenario> load_attacks(const std::string& path);

struct SimSetup {
  SimConfig config;
  std::vector<PlcSource> plcs;
};

/// Simulation file: `{manifest, topology, cycles, seed, mismatch, noise,
/// initial_levels}`; paths relative to the file.
SimSetup load_sim(const std::string& path);
SimConfig parse_sim_config(const std::string& json_text, PlantTopology topology);

}  // namespace cbi
