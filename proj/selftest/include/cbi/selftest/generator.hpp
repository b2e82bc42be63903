#pragma once

// Random ST program generator for the property suites.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cbi/exec.hpp"

namespace cbi::selftest {

struct GenOptions {
  int tainted_sensors{4};   // upper bound; at least 1
  int max_if_depth{4};
  int statements{6};        // top-level statement count (upper bound)
  bool function_blocks{true};
  std::string program_name{"gen"};
  /// Prefix of every written variable (keeps program pairs disjoint).
  std::string output_prefix;
  /// Names of the REAL sensors; empty: S0..S{k-1}.
  std::vector<std::string> sensor_pool;
};

struct GeneratedProgram {
  std::string source;
  std::vector<std::string> sensors;
  /// Base value per sensor; comparison constants sit near it.
  std::vector<double> centers;
  ErrorMarginSpec eps;
};

GeneratedProgram generate_program(std::mt19937_64& rng, const GenOptions& options);

/// Sensor values near the generated program's constants.
Inputs random_snapshot(std::mt19937_64& rng, const GeneratedProgram& prog);

/// Uniform integer in [lo, hi].
int pick(std::mt19937_64& rng, int lo, int hi);

}  // namespace cbi::selftest
