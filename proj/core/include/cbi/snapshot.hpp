#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>

#include "cbi/names.hpp"

namespace cbi {

/// Closed numeric range [lo, hi].
struct Interval {
  double lo{0.0};
  double hi{0.0};

  static Interval point(double x) { return {x, x}; }
  static Interval everything() {
    return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  }

  bool contains(double x) const { return lo <= x && x <= hi; }
  bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
  double center() const { return 0.5 * (lo + hi); }
  Interval hull(const Interval& o) const { return {std::fmin(lo, o.lo), std::fmax(hi, o.hi)}; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

using ValueMap = std::map<std::string, double, KeyLess>;

/// One scan cycle as reported to the monitor. BOOL values are 0/1.
struct CycleSnapshot {
  std::int64_t cycle_index{0};
  std::optional<double> timestamp;
  ValueMap sensors;
  ValueMap actuators;

  friend bool operator==(const CycleSnapshot&, const CycleSnapshot&) = default;
};

/// Pull-style stream of snapshots.
class SnapshotSource {
 public:
  virtual ~SnapshotSource() = default;
  virtual std::optional<CycleSnapshot> next() = 0;
};

}  // namespace cbi
