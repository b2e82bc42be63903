#pragma once

// Historian CSV: header row, then one row per cycle.
//
//   cycle_index,timestamp,<sensor>...,<actuator>...
//
// Sensor and actuator values are REAL (binary32) or BOOL (0/1). REAL
// values carry 9 significant digits, enough to read back the same binary32
// value; the reader rounds every value to binary32. An empty timestamp
// field means "none".

#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "cbi/snapshot.hpp"

namespace cbi {

struct HistorianSchema {
  std::vector<std::string> sensors;
  std::vector<std::string> actuators;
};

/// Formats one value the way the historian writes it.
std::string format_value(double v);

class HistorianWriter {
 public:
  HistorianWriter(const std::string& path, HistorianSchema schema);
  HistorianWriter(std::ostream& out, HistorianSchema schema);

  void write(const CycleSnapshot& s);
  void flush();

 private:
  void header();

  std::unique_ptr<std::ofstream> file_;
  std::ostream* out_;
  HistorianSchema schema_;
};

/// Streams rows one at a time; memory use does not grow with file length.
class HistorianReader : public SnapshotSource {
 public:
  /// The header must hold exactly the schema's columns (any order,
  /// case-insensitive). Throws IoError or ParseError.
  HistorianReader(const std::string& path, const HistorianSchema& schema);
  HistorianReader(std::unique_ptr<std::istream> in, const HistorianSchema& schema);

  /// Reads without a schema: the caller names the actuator columns, all
  /// other columns are sensors.
  static HistorianSchema sniff(const std::string& path, const std::vector<std::string>& actuators);

  std::optional<CycleSnapshot> next() override;
  std::size_t rows_read() const { return row_ - 1; }

 private:
  void read_header(const HistorianSchema& schema);

  std::unique_ptr<std::istream> in_;
  std::vector<std::string> names_;
  std::vector<int> kind_;  // 0 cycle_index, 1 timestamp, 2 sensor, 3 actuator
  std::size_t row_{1};
  std::string line_;
};

void write_historian(const std::vector<CycleSnapshot>& stream, const HistorianSchema& schema, const std::string& path);
std::vector<CycleSnapshot> read_historian(const std::string& path, const HistorianSchema& schema);

/// In-memory snapshot source.
class VectorSource : public SnapshotSource {
 public:
  explicit VectorSource(const std::vector<CycleSnapshot>& v) : v_(v) {}
  std::optional<CycleSnapshot> next() override {
    if (i_ >= v_.size()) return std::nullopt;
    return v_[i_++];
  }

 private:
  const std::vector<CycleSnapshot>& v_;
  std::size_t i_{0};
};

}  // namespace cbi
