#include "cbi/historian.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "cbi/error.hpp"

namespace cbi {

std::string format_value(double v) {
  char buf[40];
  if (std::isfinite(v) && v == std::trunc(v) && std::fabs(v) < 1e15) {
    std::snprintf(buf, sizeof buf, "%.0f", v);
    if (std::string(buf) == "-0") return "0";
  } else {
    std::snprintf(buf, sizeof buf, "%.9g", v);
  }
  return buf;
}

namespace {

std::string format_timestamp(double t) {
  char buf[40];
  auto r = std::to_chars(buf, buf + sizeof buf, t);
  return std::string(buf, r.ptr);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

}  // namespace

HistorianWriter::HistorianWriter(const std::string& path, HistorianSchema schema)
    : file_(std::make_unique<std::ofstream>(path)), out_(file_.get()), schema_(std::move(schema)) {
  if (!*file_) throw IoError("cannot open '" + path + "' for writing");
  header();
}

HistorianWriter::HistorianWriter(std::ostream& out, HistorianSchema schema) : out_(&out), schema_(std::move(schema)) {
  header();
}

void HistorianWriter::header() {
  std::string h = "cycle_index,timestamp";
  for (const auto& s : schema_.sensors) h += "," + s;
  for (const auto& a : schema_.actuators) h += "," + a;
  *out_ << h << '\n';
}

void HistorianWriter::write(const CycleSnapshot& s) {
  std::string row = std::to_string(s.cycle_index) + ",";
  if (s.timestamp) row += format_timestamp(*s.timestamp);
  auto put = [&](const ValueMap& m, const std::string& name) {
    auto it = m.find(name);
    if (it == m.end()) throw ConfigError("snapshot " + std::to_string(s.cycle_index) + " lacks column '" + name + "'");
    row += "," + format_value(it->second);
  };
  for (const auto& n : schema_.sensors) put(s.sensors, n);
  for (const auto& n : schema_.actuators) put(s.actuators, n);
  row += '\n';
  *out_ << row;
  if (!*out_) throw IoError("write failed");
}

void HistorianWriter::flush() { out_->flush(); }

HistorianReader::HistorianReader(const std::string& path, const HistorianSchema& schema) {
  auto f = std::make_unique<std::ifstream>(path);
  if (!*f) throw IoError("cannot open '" + path + "'");
  in_ = std::move(f);
  read_header(schema);
}

HistorianReader::HistorianReader(std::unique_ptr<std::istream> in, const HistorianSchema& schema) : in_(std::move(in)) {
  read_header(schema);
}

void HistorianReader::read_header(const HistorianSchema& schema) {
  if (!std::getline(*in_, line_)) throw ParseError(1, "", "empty file, expected a header row");
  std::map<std::string, int, KeyLess> expected{{"cycle_index", 0}, {"timestamp", 1}};
  for (const auto& s : schema.sensors) expected[s] = 2;
  for (const auto& a : schema.actuators) expected[a] = 3;
  std::set<std::string, KeyLess> seen;
  for (auto field : split(line_)) {
    std::string name(trim(field));
    auto it = expected.find(name);
    if (it == expected.end()) throw ParseError(1, name, "column is not a sensor or actuator of the model");
    if (!seen.insert(name).second) throw ParseError(1, name, "duplicate column");
    names_.push_back(it->first);
    kind_.push_back(it->second);
  }
  for (const auto& [name, kind] : expected)
    if (!seen.count(name)) throw ParseError(1, name, "missing column");
  row_ = 1;
}

HistorianSchema HistorianReader::sniff(const std::string& path, const std::vector<std::string>& actuators) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(f, line)) throw ParseError(1, "", "empty file, expected a header row");
  HistorianSchema schema;
  std::set<std::string, KeyLess> acts(actuators.begin(), actuators.end());
  for (auto field : split(line)) {
    std::string name(trim(field));
    if (iequals(name, "cycle_index") || iequals(name, "timestamp")) continue;
    (acts.count(name) ? schema.actuators : schema.sensors).push_back(name);
  }
  return schema;
}

std::optional<CycleSnapshot> HistorianReader::next() {
  for (;;) {
    if (!std::getline(*in_, line_)) return std::nullopt;
    ++row_;
    if (!trim(line_).empty()) break;
  }
  auto fields = split(line_);
  if (fields.size() != names_.size())
    throw ParseError(row_, fields.size() < names_.size() ? names_[fields.size()] : "",
                     "expected " + std::to_string(names_.size()) + " fields, got " + std::to_string(fields.size()));
  CycleSnapshot s;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    std::string_view f = trim(fields[i]);
    if (kind_[i] == 1 && f.empty()) continue;
    if (kind_[i] == 0) {
      auto r = std::from_chars(f.data(), f.data() + f.size(), s.cycle_index);
      if (r.ec != std::errc() || r.ptr != f.data() + f.size()) throw ParseError(row_, names_[i], "not an integer");
      continue;
    }
    double v = 0.0;
    auto r = std::from_chars(f.data(), f.data() + f.size(), v);
    if (f.empty() || r.ec != std::errc() || r.ptr != f.data() + f.size())
      throw ParseError(row_, names_[i], "'" + std::string(f) + "' is not a number");
    if (kind_[i] != 1) {
      // Values are binary32 on the wire; 9 digits round-trip them exactly.
      auto f32 = static_cast<float>(v);
      if (std::isinf(f32) && std::isfinite(v)) throw ParseError(row_, names_[i], "value out of REAL range");
      v = static_cast<double>(f32);
    }
    switch (kind_[i]) {
      case 1:
        s.timestamp = v;
        break;
      case 2:
        s.sensors.emplace_hint(s.sensors.end(), names_[i], v);
        break;
      default:
        s.actuators.emplace_hint(s.actuators.end(), names_[i], v);
        break;
    }
  }
  return s;
}

void write_historian(const std::vector<CycleSnapshot>& stream, const HistorianSchema& schema, const std::string& path) {
  HistorianWriter w(path, schema);
  for (const auto& s : stream) w.write(s);
  w.flush();
}

std::vector<CycleSnapshot> read_historian(const std::string& path, const HistorianSchema& schema) {
  HistorianReader r(path, schema);
  std::vector<CycleSnapshot> out;
  while (auto s = r.next()) out.push_back(std::move(*s));
  return out;
}

}  // namespace cbi
