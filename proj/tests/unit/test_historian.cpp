#include <doctest.h>

#include <cstdio>
#include <sstream>

#include "cbi/error.hpp"
#include "cbi/historian.hpp"

using namespace cbi;

namespace {

HistorianSchema schema() { return {{"L", "F"}, {"P"}}; }

CycleSnapshot snap(std::int64_t n, double l, double f, bool p) {
  CycleSnapshot s;
  s.cycle_index = n;
  s.timestamp = static_cast<double>(n) * 0.5;
  s.sensors = {{"L", l}, {"F", f}};
  s.actuators = {{"P", p ? 1.0 : 0.0}};
  return s;
}

std::vector<CycleSnapshot> read_all(const std::string& text) {
  HistorianReader r(std::make_unique<std::istringstream>(text), schema());
  std::vector<CycleSnapshot> out;
  while (auto s = r.next()) out.push_back(*s);
  return out;
}

}  // namespace

TEST_CASE("values are written exactly") {
  CHECK(format_value(500.0) == "500");
  CHECK(format_value(1.0) == "1");
  CHECK(format_value(static_cast<double>(9.7f)) == "9.69999981");
  CHECK(format_value(-0.25) == "-0.25");
}

TEST_CASE("round trip through a stream") {
  std::vector<CycleSnapshot> in;
  for (int n = 0; n < 50; ++n)
    in.push_back(snap(n, static_cast<float>(500.0 + n * 3.06), static_cast<float>(n % 3 ? 9.7 : 0.0), n % 2));
  std::ostringstream out;
  {
    HistorianWriter w(out, schema());
    for (const auto& s : in) w.write(s);
    w.flush();
  }
  CHECK(out.str().substr(0, out.str().find('\n')) == "cycle_index,timestamp,L,F,P");
  CHECK(read_all(out.str()) == in);
}

TEST_CASE("round trip through a file") {
  std::string path = "historian_roundtrip.csv";
  std::vector<CycleSnapshot> in{snap(0, 1.5, 2.0, true), snap(1, 1.75, 0.0, false)};
  write_historian(in, schema(), path);
  CHECK(read_historian(path, schema()) == in);
  HistorianSchema sniffed = HistorianReader::sniff(path, {"P"});
  CHECK(sniffed.sensors == std::vector<std::string>{"L", "F"});
  CHECK(sniffed.actuators == std::vector<std::string>{"P"});
  std::remove(path.c_str());
}

TEST_CASE("columns may come in any order and case") {
  auto rows = read_all("P,f,cycle_index,timestamp,l\n1,2.5,7,,3\n");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].cycle_index == 7);
  CHECK_FALSE(rows[0].timestamp);
  CHECK(rows[0].sensors.at("L") == 3.0);
  CHECK(rows[0].actuators.at("P") == 1.0);
}

TEST_CASE("values are read as binary32") {
  auto rows = read_all("cycle_index,timestamp,L,F,P\n0,0,0.1,1e-3,0\n");
  CHECK(rows[0].sensors.at("L") == static_cast<double>(0.1f));
  CHECK_THROWS_AS(read_all("cycle_index,timestamp,L,F,P\n0,0,1e300,0,0\n"), ParseError);
}

TEST_CASE("header mismatch names the column") {
  auto column_of = [](const std::string& text) {
    try {
      read_all(text);
    } catch (const ParseError& e) {
      CHECK(e.row() == 1);
      return e.column();
    }
    return std::string("<none>");
  };
  CHECK(column_of("cycle_index,timestamp,L,F,Q\n") == "Q");
  CHECK(column_of("cycle_index,timestamp,L,F,P,L\n") == "L");
  CHECK(column_of("cycle_index,timestamp,L,P\n") == "F");
}

TEST_CASE("malformed rows") {
  CHECK_THROWS_AS(read_all("cycle_index,timestamp,L,F,P\n0,0,1,2\n"), ParseError);
  CHECK_THROWS_AS(read_all("cycle_index,timestamp,L,F,P\n0,0,abc,2,0\n"), ParseError);
  CHECK_THROWS_AS(HistorianReader("no/such/file.csv", schema()), IoError);
}

TEST_CASE("empty historian") { CHECK(read_all("cycle_index,timestamp,L,F,P\n").empty()); }
