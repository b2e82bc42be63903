#include <doctest.h>

#include "cbi/error.hpp"
#include "cbi/plantsim.hpp"
#include "cbi/selftest/plant.hpp"
#include "common.hpp"

using namespace cbi;

namespace {

FileReader one_file(const std::string& text) {
  return [text](const std::string&) { return text; };
}

const std::string kProg = test::wrap("VAR_INPUT a : REAL; END_VAR\nVAR_IN_OUT b : BOOL; END_VAR", "b := a > 1.0;");

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("manifest") {
  auto plcs = parse_manifest(R"([{"plc_name": "x", "st_source_path": "x.st", "exec_budget_ms": 40}])", one_file(kProg));
  REQUIRE(plcs.size() == 1);
  CHECK(plcs[0].name == "x");
  CHECK(plcs[0].unit.program.exec_budget == Millis(40));
  CHECK(parse_manifest(R"({"plcs": [{"plc_name": "x", "st_source_path": "x.st", "exec_budget_ms": 1}]})",
                       one_file(kProg)).size() == 1);
  CHECK(error_of([] { parse_manifest("[]", one_file(kProg)); }) == "manifest lists no PLCs");
  CHECK(error_of([] { parse_manifest(R"([{"plc_name": "x", "st_source_path": "x.st"}])", one_file(kProg)); }) ==
        "manifest[0].exec_budget_ms: required field missing");
  CHECK(error_of([] {
          parse_manifest(R"([{"plc_name": "x", "st_source_path": "x.st", "exec_budget_ms": 1, "extra": 2}])",
                         one_file(kProg));
        }) == "manifest[0].extra: unknown field");
  CHECK_THROWS_AS(parse_manifest("{", one_file(kProg)), ConfigError);
  CHECK_THROWS_AS(load_manifest(test::source_path("data/nope.json")), IoError);
}

TEST_CASE("topology file") {
  PlantTopology t = load_topology(test::source_path("data/plant/topology.json"));
  CHECK(t.tanks.size() == 3);
  CHECK(t.flows.size() == 3);
  const TankModel* t1 = t.tank("LIT1");
  REQUIRE(t1);
  CHECK(t1->inflow == std::vector<std::string>{"FIT1"});
  CHECK(t1->outflow == std::vector<std::string>{"FIT2"});
  CHECK(t1->capacity == Interval{0.0, 1000.0});
  CHECK(t.flow("FIT1")->base_rate == doctest::Approx(9.7));
  CHECK(t.thresholds.at("LIT1") == 5.0);
}

TEST_CASE("topology errors") {
  CHECK_THROWS_AS(parse_topology(R"({"tanks": [{"level_sensor": "L", "inflow": ["F"], "outflow": [], "F_c": 1,
                                               "capacity": [0, 10]}], "flows": []})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_topology(R"({"tanks": [], "flows": [{"flow_sensor": "F", "base_rate": 1, "gates": [],
                                               "colour": "red"}]})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_topology(R"({"tanks": [{"level_sensor": "L", "inflow": [], "outflow": [], "F_c": 1,
                                               "capacity": [10, 0]}], "flows": []})"),
                  ConfigError);
}

TEST_CASE("margins") {
  auto eps = parse_margins(R"({"LIT1": 0.5, "fit1": 0})", "eps");
  CHECK(eps.at("lit1") == 0.5);
  CHECK(eps.at("FIT1") == 0.0);
  CHECK(error_of([] { parse_margins(R"({"LIT1": -1})", "eps"); }) == "eps.LIT1: must be finite and >= 0");
  CHECK_THROWS_AS(parse_margins(R"({"LIT1": "x"})", "tau"), ConfigError);
  CHECK_THROWS_AS(parse_margins("[1]", "tau"), ConfigError);
}

TEST_CASE("attack scenarios") {
  auto attacks = parse_attacks(R"([
    {"name": "a", "kind": "sensor_replay", "window": [10, 20], "target": "L", "recorded_from": 2, "freeze": true},
    {"name": "b", "kind": "actuation_override", "window": [5, 6], "target": "P", "value": false, "stealth": true},
    {"name": "c", "kind": "logic_replace", "window": [1, 2], "plc": "p", "source_path": "evil.st"},
    {"name": "d", "kind": "threshold_tamper", "window": [1, 2], "plc": "p", "constant_site": 0, "new_value": 3.5},
    {"name": "e", "kind": "sensor_bias", "window": [1, 2], "target": "L", "amount": 2, "ramp": true}
  ])", one_file(kProg));
  REQUIRE(attacks.size() == 5);
  CHECK(attacks[0].kind == AttackKind::SensorReplay);
  CHECK(attacks[0].freeze);
  CHECK(attacks[0].window == Window{10, 20});
  CHECK(attacks[1].value == 0.0);
  CHECK(attacks[1].stealth);
  CHECK(attacks[2].source == kProg);
  CHECK(attacks[3].new_value == 3.5);
  CHECK(attacks[4].ramp);
  CHECK(windows_of(attacks)[0] == Window{10, 20});
  CHECK_THROWS_AS(parse_attacks(R"([{"name": "x", "kind": "teleport", "window": [1, 2]}])", one_file(kProg)),
                  ConfigError);
  CHECK_THROWS_AS(parse_attacks(R"([{"name": "x", "kind": "sensor_bias", "window": [1], "target": "L",
                                     "amount": 1}])", one_file(kProg)),
                  ConfigError);
}

TEST_CASE("shipped plant configuration") {
  SimSetup s = load_sim(test::source_path("data/plant/sim.json"));
  CHECK(s.config.cycles == 10000);
  CHECK(s.config.mismatch.at("F_c") == 0.02);
  CHECK(s.plcs.size() == 3);
  auto attacks = load_attacks(test::source_path("data/plant/attacks.json"));
  CHECK(attacks.size() >= 12);
}

TEST_CASE("shipped eps equals the induced error bound") {
  selftest::Plant plant = selftest::load_plant();
  ErrorMarginSpec bound = selftest::induced_error_bound(plant.topology, plant.benign.mismatch.at("F_c"));
  auto eps = load_margins(test::source_path("data/plant/eps.json"), "eps");
  REQUIRE(eps.size() == bound.size());
  for (const auto& [s, e] : bound) CHECK(eps.at(s) == doctest::Approx(e).epsilon(1e-9));
  // (9.7 + 6.7) * 0.02 + 0.001 on LIT1
  CHECK(bound.at("LIT1") == doctest::Approx(0.329));
}
