#include <doctest.h>

#include "cbi/error.hpp"
#include "common.hpp"

using namespace cbi;

namespace {

StProgram timed(int budget_ms, int interval_ms) {
  StProgram p;
  p.exec_budget = Millis(budget_ms);
  p.task_interval = Millis(interval_ms);
  return p;
}

PlcSource plc(const std::string& name, const std::string& decls, const std::string& body) {
  return {name, parse_program(test::wrap(decls, body, name))};
}

}  // namespace

TEST_CASE("color-mixing pair merges variables and concatenates bodies") {
  auto plcs = load_manifest(test::source_path("data/mixing/manifest.json"));
  StModel m = consolidate(plcs);
  std::vector<std::string> inputs, inouts;
  for (const auto& d : m.master.inputs) inputs.push_back(d.name);
  for (const auto& d : m.master.inouts) inouts.push_back(d.name);
  CHECK(inputs == std::vector<std::string>{"YellowAmount", "CanWeight"});
  CHECK(inouts == std::vector<std::string>{"YellowValve", "ConveyorMove"});
  REQUIRE(m.master.body.size() == 2);
  CHECK(structurally_equal(m.master.body[0], plcs[0].unit.program.body[0]));
  CHECK(structurally_equal(m.master.body[1], plcs[1].unit.program.body[0]));
  CHECK(m.io_map.at("YellowValve").role == Role::Actuator);
  CHECK(m.io_map.at("YellowValve").owner_plc == "plc1");
  CHECK(m.io_map.at("CanWeight").role == Role::Sensor);
  CHECK(m.sensors() == std::vector<std::string>{"YellowAmount", "CanWeight"});
}

TEST_CASE("color-mixing master matches the golden listing") {
  CHECK(print_master(test::mixing_model()) == read_file(test::source_path("tests/golden/mixing_master.st")));
}

TEST_CASE("single program is its own master") {
  PlcSource p = plc("solo", "VAR_INPUT a : REAL; END_VAR\nVAR_IN_OUT b : BOOL; END_VAR", "b := a > 1.0;");
  StModel m = consolidate({p});
  CHECK(structurally_equal(m.master.body, p.unit.program.body));
  CHECK(m.master.inputs.size() == 1);
  CHECK(m.master.inouts.size() == 1);
  CHECK(m.renames.empty());
}

TEST_CASE("two writers of one actuator conflict") {
  PlcSource a = plc("a", "VAR_IN_OUT ConveyorMove : BOOL; END_VAR", "ConveyorMove := TRUE;");
  PlcSource b = plc("b", "VAR_IN_OUT ConveyorMove : BOOL; END_VAR", "ConveyorMove := FALSE;");
  try {
    consolidate({a, b});
    FAIL("expected WriteWriteConflict");
  } catch (const WriteWriteConflict& e) {
    CHECK(iequals(e.name(), "ConveyorMove"));
    CHECK(e.plc_a() == "a");
    CHECK(e.plc_b() == "b");
  }
}

TEST_CASE("shared name with different types conflicts") {
  PlcSource a = plc("a", "VAR_INPUT s : REAL; END_VAR\nVAR_IN_OUT x : BOOL; END_VAR", "x := s > 0.0;");
  PlcSource b = plc("b", "VAR_INPUT s : INT; END_VAR\nVAR_IN_OUT y : BOOL; END_VAR", "y := s > 0;");
  CHECK_THROWS_AS(consolidate({a, b}), TypeConflict);
  CHECK_THROWS_AS(consolidate(std::vector<PlcSource>{}), EmptyInput);
}

TEST_CASE("colliding locals are renamed per PLC") {
  PlcSource a = plc("a", "VAR_INPUT s : REAL; END_VAR\nVAR_IN_OUT x : BOOL; END_VAR\nVAR t : REAL; END_VAR",
                    "t := s * 2.0; x := t > 1.0;");
  PlcSource b = plc("b", "VAR_INPUT s : REAL; END_VAR\nVAR_IN_OUT y : BOOL; END_VAR\nVAR t : REAL; END_VAR",
                    "t := s * 3.0; y := t > 1.0;");
  StModel m = consolidate({a, b});
  REQUIRE(m.renames.size() == 2);
  CHECK(m.renames[0].plc == "a");
  CHECK(m.renames[0].to == "a_t");
  CHECK(m.master.find("a_t") != nullptr);
  CHECK(m.master.find("b_t") != nullptr);
  Executable exe(m);
  auto r = exe.run_cycle(exe.initial_state(), {{"s", 0.4}});
  CHECK(r.actuators.at("x") == Value::boolean(false));
  CHECK(r.actuators.at("y") == Value::boolean(true));
}

TEST_CASE("timing check uses a strict inequality") {
  auto ok = check_timing({timed(5, 1000), timed(5, 1000)});
  CHECK(ok.ok);
  CHECK(ok.sum_budget == Millis(10));
  auto bad = check_timing({timed(600, 1000), timed(500, 2000)});
  CHECK_FALSE(bad.ok);
  CHECK(bad.sum_budget == Millis(1100));
  CHECK(bad.min_interval == Millis(1000));
  CHECK_FALSE(check_timing({timed(1000, 1000)}).ok);
  CHECK(check_timing({timed(999, 1000)}).ok);
}

TEST_CASE("segment order") {
  StModel m = test::mixing_model();
  SUBCASE("color-mixing snapshot agrees under both orders") {
    CHECK_FALSE(permutation_equivalence_on(m, {{"YellowAmount", 5.0}, {"CanWeight", 50.0}, {"YellowValve", 0.0}}));
  }
  SUBCASE("a same-cycle read of another PLC's output is order dependent") {
    auto cx = permutation_equivalence_on(m, {{"YellowAmount", 5.0}, {"CanWeight", 150.0}, {"YellowValve", 0.0}});
    REQUIRE(cx);
    CHECK(iequals(cx->variable, "ConveyorMove"));
    CHECK(cx->value_a != cx->value_b);
  }
  SUBCASE("one program has one order") {
    StModel solo = consolidate({plc("solo", "VAR_INPUT a : REAL; END_VAR\nVAR_IN_OUT b : BOOL; END_VAR", "b := a > 1.0;")});
    CHECK_FALSE(permutation_equivalence_check(solo, 50));
  }
  SUBCASE("reorder moves segments") {
    StModel r = reorder(m, {"plc2", "plc1"});
    CHECK(r.plc_order == std::vector<std::string>{"plc2", "plc1"});
    CHECK(r.segment_spans.at("plc2").begin == 0);
    CHECK(structurally_equal(r.master.body[0], m.master.body[1]));
  }
}

TEST_CASE("manifest budgets reach the programs") {
  auto plcs = load_manifest(test::source_path("data/plant/manifest.json"));
  REQUIRE(plcs.size() == 3);
  for (const auto& p : plcs) CHECK(p.unit.program.exec_budget == Millis(250));
  CHECK(check_timing(programs_of(plcs)).ok);
}
