#include <doctest.h>

#include <random>

#include "cbi/error.hpp"
#include "cbi/selftest/generator.hpp"
#include "common.hpp"

using namespace cbi;

namespace {

const Value T = Value::boolean(true);
const Value F = Value::boolean(false);

Expr parse_expression_typed(const std::string& text, const StModel& m) {
  return typecheck_expression(parse_expression(text), m.master, m.lib);
}

}  // namespace

TEST_CASE("color-mixing master scan cycle") {
  Executable exe(test::mixing_model());
  MachineState s0 = exe.initial_state();
  CHECK(exe.run_cycle(s0, {{"YellowAmount", 5.0}, {"CanWeight", 0.0}}).actuators.at("YellowValve") == T);
  CHECK(exe.run_cycle(s0, {{"YellowAmount", 0.0}, {"CanWeight", 0.0}}).actuators.at("YellowValve") == F);
  auto r = exe.run_cycle(s0, {{"YellowAmount", 0.0}, {"CanWeight", 150.0}, {"YellowValve", 0.0}});
  CHECK(r.actuators.at("ConveyorMove") == T);
  CHECK(exe.get(r.next, "ConveyorMove") == T);
}

TEST_CASE("state persists across cycles") {
  StModel m = test::model_of(test::wrap("VAR_INPUT s : REAL; END_VAR\nVAR_IN_OUT n : INT; END_VAR\nVAR k : INT := 3; END_VAR",
                                        "n := n + k;"));
  Executable exe(m);
  MachineState s = exe.initial_state();
  for (int i = 0; i < 4; ++i) s = exe.run_cycle(s, {{"s", 0.0}}).next;
  CHECK(exe.get(s, "n") == Value::integer(12));
  CHECK_THROWS_AS(exe.get(s, "missing"), ConfigError);
}

TEST_CASE("REAL arithmetic is binary32") {
  StModel m = test::model_of(test::wrap("VAR_INPUT s : REAL; END_VAR\nVAR_IN_OUT r : REAL; END_VAR", "r := s + 0.1;"));
  Executable exe(m);
  auto r = exe.run_cycle(exe.initial_state(), {{"s", 0.2}});
  CHECK(r.actuators.at("r").as_real() == 0.2f + 0.1f);
}

TEST_CASE("evaluation errors") {
  StModel m = test::model_of(test::wrap("VAR_INPUT s : INT; END_VAR\nVAR_IN_OUT r : INT; END_VAR", "r := 10 / s;"));
  Executable exe(m);
  CHECK_THROWS_AS(exe.run_cycle(exe.initial_state(), {{"s", 0.0}}), EvalError);
  CHECK(exe.run_cycle(exe.initial_state(), {{"s", 3.0}}).actuators.at("r") == Value::integer(3));
}

TEST_CASE("function blocks keep instance state") {
  std::string src =
      "FUNCTION_BLOCK Counter\n VAR_INPUT up : BOOL; END_VAR\n VAR_OUTPUT q : INT; END_VAR\n"
      " IF up THEN q := q + 1; END_IF;\nEND_FUNCTION_BLOCK\n" +
      test::wrap("VAR_INPUT s : REAL; END_VAR\nVAR_IN_OUT n : INT; END_VAR\nVAR c : Counter; END_VAR",
                 "c(up := s > 1.0); n := c.q;");
  Executable exe(test::model_of(src));
  MachineState s = exe.initial_state();
  s = exe.run_cycle(s, {{"s", 2.0}}).next;
  s = exe.run_cycle(s, {{"s", 0.0}}).next;
  s = exe.run_cycle(s, {{"s", 2.0}}).next;
  CHECK(exe.get(s, "n") == Value::integer(2));
  CHECK(exe.fb_fields(s, "c").at("q") == Value::integer(2));
}

TEST_CASE("taint propagation") {
  StModel m = test::model_of(test::wrap("VAR_INPUT S1 : REAL; S2 : REAL; END_VAR\nVAR_IN_OUT a : BOOL; END_VAR\nVAR x : REAL; END_VAR",
                                        "x := S1 + 1.0; IF x > 3.0 THEN a := TRUE; END_IF;"));
  Executable exe(m);
  MachineState s = exe.initial_state();
  std::map<std::string, std::set<std::string, KeyLess>, KeyLess> taint{{"S1", {"S1"}}, {"S2", {"S2"}}};
  CHECK(exe.taint_eval(parse_expression_typed("S1 + 2.0", m), s, taint).taint == std::set<std::string, KeyLess>{"S1"});
  CHECK(exe.taint_eval(parse_expression_typed("S1 > S2", m), s, taint).taint ==
        std::set<std::string, KeyLess>{"S1", "S2"});
  auto end = exe.trace_taint(s, {{"S1", 5.0}, {"S2", 0.0}}, {"S1", "S2"});
  CHECK(end.at("x") == std::set<std::string, KeyLess>{"S1"});
  // Taint follows data flow only; branches on tainted values fork instead.
  CHECK(end.at("a").empty());
}

TEST_CASE("sensor-dependent branches") {
  auto sites = sensor_dependent_branches(test::mixing_model());
  REQUIRE(sites.size() == 2);
  CHECK(sites[0].sensors == std::set<std::string, KeyLess>{"YellowAmount"});
  CHECK(sites[1].sensors == std::set<std::string, KeyLess>{"CanWeight", "YellowAmount"});

  StModel c = test::model_of(test::wrap("VAR_INPUT S1 : REAL; END_VAR\nVAR_IN_OUT a : BOOL; END_VAR\nVAR x : REAL; END_VAR",
                                        "IF 1.0 > 0.0 THEN a := TRUE; END_IF; x := S1 + 1.0; IF x > 3.0 THEN a := FALSE; END_IF;"));
  auto cs = sensor_dependent_branches(c);
  REQUIRE(cs.size() == 2);
  CHECK(cs[0].sensors.empty());
  CHECK(cs[1].sensors == std::set<std::string, KeyLess>{"S1"});
}

TEST_CASE("multi-execution forks across a branch boundary") {
  Executable exe(test::mixing_model());
  Inputs in{{"YellowAmount", 0.05}, {"CanWeight", 0.0}};
  MultiResult r = exe.run_cycle_multi(exe.initial_state(), in, {{"YellowAmount", 0.1}});
  CHECK(r.set.values.at("YellowValve") == std::set<Value>{F, T});
  CHECK(r.set.fork_count >= 2);
  CHECK(r.set.contains("YellowValve", F));
  CHECK(exe.get(r.next, "YellowValve") == T);
}

TEST_CASE("zero margins collapse to the plain cycle") {
  Executable exe(test::mixing_model());
  Inputs in{{"YellowAmount", 0.05}, {"CanWeight", 120.0}};
  MultiResult r = exe.run_cycle_multi(exe.initial_state(), in, {});
  CycleResult plain = exe.run_cycle(exe.initial_state(), in);
  CHECK(r.set.fork_count == 1);
  for (const auto& [a, v] : plain.actuators) CHECK(r.set.values.at(a) == std::set<Value>{v});
  CHECK(r.next == plain.next);
}

TEST_CASE("three tainted sensors on one branch match the 27-way union") {
  StModel m = test::model_of(test::wrap("VAR_INPUT A : REAL; B : REAL; C : REAL; END_VAR\nVAR_IN_OUT q : INT; END_VAR",
                                        "IF A + B - C > 10.0 THEN q := 1; ELSIF A > B THEN q := 2; ELSE q := 3; END_IF;"));
  Executable exe(m);
  Inputs in{{"A", 5.0}, {"B", 5.0}, {"C", 0.0}};
  ErrorMarginSpec eps{{"A", 0.5}, {"B", 0.5}, {"C", 0.5}};
  MultiResult r = exe.run_cycle_multi(exe.initial_state(), in, eps);
  ActuationSet brute = brute_force_actuations(exe, exe.initial_state(), in, eps);
  CHECK(r.set.fork_count <= 27);
  CHECK(r.set.values == brute.values);
  CHECK(r.set.values.at("q") == std::set<Value>{Value::integer(1), Value::integer(2), Value::integer(3)});

  MultiOptions tight;
  tight.fork_cap = 2;
  CHECK_THROWS_AS(exe.run_cycle_multi(exe.initial_state(), in, eps, tight), ForkBudgetExceeded);
}

TEST_CASE("offset runs read s + delta * eps") {
  Executable exe(test::mixing_model());
  OffsetAssignment off;
  off.delta["YellowAmount"] = -1;
  auto r = exe.run_cycle_offset(exe.initial_state(), {{"YellowAmount", 0.05}, {"CanWeight", 0.0}},
                                {{"YellowAmount", 0.1}}, off);
  CHECK(r.actuators.at("YellowValve") == F);
}

TEST_CASE("generated programs agree with the exhaustive union") {
  std::mt19937_64 rng(11);
  selftest::GenOptions opts;
  for (int i = 0; i < 50; ++i) {
    auto g = selftest::generate_program(rng, opts);
    Executable exe(test::model_of(g.source));
    MachineState s = exe.initial_state();
    for (int c = 0; c < 3; ++c) {
      Inputs in = selftest::random_snapshot(rng, g);
      MultiResult r = exe.run_cycle_multi(s, in, g.eps);
      CHECK(r.set.values == brute_force_actuations(exe, s, in, g.eps).values);
      CHECK(r.next == exe.run_cycle(s, in).next);
      s = r.next;
    }
  }
}
