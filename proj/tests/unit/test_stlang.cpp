#include <doctest.h>

#include <random>

#include "cbi/error.hpp"
#include "cbi/selftest/generator.hpp"
#include "common.hpp"

using namespace cbi;

TEST_CASE("color-mixing plc1 parses to inputs, inouts and a 1 s task") {
  ParsedUnit u = parse_program(read_file(test::source_path("data/mixing/plc1.st")));
  const StProgram& p = u.program;
  CHECK(p.name == "plc1");
  REQUIRE(p.inputs.size() == 1);
  CHECK(p.inputs[0].name == "YellowAmount");
  CHECK(p.inputs[0].type == Type::Real);
  REQUIRE(p.inouts.size() == 1);
  CHECK(p.inouts[0].name == "YellowValve");
  CHECK(p.inouts[0].type == Type::Bool);
  CHECK(p.task_interval == Millis(1000));
  CHECK(p.body.size() == 1);
  CHECK(p.body[0].kind == Statement::Kind::If);
}

TEST_CASE("empty program body") {
  ParsedUnit u = parse_program(test::wrap("VAR_INPUT END_VAR", ""));
  CHECK(u.program.body.empty());
  CHECK(u.program.inputs.empty());
}

TEST_CASE("keywords and identifiers are case-insensitive") {
  ParsedUnit u = parse_program(test::wrap("var_input x : real; end_var\nVAR y : BOOL; END_VAR", "if X > 1.0 then Y := true; end_if;"));
  CHECK(u.program.find("X") != nullptr);
  CHECK(u.program.body.size() == 1);
}

TEST_CASE("printed programs re-parse to the same AST") {
  std::mt19937_64 rng(7);
  selftest::GenOptions opts;
  for (int i = 0; i < 20; ++i) {
    selftest::GeneratedProgram g = selftest::generate_program(rng, opts);
    ParsedUnit a = parse_program(g.source);
    std::string printed = print_unit(a);
    ParsedUnit b = parse_program(printed);
    CHECK_MESSAGE(structurally_equal(a.program, b.program), printed);
    CHECK(structurally_equal(a.library, b.library));
    CHECK(print_unit(b) == printed);
  }
}

TEST_CASE("integer literal as BOOL depends on the strictness flag") {
  std::string src = test::wrap("VAR_IN_OUT YellowValve : BOOL; END_VAR", "YellowValve := 1;");
  CHECK_NOTHROW(parse_program(src));
  TypecheckOptions strict;
  strict.int_literal_as_bool = false;
  CHECK_THROWS_AS(parse_program(src, strict), TypeError);
  CHECK_THROWS_AS(parse_program(test::wrap("VAR_IN_OUT v : BOOL; END_VAR", "v := 2;")), TypeError);
}

TEST_CASE("expression typing") {
  ParsedUnit u = parse_program(test::wrap("VAR_INPUT CanWeight : REAL; END_VAR", ""));
  Expr cmp = typecheck_expression(parse_expression("CanWeight > 100.0"), u.program, u.library);
  CHECK(cmp.type == Type::Bool);
  CHECK_THROWS_AS(typecheck_expression(parse_expression("NOT(CanWeight)"), u.program, u.library), TypeError);
  Expr sum = typecheck_expression(parse_expression("CanWeight + 1"), u.program, u.library);
  CHECK(sum.type == Type::Real);
}

TEST_CASE("syntax errors report position and expectation") {
  try {
    parse_program(test::wrap("VAR x : REAL; END_VAR", "x := ;"));
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.span().line > 0);
    CHECK(!e.expected().empty());
  }
  CHECK_THROWS_AS(parse_program("PROGRAM p END_PROGRAM"), StError);
}

TEST_CASE("duplicate and unknown names") {
  CHECK_THROWS_AS(parse_program(test::wrap("VAR x : REAL; X : BOOL; END_VAR", "")), DuplicateName);
  CHECK_THROWS_AS(parse_program(test::wrap("VAR x : REAL; END_VAR", "y := 1.0;")), TypeError);
}

TEST_CASE("recursive function calls are rejected") {
  std::string src =
      "FUNCTION F : REAL\n VAR_INPUT x : REAL; END_VAR\n F := G(x);\nEND_FUNCTION\n"
      "FUNCTION G : REAL\n VAR_INPUT x : REAL; END_VAR\n G := F(x);\nEND_FUNCTION\n" +
      test::wrap("VAR y : REAL; END_VAR", "y := F(1.0);");
  CHECK_THROWS_AS(parse_program(src), RecursionError);
}

TEST_CASE("durations") {
  CHECK(format_duration(Millis(1000)) == "T#1s");
  CHECK(format_duration(Millis(250)) == "T#250ms");
  ParsedUnit u = parse_program(test::wrap("", "", "p", "T#1s500ms"));
  CHECK(u.program.task_interval == Millis(1500));
}
