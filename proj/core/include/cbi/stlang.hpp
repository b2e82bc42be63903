#pragma once

// Structured Text front end: parsing, checking and printing.

#include <string>
#include <string_view>

#include "cbi/ast.hpp"

namespace cbi {

/// Strictness switches of the type checker.
///
///   int_literal_as_bool | `B := 1;` (B: BOOL) | `B := 2;` | `B := I;` (I: INT)
///   --------------------+--------------------+----------+---------------------
///   true (default)      | accepted as TRUE   | rejected | rejected
///   false (strict IEC)  | rejected           | rejected | rejected
struct TypecheckOptions {
  bool int_literal_as_bool{true};
};

/// Parses one ST source file: exactly one PROGRAM, any number of FUNCTION and
/// FUNCTION_BLOCK definitions and a CONFIGURATION binding the program to a
/// TASK. The result is name-resolved and type-checked. Throws SyntaxError,
/// TypeError, DuplicateName or RecursionError.
ParsedUnit parse_program(std::string_view source, const TypecheckOptions& options = {});

/// Parses a single expression (no name resolution).
Expr parse_expression(std::string_view source);

/// Resolves names and annotates every expression with its type. Returns the
/// typed copy; `prog` is left untouched. `lib` must already be checked.
/// Rejects recursive POU graphs reachable from the program.
StProgram typecheck(const StProgram& prog, const PouLibrary& lib, const TypecheckOptions& options = {});

/// Type-checks an expression against a program's declarations.
Expr typecheck_expression(const Expr& expr, const StProgram& prog, const PouLibrary& lib,
                          const TypecheckOptions& options = {});

/// Type-checks the library's functions and function blocks in isolation and
/// returns the annotated copy. Rejects duplicate names and recursion.
PouLibrary typecheck_library(const PouLibrary& lib, const TypecheckOptions& options = {});

// Printing. Output re-parses to a structurally equal tree.

std::string print_expression(const Expr& e);
std::string print_statements(const std::vector<Statement>& body, int indent = 1);
std::string print_library(const PouLibrary& lib);
std::string print_program(const StProgram& prog);

/// CONFIGURATION block binding `prog` to a periodic task.
std::string print_configuration(const StProgram& prog, std::string_view config_name = "Config0");

/// Library, program and configuration: a complete source file.
std::string print_unit(const ParsedUnit& unit);

/// "T#1s", "T#250ms", ...
std::string format_duration(Millis ms);

}  // namespace cbi
