#pragma once

// Abstract syntax for the supported Structured Text subset.
//
// Nodes are plain values: copying a program deep-copies its tree. Identifiers
// keep the spelling used in the source; lookups go through to_key().

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cbi/error.hpp"
#include "cbi/names.hpp"
#include "cbi/value.hpp"

namespace cbi {

using Millis = std::chrono::milliseconds;

enum class UnaryOp : std::uint8_t { Not, Neg };

enum class BinaryOp : std::uint8_t {
  Or,
  Xor,
  And,
  Eq,
  Ne,
  Lt,
  Le,
  Gt,
  Ge,
  Add,
  Sub,
  Mul,
  Div,
  Mod,
};

std::string_view to_string(BinaryOp op);
int precedence(BinaryOp op);
bool is_comparison(BinaryOp op);
bool is_logical(BinaryOp op);

struct Expr {
  enum class Kind : std::uint8_t { Literal, Var, Unary, Binary, Call };

  Kind kind{Kind::Literal};
  SourceSpan span;
  Value literal;                // Literal
  std::string name;             // Var ("X" or "INST.FIELD"), Call (function)
  UnaryOp unary{UnaryOp::Not};  // Unary
  BinaryOp binary{BinaryOp::Add};
  std::vector<Expr> operands;   // Unary: 1, Binary: 2, Call: arguments
  bool parenthesized{false};    // written in parentheses in the source

  // Filled in by typecheck().
  Type type{Type::Bool};

  static Expr make_literal(Value v, SourceSpan span = {});
  static Expr make_var(std::string name, SourceSpan span = {});
  static Expr make_unary(UnaryOp op, Expr operand, SourceSpan span = {});
  static Expr make_binary(BinaryOp op, Expr lhs, Expr rhs, SourceSpan span = {});
  static Expr make_call(std::string name, std::vector<Expr> args, SourceSpan span = {});
};

struct Statement;

struct CondBlock {
  Expr cond;
  std::vector<Statement> body;
};

/// Inclusive integer range of a CASE label; single labels have lo == hi.
struct CaseLabel {
  std::int64_t lo{0};
  std::int64_t hi{0};
};

struct CaseArm {
  std::vector<CaseLabel> labels;
  std::vector<Statement> body;
  SourceSpan span;
};

struct Argument {
  std::string param;
  Expr value;
};

struct Statement {
  enum class Kind : std::uint8_t { Assign, If, Case, FbCall };

  Kind kind{Kind::Assign};
  SourceSpan span;
  std::string target;               // Assign: variable; FbCall: instance
  Expr value;                       // Assign: right-hand side; Case: selector
  std::vector<CondBlock> branches;  // If: IF followed by ELSIF blocks
  std::vector<CaseArm> arms;        // Case
  bool has_else{false};
  std::vector<Statement> else_body;
  std::vector<Argument> args;  // FbCall

  static Statement make_assign(std::string target, Expr value, SourceSpan span = {});
  static Statement make_if(std::vector<CondBlock> branches, std::optional<std::vector<Statement>> otherwise,
                           SourceSpan span = {});
};

enum class VarKind : std::uint8_t { Input, Output, InOut, Local, FbInstance };

std::string_view to_string(VarKind k);

struct VarDecl {
  std::string name;
  Type type{Type::Bool};  // meaningless for FbInstance
  VarKind kind{VarKind::Local};
  std::optional<Value> init;
  std::string fb_type;  // FbInstance only
  SourceSpan span;

  /// Initial value as the runtime sees it: `init` or the type's zero.
  Value initial_value() const { return init ? init->convert_to(type) : Value::zero(type); }
};

struct FunctionDef {
  std::string name;
  Type return_type{Type::Bool};
  std::vector<VarDecl> inputs;
  std::vector<VarDecl> locals;
  std::vector<Statement> body;
  SourceSpan span;
};

struct FunctionBlockDef {
  std::string name;
  std::vector<VarDecl> inputs;
  std::vector<VarDecl> outputs;
  std::vector<VarDecl> locals;  // may include nested FbInstance declarations
  std::vector<Statement> body;
  SourceSpan span;

  const VarDecl* find(std::string_view name) const;
};

struct PouLibrary {
  std::map<std::string, FunctionDef, KeyLess> functions;
  std::map<std::string, FunctionBlockDef, KeyLess> function_blocks;

  const FunctionDef* function(std::string_view name) const;
  const FunctionBlockDef* function_block(std::string_view name) const;
  bool empty() const { return functions.empty() && function_blocks.empty(); }
};

struct StProgram {
  std::string name;
  std::vector<VarDecl> inputs;
  std::vector<VarDecl> outputs;
  std::vector<VarDecl> inouts;
  std::vector<VarDecl> locals;  // VAR block: plain locals and FB instances
  std::vector<Statement> body;
  Millis task_interval{0};
  Millis exec_budget{0};
  SourceSpan span;

  /// All declarations in block order: inputs, outputs, inouts, locals.
  std::vector<const VarDecl*> declarations() const;
  const VarDecl* find(std::string_view name) const;
};

/// One parsed source file: its PROGRAM plus the FUNCTIONs and FUNCTION_BLOCKs
/// defined alongside it.
struct ParsedUnit {
  StProgram program;
  PouLibrary library;
};

// Structural equality ignores source spans, parenthesization and the
// identifier spelling (names compare case-insensitively).
bool structurally_equal(const Expr& a, const Expr& b);
bool structurally_equal(const Statement& a, const Statement& b);
bool structurally_equal(const std::vector<Statement>& a, const std::vector<Statement>& b);
bool structurally_equal(const VarDecl& a, const VarDecl& b);
bool structurally_equal(const StProgram& a, const StProgram& b);
bool structurally_equal(const FunctionDef& a, const FunctionDef& b);
bool structurally_equal(const FunctionBlockDef& a, const FunctionBlockDef& b);
bool structurally_equal(const PouLibrary& a, const PouLibrary& b);

/// Variables assigned anywhere in `body` (FB calls write only the instance),
/// as keys.
std::vector<std::string> write_set(const std::vector<Statement>& body);

/// Variables read anywhere in `body`, as keys. Dotted FB member reads report
/// the instance.
std::vector<std::string> read_set(const std::vector<Statement>& body);

}  // namespace cbi
