#include "cbi/ast.hpp"

#include <algorithm>
#include <set>

namespace cbi {

std::string_view to_string(BinaryOp op) {
  switch (op) {
    case BinaryOp::Or:
      return "OR";
    case BinaryOp::Xor:
      return "XOR";
    case BinaryOp::And:
      return "AND";
    case BinaryOp::Eq:
      return "=";
    case BinaryOp::Ne:
      return "<>";
    case BinaryOp::Lt:
      return "<";
    case BinaryOp::Le:
      return "<=";
    case BinaryOp::Gt:
      return ">";
    case BinaryOp::Ge:
      return ">=";
    case BinaryOp::Add:
      return "+";
    case BinaryOp::Sub:
      return "-";
    case BinaryOp::Mul:
      return "*";
    case BinaryOp::Div:
      return "/";
    case BinaryOp::Mod:
      return "MOD";
  }
  return "?";
}

int precedence(BinaryOp op) {
  switch (op) {
    case BinaryOp::Or:
      return 1;
    case BinaryOp::Xor:
      return 2;
    case BinaryOp::And:
      return 3;
    case BinaryOp::Eq:
    case BinaryOp::Ne:
      return 4;
    case BinaryOp::Lt:
    case BinaryOp::Le:
    case BinaryOp::Gt:
    case BinaryOp::Ge:
      return 5;
    case BinaryOp::Add:
    case BinaryOp::Sub:
      return 6;
    case BinaryOp::Mul:
    case BinaryOp::Div:
    case BinaryOp::Mod:
      return 7;
  }
  return 0;
}

bool is_comparison(BinaryOp op) { return precedence(op) == 4 || precedence(op) == 5; }

bool is_logical(BinaryOp op) { return op == BinaryOp::And || op == BinaryOp::Or || op == BinaryOp::Xor; }

std::string_view to_string(VarKind k) {
  switch (k) {
    case VarKind::Input:
      return "input";
    case VarKind::Output:
      return "output";
    case VarKind::InOut:
      return "inout";
    case VarKind::Local:
      return "local";
    case VarKind::FbInstance:
      return "fb_state";
  }
  return "?";
}

Expr Expr::make_literal(Value v, SourceSpan span) {
  Expr e;
  e.kind = Kind::Literal;
  e.literal = v;
  e.type = v.type();
  e.span = span;
  return e;
}

Expr Expr::make_var(std::string name, SourceSpan span) {
  Expr e;
  e.kind = Kind::Var;
  e.name = std::move(name);
  e.span = span;
  return e;
}

Expr Expr::make_unary(UnaryOp op, Expr operand, SourceSpan span) {
  Expr e;
  e.kind = Kind::Unary;
  e.unary = op;
  e.span = span.valid() ? span : operand.span;
  e.operands.push_back(std::move(operand));
  return e;
}

Expr Expr::make_binary(BinaryOp op, Expr lhs, Expr rhs, SourceSpan span) {
  Expr e;
  e.kind = Kind::Binary;
  e.binary = op;
  e.span = span.valid() ? span : merge(lhs.span, rhs.span);
  e.operands.push_back(std::move(lhs));
  e.operands.push_back(std::move(rhs));
  return e;
}

Expr Expr::make_call(std::string name, std::vector<Expr> args, SourceSpan span) {
  Expr e;
  e.kind = Kind::Call;
  e.name = std::move(name);
  e.operands = std::move(args);
  e.span = span;
  return e;
}

Statement Statement::make_assign(std::string target, Expr value, SourceSpan span) {
  Statement s;
  s.kind = Kind::Assign;
  s.target = std::move(target);
  s.value = std::move(value);
  s.span = span;
  return s;
}

Statement Statement::make_if(std::vector<CondBlock> branches, std::optional<std::vector<Statement>> otherwise,
                             SourceSpan span) {
  Statement s;
  s.kind = Kind::If;
  s.branches = std::move(branches);
  if (otherwise) {
    s.has_else = true;
    s.else_body = std::move(*otherwise);
  }
  s.span = span;
  return s;
}

const VarDecl* FunctionBlockDef::find(std::string_view n) const {
  for (const auto* list : {&inputs, &outputs, &locals})
    for (const auto& d : *list)
      if (iequals(d.name, n)) return &d;
  return nullptr;
}

const FunctionDef* PouLibrary::function(std::string_view n) const {
  auto it = functions.find(n);
  return it == functions.end() ? nullptr : &it->second;
}

const FunctionBlockDef* PouLibrary::function_block(std::string_view n) const {
  auto it = function_blocks.find(n);
  return it == function_blocks.end() ? nullptr : &it->second;
}

std::vector<const VarDecl*> StProgram::declarations() const {
  std::vector<const VarDecl*> out;
  for (const auto* list : {&inputs, &outputs, &inouts, &locals})
    for (const auto& d : *list) out.push_back(&d);
  return out;
}

const VarDecl* StProgram::find(std::string_view n) const {
  for (const auto* list : {&inputs, &outputs, &inouts, &locals})
    for (const auto& d : *list)
      if (iequals(d.name, n)) return &d;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Structural equality

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.operands.size() != b.operands.size()) return false;
  switch (a.kind) {
    case Expr::Kind::Literal:
      if (!(a.literal == b.literal)) return false;
      break;
    case Expr::Kind::Var:
    case Expr::Kind::Call:
      if (!iequals(a.name, b.name)) return false;
      break;
    case Expr::Kind::Unary:
      if (a.unary != b.unary) return false;
      break;
    case Expr::Kind::Binary:
      if (a.binary != b.binary) return false;
      break;
  }
  for (std::size_t i = 0; i < a.operands.size(); ++i)
    if (!structurally_equal(a.operands[i], b.operands[i])) return false;
  return true;
}

bool structurally_equal(const std::vector<Statement>& a, const std::vector<Statement>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!structurally_equal(a[i], b[i])) return false;
  return true;
}

bool structurally_equal(const Statement& a, const Statement& b) {
  if (a.kind != b.kind || a.has_else != b.has_else) return false;
  if (!structurally_equal(a.else_body, b.else_body)) return false;
  switch (a.kind) {
    case Statement::Kind::Assign:
      return iequals(a.target, b.target) && structurally_equal(a.value, b.value);
    case Statement::Kind::If:
      if (a.branches.size() != b.branches.size()) return false;
      for (std::size_t i = 0; i < a.branches.size(); ++i) {
        if (!structurally_equal(a.branches[i].cond, b.branches[i].cond)) return false;
        if (!structurally_equal(a.branches[i].body, b.branches[i].body)) return false;
      }
      return true;
    case Statement::Kind::Case:
      if (!structurally_equal(a.value, b.value) || a.arms.size() != b.arms.size()) return false;
      for (std::size_t i = 0; i < a.arms.size(); ++i) {
        const auto& la = a.arms[i].labels;
        const auto& lb = b.arms[i].labels;
        if (la.size() != lb.size()) return false;
        for (std::size_t j = 0; j < la.size(); ++j)
          if (la[j].lo != lb[j].lo || la[j].hi != lb[j].hi) return false;
        if (!structurally_equal(a.arms[i].body, b.arms[i].body)) return false;
      }
      return true;
    case Statement::Kind::FbCall:
      if (!iequals(a.target, b.target) || a.args.size() != b.args.size()) return false;
      for (std::size_t i = 0; i < a.args.size(); ++i)
        if (!iequals(a.args[i].param, b.args[i].param) || !structurally_equal(a.args[i].value, b.args[i].value))
          return false;
      return true;
  }
  return false;
}

bool structurally_equal(const VarDecl& a, const VarDecl& b) {
  if (!iequals(a.name, b.name) || a.kind != b.kind) return false;
  if (a.kind == VarKind::FbInstance) return iequals(a.fb_type, b.fb_type);
  if (a.type != b.type || a.init.has_value() != b.init.has_value()) return false;
  return !a.init || *a.init == *b.init;
}

namespace {

bool decls_equal(const std::vector<VarDecl>& a, const std::vector<VarDecl>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!structurally_equal(a[i], b[i])) return false;
  return true;
}

}  // namespace

bool structurally_equal(const StProgram& a, const StProgram& b) {
  return iequals(a.name, b.name) && decls_equal(a.inputs, b.inputs) && decls_equal(a.outputs, b.outputs) &&
         decls_equal(a.inouts, b.inouts) && decls_equal(a.locals, b.locals) && structurally_equal(a.body, b.body) &&
         a.task_interval == b.task_interval;
}

bool structurally_equal(const FunctionDef& a, const FunctionDef& b) {
  return iequals(a.name, b.name) && a.return_type == b.return_type && decls_equal(a.inputs, b.inputs) &&
         decls_equal(a.locals, b.locals) && structurally_equal(a.body, b.body);
}

bool structurally_equal(const FunctionBlockDef& a, const FunctionBlockDef& b) {
  return iequals(a.name, b.name) && decls_equal(a.inputs, b.inputs) && decls_equal(a.outputs, b.outputs) &&
         decls_equal(a.locals, b.locals) && structurally_equal(a.body, b.body);
}

bool structurally_equal(const PouLibrary& a, const PouLibrary& b) {
  if (a.functions.size() != b.functions.size() || a.function_blocks.size() != b.function_blocks.size()) return false;
  for (const auto& [name, def] : a.functions) {
    const auto* other = b.function(name);
    if (!other || !structurally_equal(def, *other)) return false;
  }
  for (const auto& [name, def] : a.function_blocks) {
    const auto* other = b.function_block(name);
    if (!other || !structurally_equal(def, *other)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Read and write sets

namespace {

void collect_writes(const std::vector<Statement>& body, std::set<std::string>& out) {
  for (const auto& s : body) {
    switch (s.kind) {
      case Statement::Kind::Assign:
      case Statement::Kind::FbCall:
        out.insert(to_key(s.target));
        break;
      case Statement::Kind::If:
        for (const auto& b : s.branches) collect_writes(b.body, out);
        break;
      case Statement::Kind::Case:
        for (const auto& a : s.arms) collect_writes(a.body, out);
        break;
    }
    collect_writes(s.else_body, out);
  }
}

void collect_reads(const Expr& e, std::set<std::string>& out) {
  if (e.kind == Expr::Kind::Var) {
    auto dot = e.name.find('.');
    out.insert(to_key(dot == std::string::npos ? std::string_view(e.name) : std::string_view(e.name).substr(0, dot)));
  }
  for (const auto& o : e.operands) collect_reads(o, out);
}

void collect_reads(const std::vector<Statement>& body, std::set<std::string>& out) {
  for (const auto& s : body) {
    switch (s.kind) {
      case Statement::Kind::Assign:
        collect_reads(s.value, out);
        break;
      case Statement::Kind::FbCall:
        for (const auto& a : s.args) collect_reads(a.value, out);
        break;
      case Statement::Kind::If:
        for (const auto& b : s.branches) {
          collect_reads(b.cond, out);
          collect_reads(b.body, out);
        }
        break;
      case Statement::Kind::Case:
        collect_reads(s.value, out);
        for (const auto& a : s.arms) collect_reads(a.body, out);
        break;
    }
    collect_reads(s.else_body, out);
  }
}

}  // namespace

std::vector<std::string> write_set(const std::vector<Statement>& body) {
  std::set<std::string> out;
  collect_writes(body, out);
  return {out.begin(), out.end()};
}

std::vector<std::string> read_set(const std::vector<Statement>& body) {
  std::set<std::string> out;
  collect_reads(body, out);
  return {out.begin(), out.end()};
}

}  // namespace cbi
