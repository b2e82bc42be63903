#include <cmath>

#include "cbi/stlang.hpp"

namespace cbi {

namespace {

constexpr int kUnaryPrecedence = 8;

int expr_precedence(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Binary:
      return precedence(e.binary);
    case Expr::Kind::Unary:
      return kUnaryPrecedence;
    case Expr::Kind::Literal:
      // A negative literal reads back as a signed number only where a unary
      // minus could stand.
      return kUnaryPrecedence;
    default:
      return kUnaryPrecedence + 1;
  }
}

std::string op_text(BinaryOp op) {
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

bool is_negative_literal(const Expr& e) {
  if (e.kind != Expr::Kind::Literal) return false;
  if (e.literal.type() == Type::Int) return e.literal.as_int() < 0;
  if (e.literal.type() == Type::Real) return std::signbit(e.literal.as_real());
  return false;
}

std::string print(const Expr& e);

std::string wrap(const Expr& e, bool parens) { return parens ? "(" + print(e) + ")" : print(e); }

std::string print_bare(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Literal:
      return e.literal.to_string();
    case Expr::Kind::Var:
      return e.name;
    case Expr::Kind::Unary: {
      const Expr& x = e.operands[0];
      bool parens = !x.parenthesized && (expr_precedence(x) < kUnaryPrecedence || is_negative_literal(x) ||
                                         (e.unary == UnaryOp::Neg && x.kind == Expr::Kind::Literal));
      if (e.unary == UnaryOp::Not) {
        std::string inner = wrap(x, parens);
        return inner.front() == '(' ? "NOT" + inner : "NOT " + inner;
      }
      return "-" + wrap(x, parens || (x.kind == Expr::Kind::Unary && !x.parenthesized));
    }
    case Expr::Kind::Binary: {
      const Expr& l = e.operands[0];
      const Expr& r = e.operands[1];
      int p = precedence(e.binary);
      bool lp = !l.parenthesized && expr_precedence(l) < p;
      // Operators associate to the left: an equal-precedence right operand
      // needs parentheses.
      bool rp = !r.parenthesized && expr_precedence(r) <= p;
      return wrap(l, lp) + " " + op_text(e.binary) + " " + wrap(r, rp);
    }
    case Expr::Kind::Call: {
      std::string s = e.name + "(";
      for (std::size_t i = 0; i < e.operands.size(); ++i) {
        if (i) s += ", ";
        s += print(e.operands[i]);
      }
      return s + ")";
    }
  }
  return "?";
}

std::string print(const Expr& e) { return e.parenthesized ? "(" + print_bare(e) + ")" : print_bare(e); }

std::string pad(int indent) { return std::string(static_cast<std::size_t>(indent) * 2, ' '); }

void print_body(const std::vector<Statement>& body, int indent, std::string& out);

void print_statement(const Statement& s, int indent, std::string& out) {
  const std::string in = pad(indent);
  switch (s.kind) {
    case Statement::Kind::Assign:
      out += in + s.target + " := " + print(s.value) + ";\n";
      return;
    case Statement::Kind::FbCall: {
      out += in + s.target + "(";
      for (std::size_t i = 0; i < s.args.size(); ++i) {
        if (i) out += ", ";
        out += s.args[i].param + " := " + print(s.args[i].value);
      }
      out += ");\n";
      return;
    }
    case Statement::Kind::If:
      for (std::size_t i = 0; i < s.branches.size(); ++i) {
        out += in + (i == 0 ? "IF " : "ELSIF ") + print(s.branches[i].cond) + " THEN\n";
        print_body(s.branches[i].body, indent + 1, out);
      }
      if (s.has_else) {
        out += in + "ELSE\n";
        print_body(s.else_body, indent + 1, out);
      }
      out += in + "END_IF;\n";
      return;
    case Statement::Kind::Case:
      out += in + "CASE " + print(s.value) + " OF\n";
      for (const auto& arm : s.arms) {
        out += pad(indent + 1);
        for (std::size_t i = 0; i < arm.labels.size(); ++i) {
          if (i) out += ", ";
          out += std::to_string(arm.labels[i].lo);
          if (arm.labels[i].hi != arm.labels[i].lo) out += ".." + std::to_string(arm.labels[i].hi);
        }
        out += ":\n";
        print_body(arm.body, indent + 2, out);
      }
      if (s.has_else) {
        out += in + "ELSE\n";
        print_body(s.else_body, indent + 1, out);
      }
      out += in + "END_CASE;\n";
      return;
  }
}

void print_body(const std::vector<Statement>& body, int indent, std::string& out) {
  for (const auto& s : body) print_statement(s, indent, out);
}

std::string decl_line(const VarDecl& d, int indent) {
  std::string s = pad(indent) + d.name + " : ";
  if (d.kind == VarKind::FbInstance) return s + d.fb_type + ";\n";
  s += std::string(to_string(d.type));
  if (d.init) s += " := " + d.init->convert_to(d.type).to_string();
  return s + ";\n";
}

void var_block(const char* keyword, const std::vector<VarDecl>& decls, int indent, std::string& out) {
  if (decls.empty()) return;
  out += pad(indent) + keyword + "\n";
  for (const auto& d : decls) out += decl_line(d, indent + 1);
  out += pad(indent) + "END_VAR\n";
}

}  // namespace

std::string print_expression(const Expr& e) { return print(e); }

std::string print_statements(const std::vector<Statement>& body, int indent) {
  std::string out;
  print_body(body, indent, out);
  return out;
}

std::string print_library(const PouLibrary& lib) {
  std::string out;
  for (const auto& [name, f] : lib.functions) {
    out += "FUNCTION " + f.name + " : " + std::string(to_string(f.return_type)) + "\n";
    var_block("VAR_INPUT", f.inputs, 1, out);
    var_block("VAR", f.locals, 1, out);
    print_body(f.body, 1, out);
    out += "END_FUNCTION\n\n";
  }
  for (const auto& [name, fb] : lib.function_blocks) {
    out += "FUNCTION_BLOCK " + fb.name + "\n";
    var_block("VAR_INPUT", fb.inputs, 1, out);
    var_block("VAR_OUTPUT", fb.outputs, 1, out);
    var_block("VAR", fb.locals, 1, out);
    print_body(fb.body, 1, out);
    out += "END_FUNCTION_BLOCK\n\n";
  }
  return out;
}

std::string print_program(const StProgram& prog) {
  std::string out = "PROGRAM " + prog.name + "\n";
  var_block("VAR_INPUT", prog.inputs, 1, out);
  var_block("VAR_OUTPUT", prog.outputs, 1, out);
  var_block("VAR_IN_OUT", prog.inouts, 1, out);
  var_block("VAR", prog.locals, 1, out);
  print_body(prog.body, 1, out);
  out += "END_PROGRAM\n";
  return out;
}

std::string format_duration(Millis ms) {
  auto n = ms.count();
  if (n != 0 && n % 1000 == 0) return "T#" + std::to_string(n / 1000) + "s";
  return "T#" + std::to_string(n) + "ms";
}

std::string print_configuration(const StProgram& prog, std::string_view config_name) {
  std::string out = "CONFIGURATION " + std::string(config_name) + "\n";
  out += "  RESOURCE Res0 ON PLC\n";
  out += "    TASK Main(INTERVAL := " + format_duration(prog.task_interval) + ", PRIORITY := 0);\n";
  out += "    PROGRAM Inst0 WITH Main : " + prog.name + ";\n";
  out += "  END_RESOURCE\n";
  out += "END_CONFIGURATION\n";
  return out;
}

std::string print_unit(const ParsedUnit& unit) {
  return print_library(unit.library) + print_program(unit.program) + "\n" + print_configuration(unit.program);
}

}  // namespace cbi
