#include <cmath>
#include <optional>
#include <set>

#include "cbi/stlang.hpp"
#include "lexer.hpp"

namespace cbi {

namespace {

using detail::Tok;
using detail::Token;

struct TaskBinding {
  std::string program_type;
  std::string task;
  SourceSpan span;
};

class Parser {
 public:
  explicit Parser(std::string_view source) : toks_(detail::tokenize(source)) {}

  ParsedUnit parse_unit() {
    ParsedUnit unit;
    std::optional<StProgram> program;
    std::map<std::string, double, KeyLess> task_intervals;
    std::vector<TaskBinding> bindings;
    std::set<std::string, KeyLess> pou_names;

    auto claim_name = [&](const std::string& name, SourceSpan span) {
      if (!pou_names.insert(name).second) throw DuplicateName(span, name);
    };

    while (!at(Tok::End)) {
      if (at_kw("PROGRAM")) {
        SourceSpan span = cur().span;
        if (program) throw SyntaxError(span, "a second PROGRAM", {"one PROGRAM per source file"});
        program = parse_program_decl();
        claim_name(program->name, span);
      } else if (at_kw("FUNCTION")) {
        SourceSpan span = cur().span;
        auto f = parse_function();
        claim_name(f.name, span);
        unit.library.functions.emplace(f.name, std::move(f));
      } else if (at_kw("FUNCTION_BLOCK")) {
        SourceSpan span = cur().span;
        auto fb = parse_function_block();
        claim_name(fb.name, span);
        unit.library.function_blocks.emplace(fb.name, std::move(fb));
      } else if (at_kw("CONFIGURATION")) {
        parse_configuration(task_intervals, bindings);
      } else {
        fail({"PROGRAM", "FUNCTION", "FUNCTION_BLOCK", "CONFIGURATION"});
      }
    }
    if (!program) fail({"PROGRAM"});

    const TaskBinding* binding = nullptr;
    for (const auto& b : bindings)
      if (iequals(b.program_type, program->name)) binding = &b;
    if (!binding) throw TypeError(program->span, "program '" + program->name + "' is not bound to a TASK");
    auto it = task_intervals.find(binding->task);
    if (it == task_intervals.end()) throw TypeError(binding->span, "unknown task '" + binding->task + "'");
    auto ms = static_cast<std::int64_t>(std::llround(it->second));
    if (ms <= 0) throw TypeError(binding->span, "task interval must be positive");
    program->task_interval = Millis(ms);
    unit.program = std::move(*program);
    return unit;
  }

  Expr parse_standalone_expression() {
    Expr e = parse_expr();
    if (!at(Tok::End)) fail({"end of expression"});
    return e;
  }

 private:
  // -- token helpers ---------------------------------------------------------

  const Token& cur() const { return toks_[pos_]; }
  const Token& ahead(std::size_t n) const { return toks_[std::min(pos_ + n, toks_.size() - 1)]; }
  bool at(Tok k) const { return cur().kind == k; }
  bool at_kw(std::string_view kw) const { return cur().kind == Tok::Ident && cur().upper == kw; }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    throw SyntaxError(cur().span, detail::describe(cur()), std::move(expected));
  }

  Token take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  Token expect(Tok k, const char* what) {
    if (!at(k)) fail({what});
    return take();
  }

  Token expect_kw(std::string_view kw) {
    if (!at_kw(kw)) fail({std::string(kw)});
    return take();
  }

  bool accept(Tok k) {
    if (!at(k)) return false;
    ++pos_;
    return true;
  }

  bool accept_kw(std::string_view kw) {
    if (!at_kw(kw)) return false;
    ++pos_;
    return true;
  }

  static bool is_reserved(const std::string& upper) {
    static const std::set<std::string> kw = {
        "PROGRAM",  "END_PROGRAM", "FUNCTION", "END_FUNCTION", "FUNCTION_BLOCK", "END_FUNCTION_BLOCK",
        "VAR",      "VAR_INPUT",   "VAR_OUTPUT", "VAR_IN_OUT", "END_VAR", "IF", "THEN", "ELSIF", "ELSE",
        "END_IF",   "CASE",        "OF",       "END_CASE",     "AND",      "OR",  "XOR",  "NOT",
        "MOD",      "TRUE",        "FALSE",    "CONFIGURATION", "END_CONFIGURATION", "RESOURCE",
        "END_RESOURCE", "TASK",    "WITH",     "ON",  "CONSTANT", "RETAIN"};
    return kw.count(upper) != 0;
  }

  Token expect_ident(const char* what) {
    if (!at(Tok::Ident) || is_reserved(cur().upper)) fail({what});
    return take();
  }

  // -- declarations ----------------------------------------------------------

  Type parse_elementary_type() {
    Token t = expect_ident("a type name");
    auto ty = parse_type(t.upper);
    if (!ty) throw TypeError(t.span, "unsupported type '" + t.text + "' (BOOL, INT or REAL)");
    return *ty;
  }

  Value parse_init_literal() {
    bool neg = accept(Tok::Minus);
    const Token& t = cur();
    if (t.kind == Tok::Int) {
      ++pos_;
      return Value::integer(neg ? -t.int_value : t.int_value);
    }
    if (t.kind == Tok::Real) {
      ++pos_;
      return Value::real(static_cast<float>(neg ? -t.real_value : t.real_value));
    }
    if (!neg && (at_kw("TRUE") || at_kw("FALSE"))) {
      bool b = at_kw("TRUE");
      ++pos_;
      return Value::boolean(b);
    }
    fail({"a literal initial value"});
  }

  // Parses "VAR_xxx ... END_VAR" blocks until none follow. Each declaration is
  // appended to the list `sink(kind)` returns.
  template <typename Sink>
  void parse_var_blocks(Sink&& sink, bool allow_fb_instances) {
    for (;;) {
      VarKind kind;
      if (at_kw("VAR_INPUT"))
        kind = VarKind::Input;
      else if (at_kw("VAR_OUTPUT"))
        kind = VarKind::Output;
      else if (at_kw("VAR_IN_OUT"))
        kind = VarKind::InOut;
      else if (at_kw("VAR"))
        kind = VarKind::Local;
      else
        return;
      ++pos_;
      accept_kw("CONSTANT") || accept_kw("RETAIN");
      while (!at_kw("END_VAR")) {
        std::vector<Token> names;
        names.push_back(expect_ident("a variable name"));
        while (accept(Tok::Comma)) names.push_back(expect_ident("a variable name"));
        expect(Tok::Colon, "':'");
        Token type_tok = expect_ident("a type name");
        auto elementary = parse_type(type_tok.upper);
        std::optional<Value> init;
        if (accept(Tok::Assign)) {
          SourceSpan at_init = cur().span;
          if (!elementary) throw TypeError(at_init, "function block instances take no initial value");
          init = parse_init_literal();
          if (!init_compatible(*init, *elementary))
            throw TypeError(at_init, "initial value " + init->to_string() + " does not match type " +
                                         std::string(to_string(*elementary)));
        }
        expect(Tok::Semi, "';'");
        for (const auto& n : names) {
          VarDecl d;
          d.name = n.text;
          d.span = merge(n.span, type_tok.span);
          if (elementary) {
            d.type = *elementary;
            d.kind = kind;
            d.init = init;
          } else {
            if (kind != VarKind::Local || !allow_fb_instances)
              throw TypeError(type_tok.span, "unsupported type '" + type_tok.text + "' (BOOL, INT or REAL)");
            d.kind = VarKind::FbInstance;
            d.fb_type = type_tok.text;
          }
          sink(d.kind).push_back(std::move(d));
        }
      }
      expect_kw("END_VAR");
    }
  }

  static bool init_compatible(const Value& v, Type t) {
    if (v.type() == t) return true;
    if (t == Type::Real && v.type() == Type::Int) return true;
    return t == Type::Bool && v.type() == Type::Int && (v.as_int() == 0 || v.as_int() == 1);
  }

  StProgram parse_program_decl() {
    StProgram p;
    p.span = expect_kw("PROGRAM").span;
    p.name = expect_ident("a program name").text;
    parse_var_blocks(
        [&](VarKind k) -> std::vector<VarDecl>& {
          switch (k) {
            case VarKind::Input:
              return p.inputs;
            case VarKind::Output:
              return p.outputs;
            case VarKind::InOut:
              return p.inouts;
            default:
              return p.locals;
          }
        },
        true);
    p.body = parse_statements({"END_PROGRAM"});
    p.span = merge(p.span, expect_kw("END_PROGRAM").span);
    accept(Tok::Semi);
    return p;
  }

  FunctionDef parse_function() {
    FunctionDef f;
    f.span = expect_kw("FUNCTION").span;
    f.name = expect_ident("a function name").text;
    expect(Tok::Colon, "':'");
    f.return_type = parse_elementary_type();
    std::vector<VarDecl> rejected;
    parse_var_blocks(
        [&](VarKind k) -> std::vector<VarDecl>& {
          if (k == VarKind::Input) return f.inputs;
          if (k == VarKind::Local) return f.locals;
          return rejected;
        },
        false);
    if (!rejected.empty())
      throw TypeError(rejected.front().span, "functions accept only VAR_INPUT and VAR declarations");
    f.body = parse_statements({"END_FUNCTION"});
    f.span = merge(f.span, expect_kw("END_FUNCTION").span);
    accept(Tok::Semi);
    return f;
  }

  FunctionBlockDef parse_function_block() {
    FunctionBlockDef fb;
    fb.span = expect_kw("FUNCTION_BLOCK").span;
    fb.name = expect_ident("a function block name").text;
    std::vector<VarDecl> rejected;
    parse_var_blocks(
        [&](VarKind k) -> std::vector<VarDecl>& {
          switch (k) {
            case VarKind::Input:
              return fb.inputs;
            case VarKind::Output:
              return fb.outputs;
            case VarKind::InOut:
              return rejected;
            default:
              return fb.locals;
          }
        },
        true);
    if (!rejected.empty()) throw TypeError(rejected.front().span, "VAR_IN_OUT is not supported in function blocks");
    fb.body = parse_statements({"END_FUNCTION_BLOCK"});
    fb.span = merge(fb.span, expect_kw("END_FUNCTION_BLOCK").span);
    accept(Tok::Semi);
    return fb;
  }

  // CONFIGURATION c [RESOURCE r ON p] TASK ...; PROGRAM i WITH t : P; ...
  void parse_configuration(std::map<std::string, double, KeyLess>& tasks, std::vector<TaskBinding>& bindings) {
    expect_kw("CONFIGURATION");
    expect_ident("a configuration name");
    parse_resource_body(tasks, bindings, "END_CONFIGURATION");
    expect_kw("END_CONFIGURATION");
    accept(Tok::Semi);
  }

  void parse_resource_body(std::map<std::string, double, KeyLess>& tasks, std::vector<TaskBinding>& bindings,
                           std::string_view terminator) {
    while (!at_kw(terminator)) {
      if (accept_kw("RESOURCE")) {
        expect_ident("a resource name");
        expect_kw("ON");
        expect_ident("a processor name");
        parse_resource_body(tasks, bindings, "END_RESOURCE");
        expect_kw("END_RESOURCE");
        accept(Tok::Semi);
      } else if (at_kw("TASK")) {
        ++pos_;
        Token name = expect_ident("a task name");
        expect(Tok::LParen, "'('");
        double interval = -1.0;
        do {
          Token key = expect_ident("a task parameter");
          expect(Tok::Assign, "':='");
          if (key.upper == "INTERVAL") {
            if (!at(Tok::Time)) fail({"a TIME literal"});
            interval = take().real_value;
          } else {
            // PRIORITY, SINGLE: accepted and ignored.
            accept(Tok::Minus);
            take();
          }
        } while (accept(Tok::Comma));
        expect(Tok::RParen, "')'");
        expect(Tok::Semi, "';'");
        if (interval < 0) throw TypeError(name.span, "task '" + name.text + "' has no INTERVAL");
        if (!tasks.emplace(name.text, interval).second) throw DuplicateName(name.span, name.text);
      } else if (at_kw("PROGRAM")) {
        SourceSpan span = take().span;
        expect_ident("an instance name");
        TaskBinding b;
        if (accept_kw("WITH")) b.task = expect_ident("a task name").text;
        expect(Tok::Colon, "':'");
        Token type = expect_ident("a program name");
        b.program_type = type.text;
        b.span = merge(span, type.span);
        if (accept(Tok::LParen)) {
          int depth = 1;
          while (depth > 0 && !at(Tok::End)) {
            if (at(Tok::LParen)) ++depth;
            if (at(Tok::RParen)) --depth;
            ++pos_;
          }
        }
        expect(Tok::Semi, "';'");
        bindings.push_back(std::move(b));
      } else {
        fail({"RESOURCE", "TASK", "PROGRAM", std::string(terminator)});
      }
    }
  }

  // -- statements ------------------------------------------------------------

  bool at_any_kw(std::initializer_list<std::string_view> kws) const {
    for (auto k : kws)
      if (at_kw(k)) return true;
    return false;
  }

  std::vector<Statement> parse_statements(std::initializer_list<std::string_view> terminators,
                                          bool stop_at_case_label = false) {
    std::vector<Statement> out;
    for (;;) {
      if (at_any_kw(terminators) || at(Tok::End)) return out;
      if (stop_at_case_label && at_case_label()) return out;
      if (accept(Tok::Semi)) continue;
      out.push_back(parse_statement());
    }
  }

  bool at_case_label() const {
    if (at(Tok::Int)) return true;
    return at(Tok::Minus) && ahead(1).kind == Tok::Int;
  }

  Statement parse_statement() {
    if (at_kw("IF")) return parse_if();
    if (at_kw("CASE")) return parse_case();
    Token name = expect_ident("a statement");
    if (accept(Tok::Assign)) {
      Expr value = parse_expr();
      Token semi = expect(Tok::Semi, "';'");
      return Statement::make_assign(name.text, std::move(value), merge(name.span, semi.span));
    }
    if (accept(Tok::LParen)) {
      Statement s;
      s.kind = Statement::Kind::FbCall;
      s.target = name.text;
      if (!at(Tok::RParen)) {
        do {
          Token param = expect_ident("a parameter name");
          expect(Tok::Assign, "':='");
          s.args.push_back({param.text, parse_expr()});
        } while (accept(Tok::Comma));
      }
      expect(Tok::RParen, "')'");
      s.span = merge(name.span, expect(Tok::Semi, "';'").span);
      return s;
    }
    fail({"':='", "'('"});
  }

  Statement parse_if() {
    Statement s;
    s.kind = Statement::Kind::If;
    s.span = expect_kw("IF").span;
    do {
      CondBlock b;
      b.cond = parse_expr();
      expect_kw("THEN");
      b.body = parse_statements({"ELSIF", "ELSE", "END_IF"});
      s.branches.push_back(std::move(b));
    } while (accept_kw("ELSIF"));
    if (accept_kw("ELSE")) {
      s.has_else = true;
      s.else_body = parse_statements({"END_IF"});
    }
    s.span = merge(s.span, expect_kw("END_IF").span);
    accept(Tok::Semi);
    return s;
  }

  std::int64_t parse_case_int() {
    bool neg = accept(Tok::Minus);
    Token t = expect(Tok::Int, "an INT case label");
    return neg ? -t.int_value : t.int_value;
  }

  Statement parse_case() {
    Statement s;
    s.kind = Statement::Kind::Case;
    s.span = expect_kw("CASE").span;
    s.value = parse_expr();
    expect_kw("OF");
    while (at_case_label()) {
      CaseArm arm;
      arm.span = cur().span;
      do {
        CaseLabel l;
        l.lo = l.hi = parse_case_int();
        if (accept(Tok::DotDot)) l.hi = parse_case_int();
        if (l.hi < l.lo) throw TypeError(arm.span, "empty CASE range");
        arm.labels.push_back(l);
      } while (accept(Tok::Comma));
      expect(Tok::Colon, "':'");
      arm.body = parse_statements({"ELSE", "END_CASE"}, true);
      s.arms.push_back(std::move(arm));
    }
    if (accept_kw("ELSE")) {
      s.has_else = true;
      s.else_body = parse_statements({"END_CASE"});
    }
    if (!at_kw("END_CASE")) fail({"a CASE label", "ELSE", "END_CASE"});
    s.span = merge(s.span, take().span);
    accept(Tok::Semi);
    return s;
  }

  // -- expressions -----------------------------------------------------------
  //
  // OR < XOR < AND,& < = <> < relational < + - < * / MOD < unary < primary

  std::optional<BinaryOp> binary_at(int level) const {
    const Token& t = cur();
    switch (level) {
      case 1:
        if (at_kw("OR")) return BinaryOp::Or;
        break;
      case 2:
        if (at_kw("XOR")) return BinaryOp::Xor;
        break;
      case 3:
        if (at_kw("AND") || t.kind == Tok::Amp) return BinaryOp::And;
        break;
      case 4:
        if (t.kind == Tok::Eq) return BinaryOp::Eq;
        if (t.kind == Tok::Ne) return BinaryOp::Ne;
        break;
      case 5:
        if (t.kind == Tok::Lt) return BinaryOp::Lt;
        if (t.kind == Tok::Le) return BinaryOp::Le;
        if (t.kind == Tok::Gt) return BinaryOp::Gt;
        if (t.kind == Tok::Ge) return BinaryOp::Ge;
        break;
      case 6:
        if (t.kind == Tok::Plus) return BinaryOp::Add;
        if (t.kind == Tok::Minus) return BinaryOp::Sub;
        break;
      case 7:
        if (t.kind == Tok::Star) return BinaryOp::Mul;
        if (t.kind == Tok::Slash) return BinaryOp::Div;
        if (at_kw("MOD")) return BinaryOp::Mod;
        break;
      default:
        break;
    }
    return std::nullopt;
  }

  Expr parse_expr() { return parse_level(1); }

  Expr parse_level(int level) {
    if (level > 7) return parse_unary();
    Expr lhs = parse_level(level + 1);
    while (auto op = binary_at(level)) {
      ++pos_;
      Expr rhs = parse_level(level + 1);
      lhs = Expr::make_binary(*op, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  Expr parse_unary() {
    SourceSpan span = cur().span;
    if (accept_kw("NOT")) {
      Expr operand = parse_unary();
      return Expr::make_unary(UnaryOp::Not, std::move(operand), merge(span, operand.span));
    }
    if (accept(Tok::Minus)) {
      // A sign directly on a number is part of the literal.
      const Token& t = cur();
      if (t.kind == Tok::Int) {
        ++pos_;
        return Expr::make_literal(Value::integer(-t.int_value), merge(span, t.span));
      }
      if (t.kind == Tok::Real) {
        ++pos_;
        return Expr::make_literal(Value::real(static_cast<float>(-t.real_value)), merge(span, t.span));
      }
      Expr operand = parse_unary();
      return Expr::make_unary(UnaryOp::Neg, std::move(operand), merge(span, operand.span));
    }
    return parse_primary();
  }

  Expr parse_primary() {
    const Token& t = cur();
    switch (t.kind) {
      case Tok::Int:
        ++pos_;
        return Expr::make_literal(Value::integer(t.int_value), t.span);
      case Tok::Real:
        ++pos_;
        return Expr::make_literal(Value::real(static_cast<float>(t.real_value)), t.span);
      case Tok::LParen: {
        SourceSpan open = take().span;
        Expr inner = parse_expr();
        SourceSpan close = expect(Tok::RParen, "')'").span;
        inner.parenthesized = true;
        inner.span = merge(open, close);
        return inner;
      }
      case Tok::Ident:
        break;
      default:
        fail({"an expression"});
    }
    if (at_kw("TRUE") || at_kw("FALSE")) {
      bool b = at_kw("TRUE");
      return Expr::make_literal(Value::boolean(b), take().span);
    }
    Token name = expect_ident("an expression");
    if (accept(Tok::LParen)) {
      std::vector<Expr> args;
      if (!at(Tok::RParen)) {
        do {
          args.push_back(parse_expr());
        } while (accept(Tok::Comma));
      }
      SourceSpan close = expect(Tok::RParen, "')'").span;
      return Expr::make_call(name.text, std::move(args), merge(name.span, close));
    }
    if (accept(Tok::Dot)) {
      Token field = expect_ident("a member name");
      return Expr::make_var(name.text + "." + field.text, merge(name.span, field.span));
    }
    return Expr::make_var(name.text, name.span);
  }

  std::vector<Token> toks_;
  std::size_t pos_{0};
};

}  // namespace

ParsedUnit parse_program(std::string_view source, const TypecheckOptions& options) {
  ParsedUnit unit = Parser(source).parse_unit();
  unit.library = typecheck_library(unit.library, options);
  unit.program = typecheck(unit.program, unit.library, options);
  return unit;
}

Expr parse_expression(std::string_view source) { return Parser(source).parse_standalone_expression(); }

}  // namespace cbi
