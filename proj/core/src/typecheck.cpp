#include <algorithm>
#include <functional>
#include <set>

#include "cbi/stlang.hpp"

namespace cbi {

namespace {

std::string type_name(Type t) { return std::string(to_string(t)); }

bool literal_bool(const Expr& e) {
  return e.kind == Expr::Kind::Literal && e.literal.type() == Type::Int &&
         (e.literal.as_int() == 0 || e.literal.as_int() == 1);
}

bool assignable(Type target, const Expr& e, const TypecheckOptions& opt) {
  if (e.type == target) return true;
  if (target == Type::Real && e.type == Type::Int) return true;
  return target == Type::Bool && opt.int_literal_as_bool && literal_bool(e);
}

struct Scope {
  std::map<std::string, const VarDecl*, KeyLess> vars;
  // Function being checked: its name acts as the return variable.
  const FunctionDef* function{nullptr};
  std::string pou;
};

void declare(Scope& scope, const VarDecl& d) {
  if (!scope.vars.emplace(d.name, &d).second) throw DuplicateName(d.span, d.name);
  if (scope.function && iequals(d.name, scope.function->name)) throw DuplicateName(d.span, d.name);
}

class Checker {
 public:
  Checker(const PouLibrary& lib, const TypecheckOptions& opt) : lib_(lib), opt_(opt) {}

  void check_body(std::vector<Statement>& body, const Scope& scope) {
    for (auto& s : body) check_statement(s, scope);
  }

  void check_expr(Expr& e, const Scope& scope) {
    switch (e.kind) {
      case Expr::Kind::Literal:
        e.type = e.literal.type();
        return;
      case Expr::Kind::Var:
        e.type = resolve_read(e, scope);
        return;
      case Expr::Kind::Unary: {
        Expr& x = e.operands[0];
        check_expr(x, scope);
        if (e.unary == UnaryOp::Not) {
          if (x.type != Type::Bool)
            throw TypeError(e.span, "NOT requires a BOOL operand, got " + type_name(x.type));
          e.type = Type::Bool;
        } else {
          if (!is_numeric(x.type)) throw TypeError(e.span, "unary '-' requires a numeric operand, got BOOL");
          e.type = x.type;
        }
        return;
      }
      case Expr::Kind::Binary:
        check_binary(e, scope);
        return;
      case Expr::Kind::Call:
        check_call(e, scope);
        return;
    }
  }

 private:
  Type resolve_read(const Expr& e, const Scope& scope) {
    auto dot = e.name.find('.');
    if (dot == std::string::npos) {
      if (scope.function && iequals(e.name, scope.function->name)) return scope.function->return_type;
      auto it = scope.vars.find(e.name);
      if (it == scope.vars.end()) throw TypeError(e.span, "unknown variable '" + e.name + "'");
      if (it->second->kind == VarKind::FbInstance)
        throw TypeError(e.span, "function block instance '" + e.name + "' used as a value");
      return it->second->type;
    }
    std::string inst = e.name.substr(0, dot);
    std::string field = e.name.substr(dot + 1);
    auto it = scope.vars.find(inst);
    if (it == scope.vars.end() || it->second->kind != VarKind::FbInstance)
      throw TypeError(e.span, "'" + inst + "' is not a function block instance");
    const FunctionBlockDef* fb = lib_.function_block(it->second->fb_type);
    if (!fb) throw TypeError(e.span, "unknown function block type '" + it->second->fb_type + "'");
    for (const auto* list : {&fb->inputs, &fb->outputs})
      for (const auto& d : *list)
        if (iequals(d.name, field)) return d.type;
    throw TypeError(e.span, "'" + fb->name + "' has no input or output named '" + field + "'");
  }

  void check_binary(Expr& e, const Scope& scope) {
    Expr& l = e.operands[0];
    Expr& r = e.operands[1];
    check_expr(l, scope);
    check_expr(r, scope);
    auto operands = [&] { return type_name(l.type) + " and " + type_name(r.type); };
    if (is_logical(e.binary)) {
      if (l.type != Type::Bool || r.type != Type::Bool)
        throw TypeError(e.span, std::string(to_string(e.binary)) + " requires BOOL operands, got " + operands());
      e.type = Type::Bool;
      return;
    }
    if (e.binary == BinaryOp::Eq || e.binary == BinaryOp::Ne) {
      bool ok = (l.type == Type::Bool && r.type == Type::Bool) || (is_numeric(l.type) && is_numeric(r.type));
      if (!ok) throw TypeError(e.span, "cannot compare " + operands());
      e.type = Type::Bool;
      return;
    }
    if (!is_numeric(l.type) || !is_numeric(r.type))
      throw TypeError(e.span, "'" + std::string(to_string(e.binary)) + "' requires numeric operands, got " + operands());
    if (is_comparison(e.binary)) {
      e.type = Type::Bool;
      return;
    }
    if (e.binary == BinaryOp::Mod && (l.type != Type::Int || r.type != Type::Int))
      throw TypeError(e.span, "MOD requires INT operands, got " + operands());
    e.type = (l.type == Type::Real || r.type == Type::Real) ? Type::Real : Type::Int;
  }

  static Type promote(Type a, Type b) { return (a == Type::Real || b == Type::Real) ? Type::Real : Type::Int; }

  void check_call(Expr& e, const Scope& scope) {
    for (auto& a : e.operands) check_expr(a, scope);
    if (const FunctionDef* f = lib_.function(e.name)) {
      if (e.operands.size() != f->inputs.size())
        throw TypeError(e.span, "'" + f->name + "' expects " + std::to_string(f->inputs.size()) + " arguments, got " +
                                    std::to_string(e.operands.size()));
      for (std::size_t i = 0; i < f->inputs.size(); ++i)
        if (!assignable(f->inputs[i].type, e.operands[i], opt_))
          throw TypeError(e.operands[i].span, "argument " + std::to_string(i + 1) + " of '" + f->name + "' expects " +
                                                  type_name(f->inputs[i].type) + ", got " +
                                                  type_name(e.operands[i].type));
      e.type = f->return_type;
      return;
    }
    if (lib_.function_block(e.name))
      throw TypeError(e.span, "function block '" + e.name + "' must be called through an instance");
    e.type = check_builtin(e);
  }

  Type check_builtin(const Expr& e) {
    const std::string key = to_key(e.name);
    const auto& a = e.operands;
    auto arity = [&](std::size_t n) {
      if (a.size() != n)
        throw TypeError(e.span, key + " expects " + std::to_string(n) + " arguments, got " + std::to_string(a.size()));
    };
    auto numeric = [&](std::size_t i) {
      if (!is_numeric(a[i].type)) throw TypeError(a[i].span, key + " requires numeric arguments, got BOOL");
    };
    auto exactly = [&](std::size_t i, Type t) {
      if (a[i].type != t)
        throw TypeError(a[i].span, key + " expects " + type_name(t) + ", got " + type_name(a[i].type));
    };
    if (key == "ABS") {
      arity(1);
      numeric(0);
      return a[0].type;
    }
    if (key == "MIN" || key == "MAX") {
      arity(2);
      numeric(0);
      numeric(1);
      return promote(a[0].type, a[1].type);
    }
    if (key == "LIMIT") {
      arity(3);
      for (std::size_t i = 0; i < 3; ++i) numeric(i);
      return promote(promote(a[0].type, a[1].type), a[2].type);
    }
    if (key == "SQRT") {
      arity(1);
      numeric(0);
      return Type::Real;
    }
    if (key == "SEL") {
      arity(3);
      exactly(0, Type::Bool);
      if (a[1].type == a[2].type) return a[1].type;
      numeric(1);
      numeric(2);
      return promote(a[1].type, a[2].type);
    }
    if (key == "INT_TO_REAL") {
      arity(1);
      exactly(0, Type::Int);
      return Type::Real;
    }
    if (key == "REAL_TO_INT" || key == "TRUNC") {
      arity(1);
      exactly(0, Type::Real);
      return Type::Int;
    }
    if (key == "BOOL_TO_INT") {
      arity(1);
      exactly(0, Type::Bool);
      return Type::Int;
    }
    if (key == "INT_TO_BOOL") {
      arity(1);
      exactly(0, Type::Int);
      return Type::Bool;
    }
    throw TypeError(e.span, "unknown function '" + e.name + "'");
  }

  const VarDecl* writable(const std::string& name, SourceSpan span, const Scope& scope) {
    auto it = scope.vars.find(name);
    if (it == scope.vars.end()) throw TypeError(span, "unknown variable '" + name + "'");
    const VarDecl* d = it->second;
    if (d->kind == VarKind::Input) throw TypeError(span, "cannot assign to input '" + name + "'");
    if (d->kind == VarKind::FbInstance)
      throw TypeError(span, "cannot assign to function block instance '" + name + "'");
    return d;
  }

  void check_statement(Statement& s, const Scope& scope) {
    switch (s.kind) {
      case Statement::Kind::Assign: {
        check_expr(s.value, scope);
        Type target;
        if (scope.function && iequals(s.target, scope.function->name))
          target = scope.function->return_type;
        else
          target = writable(s.target, s.span, scope)->type;
        if (!assignable(target, s.value, opt_))
          throw TypeError(s.span, "cannot assign " + type_name(s.value.type) + " to '" + s.target + "' of type " +
                                      type_name(target));
        break;
      }
      case Statement::Kind::If:
        for (auto& b : s.branches) {
          check_expr(b.cond, scope);
          if (b.cond.type != Type::Bool)
            throw TypeError(b.cond.span, "IF condition must be BOOL, got " + type_name(b.cond.type));
          check_body(b.body, scope);
        }
        break;
      case Statement::Kind::Case: {
        check_expr(s.value, scope);
        if (s.value.type != Type::Int)
          throw TypeError(s.value.span, "CASE selector must be INT, got " + type_name(s.value.type));
        for (auto& arm : s.arms) check_body(arm.body, scope);
        break;
      }
      case Statement::Kind::FbCall: {
        auto it = scope.vars.find(s.target);
        if (it == scope.vars.end() || it->second->kind != VarKind::FbInstance)
          throw TypeError(s.span, "'" + s.target + "' is not a function block instance");
        const FunctionBlockDef* fb = lib_.function_block(it->second->fb_type);
        if (!fb) throw TypeError(s.span, "unknown function block type '" + it->second->fb_type + "'");
        std::set<std::string, KeyLess> seen;
        for (auto& arg : s.args) {
          const VarDecl* param = nullptr;
          for (const auto& d : fb->inputs)
            if (iequals(d.name, arg.param)) param = &d;
          if (!param) throw TypeError(arg.value.span, "'" + fb->name + "' has no input named '" + arg.param + "'");
          if (!seen.insert(arg.param).second) throw DuplicateName(arg.value.span, arg.param);
          check_expr(arg.value, scope);
          if (!assignable(param->type, arg.value, opt_))
            throw TypeError(arg.value.span, "input '" + arg.param + "' expects " + type_name(param->type) + ", got " +
                                                type_name(arg.value.type));
        }
        break;
      }
    }
    for (auto& st : s.else_body) check_statement(st, scope);
  }

  const PouLibrary& lib_;
  const TypecheckOptions& opt_;
};

// ---------------------------------------------------------------------------
// POU reference graph

void calls_in(const Expr& e, std::set<std::string>& out) {
  if (e.kind == Expr::Kind::Call) out.insert(to_key(e.name));
  for (const auto& o : e.operands) calls_in(o, out);
}

void calls_in(const std::vector<Statement>& body, std::set<std::string>& out) {
  for (const auto& s : body) {
    calls_in(s.value, out);
    for (const auto& b : s.branches) {
      calls_in(b.cond, out);
      calls_in(b.body, out);
    }
    for (const auto& a : s.arms) calls_in(a.body, out);
    for (const auto& a : s.args) calls_in(a.value, out);
    calls_in(s.else_body, out);
  }
}

std::set<std::string> references(const std::vector<Statement>& body, const std::vector<VarDecl>& locals,
                                 const PouLibrary& lib) {
  std::set<std::string> refs;
  calls_in(body, refs);
  for (const auto& d : locals)
    if (d.kind == VarKind::FbInstance) refs.insert(to_key(d.fb_type));
  std::set<std::string> known;
  for (const auto& r : refs)
    if (lib.function(r) || lib.function_block(r)) known.insert(r);
  return known;
}

void reject_cycles(const PouLibrary& lib, const std::vector<std::string>& roots,
                   const std::function<SourceSpan(const std::string&)>& span_of) {
  std::map<std::string, std::set<std::string>> edges;
  for (const auto& [name, f] : lib.functions) edges[to_key(name)] = references(f.body, f.locals, lib);
  for (const auto& [name, fb] : lib.function_blocks) edges[to_key(name)] = references(fb.body, fb.locals, lib);

  std::map<std::string, int> color;  // 0 white, 1 on stack, 2 done
  std::vector<std::string> stack;
  std::function<void(const std::string&)> visit = [&](const std::string& n) {
    color[n] = 1;
    stack.push_back(n);
    for (const auto& m : edges[n]) {
      if (color[m] == 1) {
        auto start = std::find(stack.begin(), stack.end(), m);
        std::vector<std::string> cycle(start, stack.end());
        cycle.push_back(m);
        throw RecursionError(span_of(m), cycle);
      }
      if (color[m] == 0) visit(m);
    }
    stack.pop_back();
    color[n] = 2;
  };
  for (const auto& r : roots)
    if (color[to_key(r)] == 0) visit(to_key(r));
}

SourceSpan pou_span(const PouLibrary& lib, const std::string& key) {
  if (const auto* f = lib.function(key)) return f->span;
  if (const auto* fb = lib.function_block(key)) return fb->span;
  return {};
}

}  // namespace

PouLibrary typecheck_library(const PouLibrary& lib, const TypecheckOptions& options) {
  for (const auto& [name, f] : lib.functions)
    if (lib.function_block(name)) throw DuplicateName(f.span, name);

  std::vector<std::string> roots;
  for (const auto& [name, f] : lib.functions) roots.push_back(name);
  for (const auto& [name, fb] : lib.function_blocks) roots.push_back(name);
  reject_cycles(lib, roots, [&](const std::string& k) { return pou_span(lib, k); });

  PouLibrary typed = lib;
  Checker checker(lib, options);
  for (auto& [name, f] : typed.functions) {
    Scope scope;
    scope.function = &f;
    scope.pou = f.name;
    for (const auto& d : f.inputs) declare(scope, d);
    for (const auto& d : f.locals) declare(scope, d);
    checker.check_body(f.body, scope);
  }
  for (auto& [name, fb] : typed.function_blocks) {
    Scope scope;
    scope.pou = fb.name;
    for (const auto& d : fb.inputs) declare(scope, d);
    for (const auto& d : fb.outputs) declare(scope, d);
    for (const auto& d : fb.locals) {
      declare(scope, d);
      if (d.kind == VarKind::FbInstance && !lib.function_block(d.fb_type))
        throw TypeError(d.span, "unknown function block type '" + d.fb_type + "'");
    }
    checker.check_body(fb.body, scope);
  }
  return typed;
}

StProgram typecheck(const StProgram& prog, const PouLibrary& lib, const TypecheckOptions& options) {
  StProgram typed = prog;
  Scope scope;
  scope.pou = prog.name;
  for (const VarDecl* d : typed.declarations()) {
    declare(scope, *d);
    if (d->kind == VarKind::FbInstance && !lib.function_block(d->fb_type))
      throw TypeError(d->span, "unknown function block type '" + d->fb_type + "'");
  }
  for (const auto& r : references(prog.body, prog.locals, lib))
    reject_cycles(lib, {r}, [&](const std::string& k) { return pou_span(lib, k); });
  Checker(lib, options).check_body(typed.body, scope);
  return typed;
}

Expr typecheck_expression(const Expr& expr, const StProgram& prog, const PouLibrary& lib,
                          const TypecheckOptions& options) {
  Scope scope;
  for (const VarDecl* d : prog.declarations()) scope.vars.emplace(d->name, d);
  Expr typed = expr;
  Checker(lib, options).check_expr(typed, scope);
  return typed;
}

}  // namespace cbi
