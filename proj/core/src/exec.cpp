#include "cbi/exec.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <deque>
#include <limits>

#include "cbi/stlang.hpp"

namespace cbi {

namespace detail {

enum class Op : std::uint8_t { Lit, Load, Not, Neg, Bin, CallFn, Builtin };

enum class Builtin : std::uint8_t {
  Abs,
  Min,
  Max,
  Limit,
  Sqrt,
  Sel,
  IntToReal,
  RealToInt,
  BoolToInt,
  IntToBool,
  Trunc,
};

struct CExpr {
  Op op{Op::Lit};
  Type type{Type::Bool};
  BinaryOp bop{BinaryOp::Add};
  Builtin bi{Builtin::Abs};
  int slot{-1};
  int fn{-1};
  Value lit;
  SourceSpan span;
  std::vector<CExpr> kids;
};

struct CStmt {
  enum class Kind : std::uint8_t { Assign, If, Case, FbCall };
  Kind kind{Kind::Assign};
  SourceSpan span;
  int slot{-1};
  Type type{Type::Bool};
  CExpr value;
  std::vector<CExpr> conds;
  std::vector<std::vector<CStmt>> bodies;  // If: one per cond; Case: one per arm
  std::vector<std::vector<CaseLabel>> labels;
  bool has_else{false};
  std::vector<CStmt> else_body;
  std::uint32_t site{0};
  int instance{-1};
  std::vector<std::pair<int, CExpr>> args;  // FbCall: input slot, value
};

struct Function {
  std::vector<int> params;
  std::vector<std::pair<int, Value>> locals;
  int ret{-1};
  std::vector<CStmt> body;
};

struct Instance {
  std::string path;
  const FunctionBlockDef* def{nullptr};
  std::map<std::string, int, KeyLess> fields;  // own elementary fields
  std::map<std::string, int, KeyLess> children;
  std::vector<CStmt> body;
};

struct Program {
  std::vector<std::string> slot_names;
  std::vector<Type> slot_types;
  std::vector<Value> init;
  std::map<std::string, int, KeyLess> slot_of;  // master variables and INST.FIELD paths
  std::map<std::string, int, KeyLess> top_instances;
  std::vector<CStmt> body;
  std::vector<Function> functions;
  std::map<std::string, int, KeyLess> fn_index;
  std::vector<Instance> instances;
  std::vector<int> sensor_slots;
  std::vector<std::string> sensor_names;
  std::vector<int> actuator_slots;
  std::vector<std::string> actuator_names;
  std::vector<int> master_slots;  // plain master variables, declaration order
  std::vector<BranchSite> sites;
  std::size_t master_sites{0};
};

}  // namespace detail

using detail::Builtin;
using detail::CExpr;
using detail::CStmt;
using detail::Op;

namespace {

// ---------------------------------------------------------------------------
// Compilation

struct CompileScope {
  const std::map<std::string, int, KeyLess>* vars{nullptr};
  const std::map<std::string, int, KeyLess>* instances{nullptr};  // name -> instance index
  std::string ret_name;
  int ret_slot{-1};
  std::string pou;
};

class Compiler {
 public:
  Compiler(detail::Program& p, const PouLibrary& lib) : p_(p), lib_(lib) {}

  int add_slot(const std::string& name, Type t, Value init) {
    int id = static_cast<int>(p_.slot_names.size());
    p_.slot_names.push_back(name);
    p_.slot_types.push_back(t);
    p_.init.push_back(init);
    return id;
  }

  // Allocates the fields of one FB instance (recursively) and returns its index.
  int add_instance(const std::string& path, const std::string& fb_type) {
    const FunctionBlockDef* def = lib_.function_block(fb_type);
    if (!def) throw ConfigError("unknown function block type '" + fb_type + "'");
    int idx = static_cast<int>(p_.instances.size());
    p_.instances.emplace_back();
    p_.instances[idx].path = path;
    p_.instances[idx].def = def;
    std::map<std::string, int, KeyLess> fields;
    std::map<std::string, int, KeyLess> children;
    for (const auto* list : {&def->inputs, &def->outputs, &def->locals}) {
      for (const auto& d : *list) {
        std::string fpath = path + "." + d.name;
        if (d.kind == VarKind::FbInstance) {
          children[d.name] = add_instance(fpath, d.fb_type);
        } else {
          int s = add_slot(fpath, d.type, d.initial_value());
          fields[d.name] = s;
          p_.slot_of[fpath] = s;
        }
      }
    }
    p_.instances[idx].fields = std::move(fields);
    p_.instances[idx].children = std::move(children);
    return idx;
  }

  void add_functions() {
    for (const auto& [name, f] : lib_.functions) {
      detail::Function fn;
      for (const auto& d : f.inputs) fn.params.push_back(add_slot(f.name + "." + d.name, d.type, d.initial_value()));
      for (const auto& d : f.locals) {
        int s = add_slot(f.name + "." + d.name, d.type, d.initial_value());
        fn.locals.emplace_back(s, d.initial_value());
      }
      fn.ret = add_slot(f.name + "." + f.name, f.return_type, Value::zero(f.return_type));
      p_.fn_index[name] = static_cast<int>(p_.functions.size());
      p_.functions.push_back(std::move(fn));
    }
  }

  void compile_functions() {
    for (const auto& [name, f] : lib_.functions) {
      auto& fn = p_.functions[static_cast<std::size_t>(p_.fn_index.at(name))];
      std::map<std::string, int, KeyLess> vars;
      for (std::size_t i = 0; i < f.inputs.size(); ++i) vars[f.inputs[i].name] = fn.params[i];
      for (std::size_t i = 0; i < f.locals.size(); ++i) vars[f.locals[i].name] = fn.locals[i].first;
      std::map<std::string, int, KeyLess> none;
      CompileScope scope{&vars, &none, f.name, fn.ret, f.name};
      fn.body = compile_body(f.body, scope);
    }
  }

  void compile_instances() {
    for (std::size_t i = 0; i < p_.instances.size(); ++i) {
      auto& inst = p_.instances[i];
      CompileScope scope{&inst.fields, &inst.children, "", -1, inst.path};
      auto body = compile_body(inst.def->body, scope);
      p_.instances[i].body = std::move(body);
    }
  }

  std::vector<CStmt> compile_body(const std::vector<Statement>& body, const CompileScope& scope) {
    std::vector<CStmt> out;
    out.reserve(body.size());
    for (const auto& s : body) out.push_back(compile_stmt(s, scope));
    return out;
  }

  CExpr compile_expr(const Expr& e, const CompileScope& scope) {
    CExpr c;
    c.type = e.type;
    c.span = e.span;
    switch (e.kind) {
      case Expr::Kind::Literal:
        c.op = Op::Lit;
        c.lit = e.literal;
        break;
      case Expr::Kind::Var:
        c.op = Op::Load;
        c.slot = resolve(e.name, scope, e.span);
        break;
      case Expr::Kind::Unary:
        c.op = e.unary == UnaryOp::Not ? Op::Not : Op::Neg;
        c.kids.push_back(compile_expr(e.operands[0], scope));
        break;
      case Expr::Kind::Binary:
        c.op = Op::Bin;
        c.bop = e.binary;
        c.kids.push_back(compile_expr(e.operands[0], scope));
        c.kids.push_back(compile_expr(e.operands[1], scope));
        break;
      case Expr::Kind::Call: {
        for (const auto& a : e.operands) c.kids.push_back(compile_expr(a, scope));
        auto fit = p_.fn_index.find(e.name);
        if (fit != p_.fn_index.end()) {
          c.op = Op::CallFn;
          c.fn = fit->second;
          break;
        }
        c.op = Op::Builtin;
        static const std::map<std::string, Builtin> builtins = {
            {"ABS", Builtin::Abs},           {"MIN", Builtin::Min},
            {"MAX", Builtin::Max},           {"LIMIT", Builtin::Limit},
            {"SQRT", Builtin::Sqrt},         {"SEL", Builtin::Sel},
            {"INT_TO_REAL", Builtin::IntToReal}, {"REAL_TO_INT", Builtin::RealToInt},
            {"BOOL_TO_INT", Builtin::BoolToInt}, {"INT_TO_BOOL", Builtin::IntToBool},
            {"TRUNC", Builtin::Trunc}};
        auto bit = builtins.find(to_key(e.name));
        if (bit == builtins.end()) throw TypeError(e.span, "unknown function '" + e.name + "'");
        c.bi = bit->second;
        break;
      }
    }
    return c;
  }

  int resolve(const std::string& name, const CompileScope& scope, SourceSpan span) {
    if (scope.ret_slot >= 0 && iequals(name, scope.ret_name)) return scope.ret_slot;
    auto dot = name.find('.');
    if (dot == std::string::npos) {
      auto it = scope.vars->find(name);
      if (it == scope.vars->end()) throw TypeError(span, "unknown variable '" + name + "'");
      return it->second;
    }
    auto it = scope.instances->find(name.substr(0, dot));
    if (it == scope.instances->end()) throw TypeError(span, "unknown instance in '" + name + "'");
    const auto& inst = p_.instances[static_cast<std::size_t>(it->second)];
    auto f = inst.fields.find(name.substr(dot + 1));
    if (f == inst.fields.end()) throw TypeError(span, "unknown member '" + name + "'");
    return f->second;
  }

  std::uint32_t new_site(SiteKind kind, SourceSpan span, const std::string& pou) {
    auto id = static_cast<std::uint32_t>(p_.sites.size());
    BranchSite site;
    site.id = id;
    site.kind = kind;
    site.span = span;
    site.pou = pou;
    p_.sites.push_back(std::move(site));
    return id;
  }

  CStmt compile_stmt(const Statement& s, const CompileScope& scope) {
    CStmt c;
    c.span = s.span;
    switch (s.kind) {
      case Statement::Kind::Assign:
        c.kind = CStmt::Kind::Assign;
        c.slot = resolve(s.target, scope, s.span);
        c.type = p_.slot_types[static_cast<std::size_t>(c.slot)];
        c.value = compile_expr(s.value, scope);
        break;
      case Statement::Kind::If:
        c.kind = CStmt::Kind::If;
        c.site = new_site(SiteKind::If, s.span, scope.pou);
        for (const auto& b : s.branches) {
          c.conds.push_back(compile_expr(b.cond, scope));
          c.bodies.push_back(compile_body(b.body, scope));
        }
        c.has_else = s.has_else;
        c.else_body = compile_body(s.else_body, scope);
        break;
      case Statement::Kind::Case:
        c.kind = CStmt::Kind::Case;
        c.site = new_site(SiteKind::Case, s.span, scope.pou);
        c.value = compile_expr(s.value, scope);
        for (const auto& arm : s.arms) {
          c.labels.push_back(arm.labels);
          c.bodies.push_back(compile_body(arm.body, scope));
        }
        c.has_else = s.has_else;
        c.else_body = compile_body(s.else_body, scope);
        break;
      case Statement::Kind::FbCall: {
        c.kind = CStmt::Kind::FbCall;
        auto it = scope.instances->find(s.target);
        if (it == scope.instances->end()) throw TypeError(s.span, "unknown instance '" + s.target + "'");
        c.instance = it->second;
        const auto& inst = p_.instances[static_cast<std::size_t>(it->second)];
        for (const auto& a : s.args) {
          auto f = inst.fields.find(a.param);
          if (f == inst.fields.end()) throw TypeError(s.span, "unknown input '" + a.param + "'");
          c.args.emplace_back(f->second, compile_expr(a.value, scope));
        }
        break;
      }
    }
    return c;
  }

 private:
  detail::Program& p_;
  const PouLibrary& lib_;
};

// ---------------------------------------------------------------------------
// Evaluation

struct ForkRequest {
  std::uint64_t bits;
};

struct TV {
  Value v;
  std::uint64_t t;
};

struct Ctx {
  const detail::Program& p;
  std::vector<Value>& v;
  std::vector<std::uint64_t>& t;
  std::uint64_t forkable{0};  // unpinned sensor bits that force a fork
  PathSignature* path{nullptr};
  std::vector<int>* decisions{nullptr};
};

std::int64_t wrap_add(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}
std::int64_t wrap_sub(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b));
}
std::int64_t wrap_mul(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b));
}

float as_float(const Value& v) {
  return v.type() == Type::Real ? v.as_real() : static_cast<float>(v.as_int());
}

std::int64_t saturate_int(double d) {
  if (std::isnan(d)) return 0;
  if (d >= 9.2233720368547758e18) return std::numeric_limits<std::int64_t>::max();
  if (d <= -9.2233720368547758e18) return std::numeric_limits<std::int64_t>::min();
  return static_cast<std::int64_t>(d);
}

void check_fork(const Ctx& ctx, std::uint64_t taint) {
  if (std::uint64_t b = taint & ctx.forkable) throw ForkRequest{b};
}

TV eval(const CExpr& e, Ctx& ctx);
void exec_body(const std::vector<CStmt>& body, Ctx& ctx);

Value arith(BinaryOp op, const Value& a, const Value& b, Type result, const SourceSpan& span) {
  if (result == Type::Int) {
    std::int64_t x = a.as_int(), y = b.as_int();
    switch (op) {
      case BinaryOp::Add:
        return Value::integer(wrap_add(x, y));
      case BinaryOp::Sub:
        return Value::integer(wrap_sub(x, y));
      case BinaryOp::Mul:
        return Value::integer(wrap_mul(x, y));
      case BinaryOp::Div:
        if (y == 0) throw EvalError(span, "integer division by zero");
        if (y == -1) return Value::integer(wrap_sub(0, x));
        return Value::integer(x / y);
      case BinaryOp::Mod:
        if (y == 0) throw EvalError(span, "MOD by zero");
        if (y == -1) return Value::integer(0);
        return Value::integer(x % y);
      default:
        break;
    }
  } else {
    float x = as_float(a), y = as_float(b);
    switch (op) {
      case BinaryOp::Add:
        return Value::real(x + y);
      case BinaryOp::Sub:
        return Value::real(x - y);
      case BinaryOp::Mul:
        return Value::real(x * y);
      case BinaryOp::Div:
        if (y == 0.0F) throw EvalError(span, "REAL division by zero");
        return Value::real(x / y);
      default:
        break;
    }
  }
  throw EvalError(span, "invalid arithmetic operator");
}

bool compare(BinaryOp op, const Value& a, const Value& b) {
  if (a.type() == Type::Bool) {
    bool x = a.as_bool(), y = b.as_bool();
    return op == BinaryOp::Eq ? x == y : x != y;
  }
  if (a.type() == Type::Int && b.type() == Type::Int) {
    std::int64_t x = a.as_int(), y = b.as_int();
    switch (op) {
      case BinaryOp::Eq:
        return x == y;
      case BinaryOp::Ne:
        return x != y;
      case BinaryOp::Lt:
        return x < y;
      case BinaryOp::Le:
        return x <= y;
      case BinaryOp::Gt:
        return x > y;
      default:
        return x >= y;
    }
  }
  float x = as_float(a), y = as_float(b);
  switch (op) {
    case BinaryOp::Eq:
      return x == y;
    case BinaryOp::Ne:
      return x != y;
    case BinaryOp::Lt:
      return x < y;
    case BinaryOp::Le:
      return x <= y;
    case BinaryOp::Gt:
      return x > y;
    default:
      return x >= y;
  }
}

Value numeric_min(const Value& a, const Value& b, Type t, bool want_min) {
  if (t == Type::Int) {
    std::int64_t x = a.as_int(), y = b.as_int();
    return Value::integer(want_min ? std::min(x, y) : std::max(x, y));
  }
  float x = as_float(a), y = as_float(b);
  return Value::real(want_min ? std::min(x, y) : std::max(x, y));
}

TV eval_builtin(const CExpr& e, Ctx& ctx) {
  std::vector<TV> a;
  a.reserve(e.kids.size());
  std::uint64_t taint = 0;
  for (const auto& k : e.kids) {
    a.push_back(eval(k, ctx));
    taint |= a.back().t;
  }
  switch (e.bi) {
    case Builtin::Abs:
      if (e.type == Type::Int) {
        std::int64_t x = a[0].v.as_int();
        return {Value::integer(x < 0 ? wrap_sub(0, x) : x), taint};
      }
      return {Value::real(std::fabs(a[0].v.as_real())), taint};
    case Builtin::Min:
    case Builtin::Max:
      return {numeric_min(a[0].v, a[1].v, e.type, e.bi == Builtin::Min), taint};
    case Builtin::Limit: {
      Value lo = a[0].v, in = a[1].v, hi = a[2].v;
      return {numeric_min(numeric_min(in, lo, e.type, false), hi, e.type, true), taint};
    }
    case Builtin::Sqrt: {
      check_fork(ctx, a[0].t);
      float x = as_float(a[0].v);
      if (x < 0.0F) throw EvalError(e.span, "SQRT of a negative value");
      return {Value::real(std::sqrt(x)), taint};
    }
    case Builtin::Sel: {
      const TV& pick = a[0].v.as_bool() ? a[2] : a[1];
      return {pick.v.convert_to(e.type), taint};
    }
    case Builtin::IntToReal:
      return {Value::real(static_cast<float>(a[0].v.as_int())), taint};
    case Builtin::RealToInt:
      return {Value::integer(saturate_int(std::nearbyint(static_cast<double>(a[0].v.as_real())))), taint};
    case Builtin::Trunc:
      return {Value::integer(saturate_int(std::trunc(static_cast<double>(a[0].v.as_real())))), taint};
    case Builtin::BoolToInt:
      return {Value::integer(a[0].v.as_bool() ? 1 : 0), taint};
    case Builtin::IntToBool:
      return {Value::boolean(a[0].v.as_int() != 0), taint};
  }
  return {Value(), taint};
}

TV eval(const CExpr& e, Ctx& ctx) {
  switch (e.op) {
    case Op::Lit:
      return {e.lit, 0};
    case Op::Load: {
      auto s = static_cast<std::size_t>(e.slot);
      return {ctx.v[s], ctx.t[s]};
    }
    case Op::Not: {
      TV x = eval(e.kids[0], ctx);
      return {Value::boolean(!x.v.as_bool()), x.t};
    }
    case Op::Neg: {
      TV x = eval(e.kids[0], ctx);
      if (x.v.type() == Type::Int) return {Value::integer(wrap_sub(0, x.v.as_int())), x.t};
      return {Value::real(-x.v.as_real()), x.t};
    }
    case Op::Bin: {
      TV l = eval(e.kids[0], ctx);
      // AND/OR evaluate both sides: IEC does not short-circuit.
      TV r = eval(e.kids[1], ctx);
      std::uint64_t t = l.t | r.t;
      switch (e.bop) {
        case BinaryOp::And:
          return {Value::boolean(l.v.as_bool() && r.v.as_bool()), t};
        case BinaryOp::Or:
          return {Value::boolean(l.v.as_bool() || r.v.as_bool()), t};
        case BinaryOp::Xor:
          return {Value::boolean(l.v.as_bool() != r.v.as_bool()), t};
        case BinaryOp::Eq:
        case BinaryOp::Ne:
        case BinaryOp::Lt:
        case BinaryOp::Le:
        case BinaryOp::Gt:
        case BinaryOp::Ge:
          return {Value::boolean(compare(e.bop, l.v, r.v)), t};
        case BinaryOp::Div:
        case BinaryOp::Mod:
          check_fork(ctx, r.t);
          return {arith(e.bop, l.v, r.v, e.type, e.span), t};
        default:
          return {arith(e.bop, l.v, r.v, e.type, e.span), t};
      }
    }
    case Op::CallFn: {
      const auto& fn = ctx.p.functions[static_cast<std::size_t>(e.fn)];
      std::vector<TV> args;
      args.reserve(e.kids.size());
      for (const auto& k : e.kids) args.push_back(eval(k, ctx));
      for (std::size_t i = 0; i < args.size(); ++i) {
        auto s = static_cast<std::size_t>(fn.params[i]);
        ctx.v[s] = args[i].v.convert_to(ctx.p.slot_types[s]);
        ctx.t[s] = args[i].t;
      }
      for (const auto& [s, init] : fn.locals) {
        ctx.v[static_cast<std::size_t>(s)] = init;
        ctx.t[static_cast<std::size_t>(s)] = 0;
      }
      auto r = static_cast<std::size_t>(fn.ret);
      ctx.v[r] = Value::zero(ctx.p.slot_types[r]);
      ctx.t[r] = 0;
      exec_body(fn.body, ctx);
      return {ctx.v[r], ctx.t[r]};
    }
    case Op::Builtin:
      return eval_builtin(e, ctx);
  }
  return {Value(), 0};
}

void decide(const CStmt& s, int arm, Ctx& ctx) {
  if (ctx.path) {
    ctx.path->push_back(s.site);
    ctx.path->push_back(static_cast<std::uint32_t>(arm));
  }
  if (ctx.decisions && s.site < ctx.decisions->size()) (*ctx.decisions)[s.site] = arm;
}

void exec_stmt(const CStmt& s, Ctx& ctx) {
  switch (s.kind) {
    case CStmt::Kind::Assign: {
      TV x = eval(s.value, ctx);
      auto slot = static_cast<std::size_t>(s.slot);
      ctx.v[slot] = x.v.convert_to(s.type);
      ctx.t[slot] = x.t;
      return;
    }
    case CStmt::Kind::If: {
      for (std::size_t i = 0; i < s.conds.size(); ++i) {
        TV c = eval(s.conds[i], ctx);
        check_fork(ctx, c.t);
        if (c.v.as_bool()) {
          decide(s, static_cast<int>(i), ctx);
          exec_body(s.bodies[i], ctx);
          return;
        }
      }
      decide(s, static_cast<int>(s.conds.size()), ctx);
      exec_body(s.else_body, ctx);
      return;
    }
    case CStmt::Kind::Case: {
      TV sel = eval(s.value, ctx);
      check_fork(ctx, sel.t);
      std::int64_t x = sel.v.as_int();
      for (std::size_t i = 0; i < s.labels.size(); ++i) {
        for (const auto& l : s.labels[i]) {
          if (x >= l.lo && x <= l.hi) {
            decide(s, static_cast<int>(i), ctx);
            exec_body(s.bodies[i], ctx);
            return;
          }
        }
      }
      if (!s.has_else)
        throw EvalError(s.span, "CASE selector " + std::to_string(x) + " matches no label and there is no ELSE");
      decide(s, static_cast<int>(s.labels.size()), ctx);
      exec_body(s.else_body, ctx);
      return;
    }
    case CStmt::Kind::FbCall: {
      std::vector<TV> vals;
      vals.reserve(s.args.size());
      for (const auto& [slot, e] : s.args) vals.push_back(eval(e, ctx));
      for (std::size_t i = 0; i < vals.size(); ++i) {
        auto slot = static_cast<std::size_t>(s.args[i].first);
        ctx.v[slot] = vals[i].v.convert_to(ctx.p.slot_types[slot]);
        ctx.t[slot] = vals[i].t;
      }
      exec_body(ctx.p.instances[static_cast<std::size_t>(s.instance)].body, ctx);
      return;
    }
  }
}

void exec_body(const std::vector<CStmt>& body, Ctx& ctx) {
  for (const auto& s : body) exec_stmt(s, ctx);
}

double input_or(const Inputs& inputs, const std::string& name, double fallback) {
  auto it = inputs.find(name);
  return it == inputs.end() ? fallback : it->second;
}

}  // namespace

// ---------------------------------------------------------------------------

bool ActuationSet::contains(const std::string& actuator, const Value& v) const {
  auto it = values.find(actuator);
  return it != values.end() && it->second.count(v) != 0;
}

Executable::Executable(const StModel& model) : model_(model), prog_(std::make_unique<detail::Program>()) {
  detail::Program& p = *prog_;
  Compiler c(p, model_.lib);
  std::map<std::string, int, KeyLess> vars;
  for (const VarDecl* d : model_.master.declarations()) {
    if (d->kind == VarKind::FbInstance) continue;
    int s = c.add_slot(d->name, d->type, d->initial_value());
    vars[d->name] = s;
    p.slot_of[d->name] = s;
    p.master_slots.push_back(s);
    auto io = model_.io_map.find(d->name);
    Role role = io == model_.io_map.end() ? Role::Internal : io->second.role;
    if (role == Role::Sensor) {
      p.sensor_slots.push_back(s);
      p.sensor_names.push_back(d->name);
    } else if (role == Role::Actuator) {
      p.actuator_slots.push_back(s);
      p.actuator_names.push_back(d->name);
    }
  }
  for (const auto& d : model_.master.locals)
    if (d.kind == VarKind::FbInstance) p.top_instances[d.name] = c.add_instance(d.name, d.fb_type);
  c.add_functions();
  CompileScope scope{&vars, &p.top_instances, "", -1, model_.master.name};
  p.body = c.compile_body(model_.master.body, scope);
  p.master_sites = p.sites.size();
  c.compile_functions();
  c.compile_instances();
  if (p.sensor_slots.size() > 4096) throw ConfigError("model has too many sensors");
}

Executable::~Executable() = default;
Executable::Executable(Executable&&) noexcept = default;
Executable& Executable::operator=(Executable&&) noexcept = default;

MachineState Executable::initial_state() const {
  MachineState s;
  s.slots_ = prog_->init;
  return s;
}

Value Executable::get(const MachineState& s, std::string_view name) const {
  auto it = prog_->slot_of.find(name);
  if (it == prog_->slot_of.end()) throw ConfigError("unknown variable '" + std::string(name) + "'");
  return s.slots_.at(static_cast<std::size_t>(it->second));
}

void Executable::set(MachineState& s, std::string_view name, const Value& v) const {
  auto it = prog_->slot_of.find(name);
  if (it == prog_->slot_of.end()) throw ConfigError("unknown variable '" + std::string(name) + "'");
  auto slot = static_cast<std::size_t>(it->second);
  s.slots_.at(slot) = v.convert_to(prog_->slot_types[slot]);
}

std::map<std::string, Value, KeyLess> Executable::fb_fields(const MachineState& s, std::string_view instance) const {
  std::map<std::string, Value, KeyLess> out;
  std::string prefix = to_key(instance) + ".";
  for (const auto& [path, slot] : prog_->slot_of) {
    std::string key = to_key(path);
    if (key.compare(0, prefix.size(), prefix) == 0)
      out[path.substr(prefix.size())] = s.slots_[static_cast<std::size_t>(slot)];
  }
  return out;
}

namespace {

struct RunSetup {
  // Bit index of each sensor slot (-1 when the sensor carries no taint).
  std::vector<int> bit;
  std::vector<double> eps;
};

struct RunOutcome {
  std::vector<Value> slots;
  std::vector<std::uint64_t> taint;
  PathSignature path;
};

// Runs one cycle. Sensors are read as s + δ·ε for the pinned bits.
RunOutcome run_once(const detail::Program& p, const MachineState& state, const std::vector<Value>& init_slots,
                    const Inputs& inputs, const RunSetup& setup, std::uint64_t pinned,
                    const std::vector<int>& delta, bool fork_mode, std::vector<int>* decisions,
                    bool latch_fork = true) {
  (void)state;
  RunOutcome out;
  out.slots = init_slots;
  out.taint.assign(p.slot_names.size(), 0);
  for (std::size_t i = 0; i < p.sensor_slots.size(); ++i) {
    auto slot = static_cast<std::size_t>(p.sensor_slots[i]);
    double raw = input_or(inputs, p.sensor_names[i], out.slots[slot].to_double());
    int b = setup.bit[i];
    if (b >= 0) {
      out.taint[slot] = std::uint64_t{1} << b;
      if (pinned & out.taint[slot]) raw = raw + delta[static_cast<std::size_t>(b)] * setup.eps[i];
    }
    out.slots[slot] = Value::from_double(p.slot_types[slot], raw);
  }
  std::uint64_t all = 0;
  for (int b : setup.bit)
    if (b >= 0) all |= std::uint64_t{1} << b;
  Ctx ctx{p, out.slots, out.taint, fork_mode ? (all & ~pinned) : 0, &out.path, decisions};
  exec_body(p.body, ctx);
  if (fork_mode && latch_fork) {
    std::uint64_t need = 0;
    for (int s : p.actuator_slots) need |= out.taint[static_cast<std::size_t>(s)] & ctx.forkable;
    if (need) throw ForkRequest{need};
  }
  return out;
}

std::vector<Value> prepare_slots(const detail::Program& p, const MachineState& state, const Inputs& inputs) {
  std::vector<Value> slots = state.slots();
  if (slots.size() != p.init.size()) throw ConfigError("machine state does not belong to this model");
  for (const auto& [name, value] : inputs) {
    auto it = p.slot_of.find(name);
    if (it == p.slot_of.end()) throw ConfigError("input names unknown variable '" + name + "'");
    auto slot = static_cast<std::size_t>(it->second);
    bool sensor = std::find(p.sensor_slots.begin(), p.sensor_slots.end(), it->second) != p.sensor_slots.end();
    bool actuator = std::find(p.actuator_slots.begin(), p.actuator_slots.end(), it->second) != p.actuator_slots.end();
    if (!sensor && !actuator) throw ConfigError("input '" + name + "' is neither a sensor nor an actuator");
    if (actuator) slots[slot] = Value::from_double(p.slot_types[slot], value);
  }
  return slots;
}

CycleResult to_result(const detail::Program& p, std::vector<Value> slots) {
  CycleResult r;
  for (std::size_t i = 0; i < p.actuator_slots.size(); ++i)
    r.actuators[p.actuator_names[i]] = slots[static_cast<std::size_t>(p.actuator_slots[i])];
  r.next = MachineState();
  return r;
}

RunSetup make_setup(const detail::Program& p, const ErrorMarginSpec& eps) {
  RunSetup setup;
  int next = 0;
  for (const auto& [name, e] : eps) {
    if (e < 0 || !std::isfinite(e)) throw ConfigError("error margin for '" + name + "' must be finite and >= 0");
    if (std::find_if(p.sensor_names.begin(), p.sensor_names.end(),
                     [&](const std::string& s) { return iequals(s, name); }) == p.sensor_names.end())
      throw ConfigError("error margin names unknown sensor '" + name + "'");
  }
  for (const auto& name : p.sensor_names) {
    auto it = eps.find(name);
    double e = it == eps.end() ? 0.0 : it->second;
    setup.eps.push_back(e);
    if (e > 0) {
      if (next >= 64) throw ConfigError("at most 64 sensors may carry a non-zero error margin");
      setup.bit.push_back(next++);
    } else {
      setup.bit.push_back(-1);
    }
  }
  return setup;
}

}  // namespace

CycleResult Executable::run_cycle(const MachineState& state, const Inputs& inputs) const {
  const auto& p = *prog_;
  RunSetup setup;
  setup.bit.assign(p.sensor_slots.size(), -1);
  setup.eps.assign(p.sensor_slots.size(), 0.0);
  auto slots = prepare_slots(p, state, inputs);
  RunOutcome o = run_once(p, state, slots, inputs, setup, 0, {}, false, nullptr);
  CycleResult r = to_result(p, o.slots);
  r.next.slots_ = std::move(o.slots);
  return r;
}

CycleResult Executable::run_cycle_offset(const MachineState& state, const Inputs& inputs, const ErrorMarginSpec& eps,
                                         const OffsetAssignment& offsets) const {
  const auto& p = *prog_;
  Inputs shifted = inputs;
  for (const auto& [name, d] : offsets.delta) {
    if (d < -1 || d > 1) throw ConfigError("offset for '" + name + "' must be -1, 0 or +1");
    auto slot = p.slot_of.find(name);
    if (slot == p.slot_of.end() ||
        std::find(p.sensor_slots.begin(), p.sensor_slots.end(), slot->second) == p.sensor_slots.end())
      throw ConfigError("offset names unknown sensor '" + name + "'");
    auto e = eps.find(name);
    double margin = e == eps.end() ? 0.0 : e->second;
    double base = input_or(inputs, name, state.slots().at(static_cast<std::size_t>(slot->second)).to_double());
    shifted[name] = base + d * margin;
  }
  return run_cycle(state, shifted);
}

MultiResult Executable::run_cycle_multi(const MachineState& state, const Inputs& inputs, const ErrorMarginSpec& eps,
                                        const MultiOptions& options) const {
  const auto& p = *prog_;
  RunSetup setup = make_setup(p, eps);
  auto slots = prepare_slots(p, state, inputs);

  // Sensor index by bit, and each sensor's read value for δ ∈ {-1, 0, 1}.
  std::vector<std::size_t> sensor_of_bit;
  std::vector<std::array<Value, 3>> reads;
  for (std::size_t i = 0; i < setup.bit.size(); ++i) {
    if (setup.bit[i] < 0) continue;
    sensor_of_bit.push_back(i);
    auto slot = static_cast<std::size_t>(p.sensor_slots[i]);
    double raw = input_or(inputs, p.sensor_names[i], slots[slot].to_double());
    std::array<Value, 3> r;
    for (int d = -1; d <= 1; ++d) r[static_cast<std::size_t>(d + 1)] = Value::from_double(p.slot_types[slot], raw + d * setup.eps[i]);
    reads.push_back(r);
  }
  const std::size_t k = sensor_of_bit.size();

  struct Job {
    std::uint64_t pinned{0};
    std::vector<int> delta;
  };
  auto key_of = [&](const Job& j) {
    std::vector<std::int64_t> key{static_cast<std::int64_t>(j.pinned)};
    for (std::size_t b = 0; b < k; ++b) {
      if (!(j.pinned >> b & 1U)) continue;
      if (options.prune) {
        const Value& v = reads[b][static_cast<std::size_t>(j.delta[b] + 1)];
        key.push_back(v.type() == Type::Real ? static_cast<std::int64_t>(std::bit_cast<std::uint32_t>(v.as_real()))
                                             : v.as_int());
      } else {
        key.push_back(j.delta[b]);
      }
    }
    return key;
  };
  auto is_zero = [&](const Job& j) {
    for (std::size_t b = 0; b < k; ++b)
      if ((j.pinned >> b & 1U) && !(reads[b][static_cast<std::size_t>(j.delta[b] + 1)] == reads[b][1])) return false;
    return true;
  };

  MultiResult result;
  for (const auto& name : p.actuator_names) result.set.values[name];
  std::deque<Job> work;
  std::set<std::vector<std::int64_t>> scheduled;
  Job root;
  root.delta.assign(k, 0);
  work.push_back(root);
  scheduled.insert(key_of(root));
  bool have_next = false;
  std::set<std::pair<PathSignature, std::vector<Value>>> leaves;

  while (!work.empty()) {
    Job job = std::move(work.front());
    work.pop_front();
    try {
      RunOutcome o = run_once(p, state, slots, inputs, setup, job.pinned, job.delta, true, nullptr);
      ++result.set.fork_count;
      std::vector<Value> outs;
      for (std::size_t i = 0; i < p.actuator_slots.size(); ++i) {
        const Value& v = o.slots[static_cast<std::size_t>(p.actuator_slots[i])];
        result.set.values[p.actuator_names[i]].insert(v);
        outs.push_back(v);
      }
      result.set.paths.insert(o.path);
      leaves.emplace(o.path, std::move(outs));
      if (!have_next && is_zero(job)) {
        result.next.slots_ = std::move(o.slots);
        have_next = true;
      }
    } catch (const ForkRequest& fr) {
      std::vector<std::size_t> bits;
      for (std::size_t b = 0; b < k; ++b)
        if (fr.bits >> b & 1U) bits.push_back(b);
      std::size_t combos = 1;
      for (std::size_t i = 0; i < bits.size(); ++i) {
        combos *= 3;
        if (combos > options.fork_cap) throw ForkBudgetExceeded(options.fork_cap);
      }
      for (std::size_t c = 0; c < combos; ++c) {
        Job child = job;
        std::size_t rest = c;
        for (std::size_t b : bits) {
          child.pinned |= std::uint64_t{1} << b;
          child.delta[b] = static_cast<int>(rest % 3) - 1;
          rest /= 3;
        }
        if (scheduled.insert(key_of(child)).second) work.push_back(std::move(child));
      }
      if (result.set.fork_count + work.size() > options.fork_cap) throw ForkBudgetExceeded(options.fork_cap);
    }
  }
  if (!have_next) throw EvalError({}, "multi-execution lost the zero-offset fork");
  return result;
}

std::map<std::string, std::set<std::string, KeyLess>, KeyLess> Executable::trace_taint(
    const MachineState& state, const Inputs& inputs, const std::set<std::string, KeyLess>& tainted) const {
  const auto& p = *prog_;
  ErrorMarginSpec eps;
  for (const auto& s : tainted) eps[s] = 1.0;
  RunSetup setup = make_setup(p, eps);
  setup.eps.assign(setup.eps.size(), 0.0);
  auto slots = prepare_slots(p, state, inputs);
  RunOutcome o = run_once(p, state, slots, inputs, setup, 0, std::vector<int>(64, 0), false, nullptr);
  std::map<std::string, std::set<std::string, KeyLess>, KeyLess> out;
  for (int s : p.master_slots) {
    auto& set = out[p.slot_names[static_cast<std::size_t>(s)]];
    std::uint64_t t = o.taint[static_cast<std::size_t>(s)];
    for (std::size_t i = 0; i < setup.bit.size(); ++i)
      if (setup.bit[i] >= 0 && (t >> setup.bit[i] & 1U)) set.insert(p.sensor_names[i]);
  }
  return out;
}

TaintedValue Executable::taint_eval(const Expr& expr, const MachineState& state,
                                    const std::map<std::string, std::set<std::string, KeyLess>, KeyLess>& taint) const {
  auto& p = *prog_;
  Expr typed = typecheck_expression(expr, model_.master, model_.lib);
  detail::Program scratch;
  scratch.slot_names = p.slot_names;
  scratch.slot_types = p.slot_types;
  scratch.init = p.init;
  scratch.slot_of = p.slot_of;
  scratch.top_instances = p.top_instances;
  scratch.instances = p.instances;
  scratch.functions = p.functions;
  scratch.fn_index = p.fn_index;
  Compiler c(scratch, model_.lib);
  std::map<std::string, int, KeyLess> vars;
  for (int s : p.master_slots) vars[p.slot_names[static_cast<std::size_t>(s)]] = s;
  CompileScope scope{&vars, &scratch.top_instances, "", -1, model_.master.name};
  CExpr ce = c.compile_expr(typed, scope);

  std::vector<std::string> labels;
  auto bit_of = [&](const std::string& label) {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (iequals(labels[i], label)) return i;
    if (labels.size() >= 64) throw ConfigError("at most 64 distinct taint labels");
    labels.push_back(label);
    return labels.size() - 1;
  };
  std::vector<Value> slots = state.slots();
  std::vector<std::uint64_t> t(slots.size(), 0);
  for (const auto& [name, set] : taint) {
    auto it = p.slot_of.find(name);
    if (it == p.slot_of.end()) throw ConfigError("taint names unknown variable '" + name + "'");
    for (const auto& label : set) t[static_cast<std::size_t>(it->second)] |= std::uint64_t{1} << bit_of(label);
  }
  Ctx ctx{scratch, slots, t, 0, nullptr, nullptr};
  TV r = eval(ce, ctx);
  TaintedValue out;
  out.value = r.v;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (r.t >> i & 1U) out.taint.insert(labels[i]);
  return out;
}

std::vector<BranchSite> Executable::branch_sites() const {
  return {prog_->sites.begin(), prog_->sites.begin() + static_cast<std::ptrdiff_t>(prog_->master_sites)};
}

std::vector<int> Executable::site_decisions(const MachineState& state, const Inputs& inputs) const {
  const auto& p = *prog_;
  RunSetup setup;
  setup.bit.assign(p.sensor_slots.size(), -1);
  setup.eps.assign(p.sensor_slots.size(), 0.0);
  auto slots = prepare_slots(p, state, inputs);
  std::vector<int> decisions(p.master_sites, -1);
  run_once(p, state, slots, inputs, setup, 0, {}, false, &decisions);
  return decisions;
}

ActuationSet brute_force_actuations(const Executable& exe, const MachineState& state, const Inputs& inputs,
                                    const ErrorMarginSpec& eps) {
  std::vector<std::string> tainted;
  for (const auto& s : exe.model().sensors()) {
    auto it = eps.find(s);
    if (it != eps.end() && it->second > 0) tainted.push_back(s);
  }
  ActuationSet out;
  for (const auto& a : exe.model().actuators()) out.values[a];
  std::size_t combos = 1;
  for (std::size_t i = 0; i < tainted.size(); ++i) combos *= 3;
  for (std::size_t c = 0; c < combos; ++c) {
    OffsetAssignment off;
    std::size_t rest = c;
    for (const auto& s : tainted) {
      off.delta[s] = static_cast<int>(rest % 3) - 1;
      rest /= 3;
    }
    CycleResult r = exe.run_cycle_offset(state, inputs, eps, off);
    for (const auto& [name, v] : r.actuators) out.values[name].insert(v);
  }
  out.fork_count = combos;
  return out;
}

}  // namespace cbi
