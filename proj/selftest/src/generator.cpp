#include "cbi/selftest/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace cbi::selftest {

int pick(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

namespace {

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  std::string s = buf;
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

const char* const kLatch = R"(FUNCTION_BLOCK Latch
  VAR_INPUT
    set : BOOL;
    reset : BOOL;
  END_VAR
  VAR_OUTPUT
    q : BOOL;
  END_VAR
  IF set THEN
    q := TRUE;
  ELSIF reset THEN
    q := FALSE;
  END_IF;
END_FUNCTION_BLOCK

)";

const char* const kLin = R"(FUNCTION Lin : REAL
  VAR_INPUT
    x : REAL;
    k : REAL;
  END_VAR
  Lin := x * k + 1.0;
END_FUNCTION

)";

class Gen {
 public:
  Gen(std::mt19937_64& rng, const GenOptions& o) : rng_(rng), o_(o) {}

  GeneratedProgram run() {
    GeneratedProgram g;
    int k = pick(rng_, 1, std::max(1, o_.tainted_sensors));
    for (int i = 0; i < k; ++i) {
      std::string name = o_.sensor_pool.empty() ? "S" + std::to_string(i)
                                                 : o_.sensor_pool[static_cast<std::size_t>(i) % o_.sensor_pool.size()];
      if (std::find(g.sensors.begin(), g.sensors.end(), name) != g.sensors.end()) continue;
      g.sensors.push_back(name);
      static const double eps_choices[] = {0.25, 0.5, 1.0, 2.0};
      double e = eps_choices[pick(rng_, 0, 3)];
      g.eps[name] = e;
      double c = 0.25 * pick(rng_, -200, 200);
      g.centers.push_back(c);
      sensors_.push_back({name, c, e});
    }
    const std::string& p = o_.output_prefix;
    acts_ = {p + "A0", p + "A1", p + "A2"};
    acts_.resize(static_cast<std::size_t>(pick(rng_, 1, 3)));
    q_ = p + "Q";
    r_ = p + "R";
    use_fb_ = o_.function_blocks && pick(rng_, 0, 1) == 1;

    std::string body;
    int n = pick(rng_, 2, std::max(2, o_.statements));
    for (int i = 0; i < n; ++i) body += statement(1, 0);
    // Every actuator gets a value that depends on the inputs at least once.
    for (const auto& a : acts_)
      if (pick(rng_, 0, 2) == 0) body += "  " + a + " := " + bool_expr(2) + ";\n";

    std::string src;
    if (use_fb_) src += kLatch;
    src += kLin;
    src += "PROGRAM " + o_.program_name + "\n  VAR_INPUT\n";
    for (const auto& s : sensors_) src += "    " + s.name + " : REAL;\n";
    src += "    U : INT;\n  END_VAR\n  VAR_IN_OUT\n";
    for (const auto& a : acts_) src += "    " + a + " : BOOL;\n";
    src += "    " + q_ + " : INT;\n    " + r_ + " : REAL;\n  END_VAR\n  VAR\n";
    src += "    t0 : REAL;\n    t1 : REAL := 1.5;\n    n : INT;\n    b : BOOL;\n";
    if (use_fb_) src += "    L1 : Latch;\n";
    src += "  END_VAR\n" + body + "END_PROGRAM\n";
    src += "CONFIGURATION Config0\n  RESOURCE Res0 ON PLC\n    TASK Main(INTERVAL := T#1s, PRIORITY := 0);\n";
    src += "    PROGRAM Inst0 WITH Main : " + o_.program_name + ";\n  END_RESOURCE\nEND_CONFIGURATION\n";
    g.source = std::move(src);
    return g;
  }

 private:
  struct Sensor {
    std::string name;
    double center;
    double eps;
  };

  const Sensor& any_sensor() { return sensors_[static_cast<std::size_t>(pick(rng_, 0, static_cast<int>(sensors_.size()) - 1))]; }

  std::string indent(int depth) { return std::string(static_cast<std::size_t>(2 * depth), ' '); }

  std::string statement(int depth, int if_depth) {
    int r = pick(rng_, 0, 9);
    if (r <= 2 && if_depth < o_.max_if_depth) return if_stmt(depth, if_depth);
    if (r == 3 && if_depth < o_.max_if_depth) return case_stmt(depth, if_depth);
    if (r == 4 && use_fb_)
      return indent(depth) + "L1(set := " + bool_expr(1) + ", reset := " + bool_expr(1) + ");\n";
    return indent(depth) + assignment() + "\n";
  }

  std::string block(int depth, int if_depth) {
    std::string out;
    int n = pick(rng_, 1, 3);
    for (int i = 0; i < n; ++i) out += statement(depth, if_depth);
    return out;
  }

  std::string assignment() {
    switch (pick(rng_, 0, 6)) {
      case 0:
        return "t0 := " + real_expr(2) + ";";
      case 1:
        return "n := " + int_expr(2) + ";";
      case 2:
        return "b := " + bool_expr(2) + ";";
      case 3:
        return q_ + " := " + int_expr(2) + ";";
      case 4:
        return r_ + " := " + real_expr(2) + ";";
      default: {
        const auto& a = acts_[static_cast<std::size_t>(pick(rng_, 0, static_cast<int>(acts_.size()) - 1))];
        if (use_fb_ && pick(rng_, 0, 3) == 0) return a + " := L1.q;";
        return a + " := " + bool_expr(2) + ";";
      }
    }
  }

  std::string if_stmt(int depth, int if_depth) {
    std::string out = indent(depth) + "IF " + bool_expr(2) + " THEN\n" + block(depth + 1, if_depth + 1);
    int elsifs = pick(rng_, 0, 2);
    for (int i = 0; i < elsifs; ++i)
      out += indent(depth) + "ELSIF " + bool_expr(2) + " THEN\n" + block(depth + 1, if_depth + 1);
    if (pick(rng_, 0, 1)) out += indent(depth) + "ELSE\n" + block(depth + 1, if_depth + 1);
    return out + indent(depth) + "END_IF;\n";
  }

  std::string case_stmt(int depth, int if_depth) {
    const Sensor& s = any_sensor();
    auto c = static_cast<int>(std::lround(s.center));
    std::string out = indent(depth) + "CASE REAL_TO_INT(" + s.name + ") OF\n";
    out += indent(depth + 1) + std::to_string(c) + ":\n" + block(depth + 2, if_depth + 1);
    out += indent(depth + 1) + std::to_string(c + 1) + ".." + std::to_string(c + 2) + ", " + std::to_string(c - 1) +
           ":\n" + block(depth + 2, if_depth + 1);
    out += indent(depth) + "ELSE\n" + block(depth + 1, if_depth + 1);
    return out + indent(depth) + "END_CASE;\n";
  }

  // Constant near a sensor's center, on the ε/2 grid so equality can hold.
  std::string near(const Sensor& s) { return num(s.center + 0.5 * s.eps * pick(rng_, -2, 2)); }

  std::string cmp_op() {
    static const char* const ops[] = {"<", "<=", ">", ">=", "=", "<>"};
    return ops[pick(rng_, 0, 5)];
  }

  std::string bool_expr(int budget) {
    int r = pick(rng_, 0, budget <= 0 ? 2 : 7);
    switch (r) {
      case 0:
      case 1: {
        const Sensor& s = any_sensor();
        return s.name + " " + cmp_op() + " " + near(s);
      }
      case 2: {
        static const char* const vars[] = {"b", "TRUE", "FALSE"};
        int v = pick(rng_, 0, 3);
        if (v == 3) return acts_[0];
        return vars[v];
      }
      case 3:
        return "(" + bool_expr(budget - 1) + " AND " + bool_expr(budget - 1) + ")";
      case 4:
        return "(" + bool_expr(budget - 1) + " OR " + bool_expr(budget - 1) + ")";
      case 5:
        return "NOT(" + bool_expr(budget - 1) + ")";
      case 6:
        return "(" + bool_expr(budget - 1) + " XOR " + bool_expr(budget - 1) + ")";
      default: {
        const Sensor& s = any_sensor();
        const Sensor& u = any_sensor();
        return "(" + s.name + " + " + u.name + ") " + cmp_op() + " " + num(s.center + u.center);
      }
    }
  }

  std::string real_expr(int budget) {
    int r = pick(rng_, 0, budget <= 0 ? 2 : 9);
    const Sensor& s = any_sensor();
    switch (r) {
      case 0:
        return s.name;
      case 1:
        return pick(rng_, 0, 1) ? "t0" : "t1";
      case 2:
        return num(0.25 * pick(rng_, -40, 40));
      case 3:
        return "(" + real_expr(budget - 1) + " + " + real_expr(budget - 1) + ")";
      case 4:
        return "(" + real_expr(budget - 1) + " * " + num(0.5 * pick(rng_, -4, 4)) + ")";
      case 5:
        return "Lin(" + real_expr(budget - 1) + ", " + num(0.5 * pick(rng_, 1, 4)) + ")";
      case 6:
        return "ABS(" + s.name + " - " + near(s) + ")";
      case 7:
        return std::string(pick(rng_, 0, 1) ? "MIN(" : "MAX(") + real_expr(budget - 1) + ", " + real_expr(budget - 1) +
               ")";
      case 8:
        return "SEL(" + bool_expr(budget - 1) + ", " + real_expr(budget - 1) + ", " + real_expr(budget - 1) + ")";
      default:
        return "(" + real_expr(budget - 1) + " / (ABS(" + s.name + ") + 1.0))";
    }
  }

  std::string int_expr(int budget) {
    int r = pick(rng_, 0, budget <= 0 ? 1 : 5);
    switch (r) {
      case 0:
        return pick(rng_, 0, 1) ? "n" : "U";
      case 1:
        return std::to_string(pick(rng_, -20, 20));
      case 2:
        return "REAL_TO_INT(" + real_expr(budget - 1) + ")";
      case 3:
        return "(" + int_expr(budget - 1) + " + " + int_expr(budget - 1) + ")";
      case 4:
        return "(" + int_expr(budget - 1) + " MOD 7)";
      default:
        return "TRUNC(" + real_expr(budget - 1) + ")";
    }
  }

  std::mt19937_64& rng_;
  const GenOptions& o_;
  std::vector<Sensor> sensors_;
  std::vector<std::string> acts_;
  std::string q_, r_;
  bool use_fb_{false};
};

}  // namespace

GeneratedProgram generate_program(std::mt19937_64& rng, const GenOptions& options) { return Gen(rng, options).run(); }

Inputs random_snapshot(std::mt19937_64& rng, const GeneratedProgram& prog) {
  Inputs in;
  for (std::size_t i = 0; i < prog.sensors.size(); ++i) {
    double e = prog.eps.at(prog.sensors[i]);
    in[prog.sensors[i]] = prog.centers[i] + 0.5 * e * pick(rng, -3, 3);
  }
  in["U"] = pick(rng, -5, 5);
  return in;
}

}  // namespace cbi::selftest
