#include <algorithm>
#include <cmath>
#include <random>

#include "cbi/exec.hpp"

namespace cbi {

namespace {

using Deps = std::set<std::string, KeyLess>;
using Env = std::map<std::string, Deps, KeyLess>;

class DependenceAnalysis {
 public:
  DependenceAnalysis(const StModel& model, const std::vector<BranchSite>& sites) : sites_(sites) {
    for (const auto& s : model.sensors()) sensors_.insert(s);
  }

  void run(const std::vector<Statement>& body) {
    Env env;
    walk(body, env, {});
  }

  std::vector<BranchSite> result() && { return std::move(sites_); }

 private:
  Deps deps(const Expr& e, const Env& env) const {
    Deps out;
    collect(e, env, out);
    return out;
  }

  void collect(const Expr& e, const Env& env, Deps& out) const {
    if (e.kind == Expr::Kind::Var) {
      std::string head = e.name.substr(0, e.name.find('.'));
      if (sensors_.count(head)) out.insert(head);
      auto it = env.find(head);
      if (it != env.end()) out.insert(it->second.begin(), it->second.end());
    }
    for (const auto& o : e.operands) collect(o, env, out);
  }

  static void merge_into(Env& into, const Env& from) {
    for (const auto& [k, v] : from) into[k].insert(v.begin(), v.end());
  }

  void walk(const std::vector<Statement>& body, Env& env, const Deps& ctx) {
    for (const auto& s : body) {
      switch (s.kind) {
        case Statement::Kind::Assign: {
          Deps d = deps(s.value, env);
          d.insert(ctx.begin(), ctx.end());
          env[s.target] = std::move(d);
          break;
        }
        case Statement::Kind::FbCall: {
          Deps& d = env[s.target];
          for (const auto& a : s.args) {
            Deps ad = deps(a.value, env);
            d.insert(ad.begin(), ad.end());
          }
          d.insert(ctx.begin(), ctx.end());
          break;
        }
        case Statement::Kind::If: {
          BranchSite& site = sites_.at(next_site_++);
          Env out = env;
          Deps inner = ctx;
          for (const auto& b : s.branches) {
            Deps c = deps(b.cond, env);
            site.sensors.insert(c.begin(), c.end());
            inner.insert(c.begin(), c.end());
            Env branch = env;
            walk(b.body, branch, inner);
            merge_into(out, branch);
          }
          if (s.has_else) {
            Env branch = env;
            walk(s.else_body, branch, inner);
            merge_into(out, branch);
          }
          env = std::move(out);
          break;
        }
        case Statement::Kind::Case: {
          BranchSite& site = sites_.at(next_site_++);
          Deps c = deps(s.value, env);
          site.sensors.insert(c.begin(), c.end());
          Deps inner = ctx;
          inner.insert(c.begin(), c.end());
          Env out = env;
          for (const auto& arm : s.arms) {
            Env branch = env;
            walk(arm.body, branch, inner);
            merge_into(out, branch);
          }
          Env branch = env;
          walk(s.else_body, branch, inner);
          merge_into(out, branch);
          env = std::move(out);
          break;
        }
      }
    }
  }

  std::vector<BranchSite> sites_;
  std::size_t next_site_{0};
  Deps sensors_;
};

// Literals appearing in the model, used to place random samples near the
// thresholds the control logic tests against.
void literals_in(const Expr& e, std::vector<double>& out) {
  if (e.kind == Expr::Kind::Literal && e.literal.type() != Type::Bool) out.push_back(e.literal.to_double());
  for (const auto& o : e.operands) literals_in(o, out);
}

void literals_in(const std::vector<Statement>& body, std::vector<double>& out) {
  for (const auto& s : body) {
    literals_in(s.value, out);
    for (const auto& b : s.branches) {
      literals_in(b.cond, out);
      literals_in(b.body, out);
    }
    for (const auto& a : s.arms) {
      for (const auto& l : a.labels) {
        out.push_back(static_cast<double>(l.lo));
        out.push_back(static_cast<double>(l.hi));
      }
      literals_in(a.body, out);
    }
    for (const auto& a : s.args) literals_in(a.value, out);
    literals_in(s.else_body, out);
  }
}

std::optional<PermutationCounterexample> compare_orders(const std::vector<std::pair<std::vector<std::string>, Executable>>& runs,
                                                        const Inputs& snapshot) {
  std::optional<std::pair<std::size_t, CycleResult>> first;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const Executable& exe = runs[i].second;
    CycleResult r = exe.run_cycle(exe.initial_state(), snapshot);
    if (!first) {
      first.emplace(i, std::move(r));
      continue;
    }
    for (const auto& [name, v] : first->second.actuators) {
      const Value& w = r.actuators.at(name);
      if (v == w) continue;
      PermutationCounterexample cx;
      cx.snapshot = snapshot;
      cx.order_a = runs[first->first].first;
      cx.order_b = runs[i].first;
      cx.variable = name;
      cx.value_a = v;
      cx.value_b = w;
      return cx;
    }
  }
  return std::nullopt;
}

std::vector<std::vector<std::string>> orders_of(const StModel& model, std::mt19937_64& rng) {
  std::vector<std::vector<std::string>> orders;
  std::vector<std::string> order = model.plc_order;
  if (order.size() <= 4) {
    std::vector<std::size_t> idx(order.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    do {
      std::vector<std::string> o;
      for (auto i : idx) o.push_back(order[i]);
      orders.push_back(std::move(o));
    } while (std::next_permutation(idx.begin(), idx.end()));
    return orders;
  }
  orders.push_back(order);
  std::reverse(order.begin(), order.end());
  orders.push_back(order);
  for (int i = 0; i < 22; ++i) {
    std::shuffle(order.begin(), order.end(), rng);
    orders.push_back(order);
  }
  return orders;
}

std::vector<std::pair<std::vector<std::string>, Executable>> compile_orders(
    const StModel& model, const std::vector<std::vector<std::string>>& orders) {
  std::vector<std::pair<std::vector<std::string>, Executable>> runs;
  for (const auto& o : orders) runs.emplace_back(o, Executable(reorder(model, o)));
  return runs;
}

}  // namespace

std::vector<BranchSite> sensor_dependent_branches(const StModel& model) {
  Executable exe(model);
  DependenceAnalysis a(model, exe.branch_sites());
  a.run(model.master.body);
  return std::move(a).result();
}

std::optional<PermutationCounterexample> permutation_equivalence_on(const StModel& model, const Inputs& snapshot) {
  std::mt19937_64 rng(1);
  return compare_orders(compile_orders(model, orders_of(model, rng)), snapshot);
}

std::optional<PermutationCounterexample> permutation_equivalence_check(const StModel& model, int trials,
                                                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto runs = compile_orders(model, orders_of(model, rng));
  std::vector<double> lits;
  literals_in(model.master.body, lits);
  std::sort(lits.begin(), lits.end());
  lits.erase(std::unique(lits.begin(), lits.end()), lits.end());

  std::vector<const VarDecl*> inputs;
  for (const VarDecl* d : model.master.declarations()) {
    auto it = model.io_map.find(d->name);
    if (it != model.io_map.end() && it->second.role != Role::Internal) inputs.push_back(d);
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < trials; ++t) {
    Inputs snap;
    for (const VarDecl* d : inputs) {
      double v;
      if (d->type == Type::Bool) {
        v = unit(rng) < 0.5 ? 0.0 : 1.0;
      } else if (!lits.empty() && unit(rng) < 0.6) {
        double base = lits[static_cast<std::size_t>(unit(rng) * static_cast<double>(lits.size())) % lits.size()];
        double step = d->type == Type::Int ? 1.0 : 0.5;
        v = base + step * static_cast<double>(static_cast<int>(unit(rng) * 3.0) - 1);
      } else {
        v = std::round((unit(rng) * 2.0 - 1.0) * 1000.0);
        if (d->type == Type::Real) v += unit(rng);
      }
      snap[d->name] = v;
    }
    if (auto cx = compare_orders(runs, snap)) return cx;
  }
  return std::nullopt;
}

}  // namespace cbi
