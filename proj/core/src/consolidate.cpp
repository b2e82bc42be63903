#include <algorithm>
#include <set>

#include "cbi/consolidator.hpp"
#include "cbi/stlang.hpp"

namespace cbi {

std::string_view to_string(Role r) {
  switch (r) {
    case Role::Sensor:
      return "sensor";
    case Role::Actuator:
      return "actuator";
    case Role::Internal:
      return "internal";
  }
  return "?";
}

std::vector<std::string> StModel::sensors() const {
  std::vector<std::string> out;
  for (const VarDecl* d : master.declarations()) {
    auto it = io_map.find(d->name);
    if (it != io_map.end() && it->second.role == Role::Sensor) out.push_back(d->name);
  }
  return out;
}

std::vector<std::string> StModel::actuators() const {
  std::vector<std::string> out;
  for (const VarDecl* d : master.declarations()) {
    auto it = io_map.find(d->name);
    if (it != io_map.end() && it->second.role == Role::Actuator) out.push_back(d->name);
  }
  return out;
}

namespace {

using RenameMap = std::map<std::string, std::string, KeyLess>;

std::string renamed(const std::string& name, const RenameMap& map) {
  auto dot = name.find('.');
  std::string head = dot == std::string::npos ? name : name.substr(0, dot);
  auto it = map.find(head);
  if (it == map.end()) return name;
  return dot == std::string::npos ? it->second : it->second + name.substr(dot);
}

void rename_expr(Expr& e, const RenameMap& map) {
  if (e.kind == Expr::Kind::Var) e.name = renamed(e.name, map);
  for (auto& o : e.operands) rename_expr(o, map);
}

void rename_body(std::vector<Statement>& body, const RenameMap& map) {
  for (auto& s : body) {
    if (s.kind == Statement::Kind::Assign || s.kind == Statement::Kind::FbCall) s.target = renamed(s.target, map);
    rename_expr(s.value, map);
    for (auto& b : s.branches) {
      rename_expr(b.cond, map);
      rename_body(b.body, map);
    }
    for (auto& a : s.arms) rename_body(a.body, map);
    for (auto& a : s.args) rename_expr(a.value, map);
    rename_body(s.else_body, map);
  }
}

bool is_io(VarKind k) { return k == VarKind::Input || k == VarKind::Output || k == VarKind::InOut; }

struct MergedVar {
  VarDecl decl;
  std::string first_plc;
  std::string writer_plc;  // first PLC declaring it as output/inout
};

void merge_library(PouLibrary& into, const PouLibrary& lib) {
  for (const auto& [name, f] : lib.functions) {
    if (lib.function_block(name) || into.function_block(name))
      throw TypeConflict(name, "defined as both FUNCTION and FUNCTION_BLOCK");
    auto [it, fresh] = into.functions.emplace(name, f);
    if (!fresh && !structurally_equal(it->second, f))
      throw TypeConflict(name, "FUNCTION defined differently by two PLCs");
  }
  for (const auto& [name, fb] : lib.function_blocks) {
    if (into.function(name)) throw TypeConflict(name, "defined as both FUNCTION and FUNCTION_BLOCK");
    auto [it, fresh] = into.function_blocks.emplace(name, fb);
    if (!fresh && !structurally_equal(it->second, fb))
      throw TypeConflict(name, "FUNCTION_BLOCK defined differently by two PLCs");
  }
}

}  // namespace

StModel consolidate(const std::vector<StProgram>& programs, const std::vector<PouLibrary>& libs,
                    const std::vector<std::string>& plc_names) {
  if (programs.empty()) throw EmptyInput();
  if (!libs.empty() && libs.size() != programs.size())
    throw ConfigError("consolidate: " + std::to_string(programs.size()) + " programs but " +
                      std::to_string(libs.size()) + " libraries");
  if (!plc_names.empty() && plc_names.size() != programs.size())
    throw ConfigError("consolidate: PLC name list does not match the program list");

  StModel model;
  for (std::size_t i = 0; i < programs.size(); ++i) {
    std::string name = plc_names.empty() ? programs[i].name : plc_names[i];
    for (const auto& seen : model.plc_order)
      if (iequals(seen, name)) throw ConfigError("duplicate PLC name '" + name + "'");
    model.plc_order.push_back(name);
  }
  for (const auto& lib : libs) merge_library(model.lib, lib);

  // I/O variables unify by name; everything else must stay private.
  std::set<std::string, KeyLess> io_names;
  for (const auto& p : programs)
    for (const VarDecl* d : p.declarations())
      if (is_io(d->kind)) io_names.insert(d->name);

  std::map<std::string, MergedVar, KeyLess> io_vars;
  std::vector<std::string> io_order;
  std::set<std::string, KeyLess> taken(io_names);
  std::map<std::string, int, KeyLess> local_owners;
  for (const auto& p : programs)
    for (const auto& d : p.locals) ++local_owners[d.name];

  std::vector<StProgram> prepared;
  for (std::size_t i = 0; i < programs.size(); ++i) {
    const StProgram& p = programs[i];
    const std::string& plc = model.plc_order[i];
    StProgram q = p;
    RenameMap map;
    for (auto& d : q.locals) {
      bool clash = io_names.count(d.name) || local_owners[d.name] > 1 || model.lib.function(d.name) ||
                   model.lib.function_block(d.name);
      if (!clash) {
        taken.insert(d.name);
        continue;
      }
      std::string base = plc + "_" + d.name;
      std::string fresh = base;
      for (int n = 2; taken.count(fresh); ++n) fresh = base + "_" + std::to_string(n);
      taken.insert(fresh);
      map[d.name] = fresh;
      model.renames.push_back({plc, d.name, fresh});
      d.name = fresh;
    }
    if (!map.empty()) rename_body(q.body, map);

    for (const VarDecl* d : p.declarations()) {
      if (!is_io(d->kind)) continue;
      auto [it, fresh] = io_vars.try_emplace(d->name);
      MergedVar& m = it->second;
      if (fresh) {
        m.decl = *d;
        m.first_plc = plc;
        io_order.push_back(d->name);
      } else {
        if (m.decl.type != d->type)
          throw TypeConflict(d->name, "declared " + std::string(to_string(m.decl.type)) + " by " + m.first_plc +
                                          " and " + std::string(to_string(d->type)) + " by " + plc);
        if (m.decl.initial_value() != d->initial_value())
          throw TypeConflict(d->name, "initial value " + m.decl.initial_value().to_string() + " by " + m.first_plc +
                                          " but " + d->initial_value().to_string() + " by " + plc);
        if (d->kind == VarKind::InOut || (d->kind == VarKind::Output && m.decl.kind == VarKind::Input))
          m.decl.kind = d->kind;
      }
      if (d->kind != VarKind::Input && m.writer_plc.empty()) m.writer_plc = plc;
    }
    prepared.push_back(std::move(q));
  }

  // Write-write conflicts on shared variables.
  std::map<std::string, std::string, KeyLess> writer;
  for (std::size_t i = 0; i < prepared.size(); ++i) {
    for (const auto& key : write_set(prepared[i].body)) {
      if (!io_vars.count(key)) continue;
      auto [it, fresh] = writer.emplace(key, model.plc_order[i]);
      if (!fresh) throw WriteWriteConflict(io_vars.at(key).decl.name, it->second, model.plc_order[i]);
    }
  }

  StProgram& master = model.master;
  master.name = "master";
  master.task_interval = programs.front().task_interval;
  for (const auto& p : programs) {
    master.task_interval = std::min(master.task_interval, p.task_interval);
    master.exec_budget += p.exec_budget;
  }
  for (const auto& name : io_order) {
    MergedVar& m = io_vars.at(name);
    switch (m.decl.kind) {
      case VarKind::Input:
        master.inputs.push_back(m.decl);
        model.io_map[name] = {Role::Sensor, m.first_plc};
        break;
      case VarKind::Output:
        master.outputs.push_back(m.decl);
        break;
      default:
        master.inouts.push_back(m.decl);
        break;
    }
    if (m.decl.kind != VarKind::Input) {
      auto w = writer.find(name);
      model.io_map[name] = {Role::Actuator, w != writer.end() ? w->second : m.writer_plc};
    }
  }
  for (std::size_t i = 0; i < prepared.size(); ++i) {
    const std::string& plc = model.plc_order[i];
    for (auto& d : prepared[i].locals) {
      model.io_map[d.name] = {Role::Internal, plc};
      master.locals.push_back(d);
    }
    SegmentSpan span{master.body.size(), 0};
    for (auto& s : prepared[i].body) master.body.push_back(std::move(s));
    span.end = master.body.size();
    model.segment_spans[plc] = span;
  }
  return model;
}

StModel reorder(const StModel& model, const std::vector<std::string>& order) {
  if (order.size() != model.plc_order.size()) throw ConfigError("reorder: not a permutation of the PLC order");
  StModel out = model;
  out.master.body.clear();
  out.segment_spans.clear();
  out.plc_order.clear();
  for (const auto& plc : order) {
    auto it = model.segment_spans.find(plc);
    if (it == model.segment_spans.end() || out.segment_spans.count(plc))
      throw ConfigError("reorder: not a permutation of the PLC order");
    SegmentSpan span{out.master.body.size(), 0};
    for (std::size_t i = it->second.begin; i < it->second.end; ++i) out.master.body.push_back(model.master.body[i]);
    span.end = out.master.body.size();
    out.segment_spans[plc] = span;
    out.plc_order.push_back(it->first);
  }
  return out;
}

std::string print_master(const StModel& model) {
  std::string out = print_library(model.lib);
  out += "(* Master PLC Code *)\n";
  StProgram header = model.master;
  header.body.clear();
  std::string prog = print_program(header);
  // Splice the segments in before END_PROGRAM.
  prog.erase(prog.size() - std::string("END_PROGRAM\n").size());
  out += prog;
  for (const auto& plc : model.plc_order) {
    const SegmentSpan& span = model.segment_spans.at(plc);
    out += "\n  (* " + plc + " code *)\n";
    std::vector<Statement> seg(model.master.body.begin() + static_cast<std::ptrdiff_t>(span.begin),
                               model.master.body.begin() + static_cast<std::ptrdiff_t>(span.end));
    out += print_statements(seg, 1);
  }
  out += "END_PROGRAM\n\n";
  out += print_configuration(model.master, "MasterConfig");
  return out;
}

TimingReport check_timing(const std::vector<StProgram>& programs) {
  TimingReport r;
  if (programs.empty()) return r;
  r.min_interval = programs.front().task_interval;
  for (const auto& p : programs) {
    r.sum_budget += p.exec_budget;
    r.min_interval = std::min(r.min_interval, p.task_interval);
  }
  r.ok = r.sum_budget < r.min_interval;
  return r;
}

StModel consolidate(const std::vector<PlcSource>& plcs) {
  std::vector<PouLibrary> libs;
  std::vector<std::string> names;
  for (const auto& p : plcs) {
    libs.push_back(p.unit.library);
    names.push_back(p.name);
  }
  return consolidate(programs_of(plcs), libs, names);
}

std::vector<StProgram> programs_of(const std::vector<PlcSource>& plcs) {
  std::vector<StProgram> out;
  for (const auto& p : plcs) out.push_back(p.unit.program);
  return out;
}

}  // namespace cbi
