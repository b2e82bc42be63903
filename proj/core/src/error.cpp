#include "cbi/error.hpp"

#include <algorithm>
#include <sstream>

namespace cbi {

std::string SourceSpan::to_string() const {
  if (!valid()) return "<unknown>";
  return std::to_string(line) + ":" + std::to_string(column);
}

SourceSpan merge(const SourceSpan& a, const SourceSpan& b) {
  if (!a.valid()) return b;
  if (!b.valid()) return a;
  SourceSpan out = a;
  if (b.end_line > out.end_line || (b.end_line == out.end_line && b.end_column > out.end_column)) {
    out.end_line = b.end_line;
    out.end_column = b.end_column;
  }
  return out;
}

StError::StError(SourceSpan span, const std::string& what) : Error(span.to_string() + ": " + what), span_(span) {}

namespace {

std::string expected_list(const std::vector<std::string>& expected) {
  std::ostringstream os;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i) os << (i + 1 == expected.size() ? " or " : ", ");
    os << expected[i];
  }
  return os.str();
}

}  // namespace

SyntaxError::SyntaxError(SourceSpan span, std::string found, std::vector<std::string> expected)
    : StError(span, "syntax error: expected " + expected_list(expected) + ", found " + found),
      found_(std::move(found)),
      expected_(std::move(expected)) {}

DuplicateName::DuplicateName(SourceSpan span, const std::string& name)
    : StError(span, "duplicate name '" + name + "'") {}

RecursionError::RecursionError(SourceSpan span, std::vector<std::string> cycle)
    : StError(span,
              [&] {
                std::string s = "recursive POU reference: ";
                for (std::size_t i = 0; i < cycle.size(); ++i) s += (i ? " -> " : "") + cycle[i];
                return s;
              }()),
      cycle_(std::move(cycle)) {}

TypeConflict::TypeConflict(std::string name, const std::string& why)
    : ConsolidationError("conflicting declarations of '" + name + "': " + why), name_(std::move(name)) {}

WriteWriteConflict::WriteWriteConflict(std::string name, std::string plc_a, std::string plc_b)
    : ConsolidationError("'" + name + "' is written by both " + plc_a + " and " + plc_b),
      name_(std::move(name)),
      plc_a_(std::move(plc_a)),
      plc_b_(std::move(plc_b)) {}

EvalError::EvalError(SourceSpan span, const std::string& what) : Error(span.to_string() + ": " + what), span_(span) {}

ForkBudgetExceeded::ForkBudgetExceeded(std::size_t limit)
    : Error("multi-execution exceeded the fork budget of " + std::to_string(limit)), limit_(limit) {}

ParseError::ParseError(std::size_t row, std::string column, const std::string& why)
    : Error("row " + std::to_string(row) + (column.empty() ? "" : ", column '" + column + "'") + ": " + why),
      row_(row),
      column_(std::move(column)) {}

}  // namespace cbi
