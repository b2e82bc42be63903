#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cbi {

/// Half-open region of ST source text, 1-based lines and columns.
struct SourceSpan {
  std::uint32_t line{0};
  std::uint32_t column{0};
  std::uint32_t end_line{0};
  std::uint32_t end_column{0};

  bool valid() const { return line != 0; }
  std::string to_string() const;

  friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

SourceSpan merge(const SourceSpan& a, const SourceSpan& b);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Structured Text front end

class StError : public Error {
 public:
  StError(SourceSpan span, const std::string& what);
  const SourceSpan& span() const { return span_; }

 private:
  SourceSpan span_;
};

class SyntaxError : public StError {
 public:
  SyntaxError(SourceSpan span, std::string found, std::vector<std::string> expected);
  const std::string& found() const { return found_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::string found_;
  std::vector<std::string> expected_;
};

class TypeError : public StError {
 public:
  using StError::StError;
};

class DuplicateName : public StError {
 public:
  DuplicateName(SourceSpan span, const std::string& name);
};

/// A POU call graph (or FB containment graph) contains a cycle.
class RecursionError : public StError {
 public:
  RecursionError(SourceSpan span, std::vector<std::string> cycle);
  const std::vector<std::string>& cycle() const { return cycle_; }

 private:
  std::vector<std::string> cycle_;
};

// ---------------------------------------------------------------------------
// Consolidation

class ConsolidationError : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public ConsolidationError {
 public:
  EmptyInput() : ConsolidationError("consolidation needs at least one program") {}
};

class TypeConflict : public ConsolidationError {
 public:
  TypeConflict(std::string name, const std::string& why);
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class WriteWriteConflict : public ConsolidationError {
 public:
  WriteWriteConflict(std::string name, std::string plc_a, std::string plc_b);
  const std::string& name() const { return name_; }
  const std::string& plc_a() const { return plc_a_; }
  const std::string& plc_b() const { return plc_b_; }

 private:
  std::string name_, plc_a_, plc_b_;
};

// ---------------------------------------------------------------------------
// Execution

class EvalError : public Error {
 public:
  EvalError(SourceSpan span, const std::string& what);
  const SourceSpan& span() const { return span_; }

 private:
  SourceSpan span_;
};

class ForkBudgetExceeded : public Error {
 public:
  explicit ForkBudgetExceeded(std::size_t limit);
  std::size_t limit() const { return limit_; }

 private:
  std::size_t limit_;
};

// ---------------------------------------------------------------------------
// Configuration, data files and I/O

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed historian CSV. Row 1 is the header.
class ParseError : public Error {
 public:
  ParseError(std::size_t row, std::string column, const std::string& why);
  std::size_t row() const { return row_; }
  const std::string& column() const { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class LabelMissing : public Error {
 public:
  using Error::Error;
};

}  // namespace cbi
