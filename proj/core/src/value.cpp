#include "cbi/value.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace cbi {

std::string_view to_string(Type t) {
  switch (t) {
    case Type::Bool:
      return "BOOL";
    case Type::Int:
      return "INT";
    case Type::Real:
      return "REAL";
  }
  return "?";
}

std::optional<Type> parse_type(std::string_view upper_name) {
  if (upper_name == "BOOL") return Type::Bool;
  if (upper_name == "INT" || upper_name == "DINT" || upper_name == "SINT" || upper_name == "LINT") return Type::Int;
  if (upper_name == "REAL") return Type::Real;
  return std::nullopt;
}

Value Value::zero(Type t) {
  switch (t) {
    case Type::Bool:
      return boolean(false);
    case Type::Int:
      return integer(0);
    case Type::Real:
      return real(0.0F);
  }
  return {};
}

Value Value::from_double(Type t, double d) {
  switch (t) {
    case Type::Bool:
      return boolean(d != 0.0);
    case Type::Int:
      return integer(static_cast<std::int64_t>(std::llround(d)));
    case Type::Real:
      return real(static_cast<float>(d));
  }
  return {};
}

double Value::to_double() const {
  switch (type_) {
    case Type::Bool:
      return i_ != 0 ? 1.0 : 0.0;
    case Type::Int:
      return static_cast<double>(i_);
    case Type::Real:
      return static_cast<double>(r_);
  }
  return 0.0;
}

Value Value::convert_to(Type t) const {
  if (t == type_) return *this;
  switch (t) {
    case Type::Bool:
      return boolean(to_double() != 0.0);
    case Type::Int:
      return integer(type_ == Type::Real ? static_cast<std::int64_t>(std::llround(r_)) : i_);
    case Type::Real:
      return real(static_cast<float>(to_double()));
  }
  return *this;
}

std::string Value::to_string() const {
  switch (type_) {
    case Type::Bool:
      return i_ != 0 ? "TRUE" : "FALSE";
    case Type::Int:
      return std::to_string(i_);
    case Type::Real: {
      // Shortest decimal form that reads back to the same binary32.
      char buf[32];
      for (int prec = 6; prec <= 9; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, static_cast<double>(r_));
        if (std::strtof(buf, nullptr) == r_) break;
      }
      std::string s = buf;
      if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
      return s;
    }
  }
  return "?";
}

bool operator==(const Value& a, const Value& b) {
  if (a.type_ != b.type_) return false;
  return a.type_ == Type::Real ? a.r_ == b.r_ : a.i_ == b.i_;
}

std::strong_ordering operator<=>(const Value& a, const Value& b) {
  if (a.type_ != b.type_) return a.type_ <=> b.type_;
  if (a.type_ == Type::Real) {
    if (a.r_ < b.r_) return std::strong_ordering::less;
    if (b.r_ < a.r_) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }
  return a.i_ <=> b.i_;
}

}  // namespace cbi
