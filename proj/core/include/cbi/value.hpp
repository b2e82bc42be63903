#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace cbi {

/// Elementary ST types in the supported subset. REAL is IEC binary32.
enum class Type : std::uint8_t { Bool, Int, Real };

std::string_view to_string(Type t);
std::optional<Type> parse_type(std::string_view upper_name);

inline bool is_numeric(Type t) { return t != Type::Bool; }

/// A typed scalar as held by the interpreter.
class Value {
 public:
  Value() : type_(Type::Bool), i_(0) {}

  static Value boolean(bool b) {
    Value v;
    v.type_ = Type::Bool;
    v.i_ = b ? 1 : 0;
    return v;
  }
  static Value integer(std::int64_t i) {
    Value v;
    v.type_ = Type::Int;
    v.i_ = i;
    return v;
  }
  static Value real(float r) {
    Value v;
    v.type_ = Type::Real;
    v.r_ = r;
    return v;
  }

  /// Default (zero) value of a type, as for an uninitialised IEC variable.
  static Value zero(Type t);

  /// Converts a historian/snapshot number to a value of type `t`:
  /// BOOL is `d != 0`, INT rounds to nearest, REAL rounds to binary32.
  static Value from_double(Type t, double d);

  Type type() const { return type_; }
  bool as_bool() const { return i_ != 0; }
  std::int64_t as_int() const { return i_; }
  float as_real() const { return r_; }

  /// Numeric view: BOOL as 0/1, INT exact up to 2^53.
  double to_double() const;

  /// Value converted to `t` following the implicit conversions the type
  /// checker admits (INT widens to REAL; 0/1 literals narrow to BOOL).
  Value convert_to(Type t) const;

  std::string to_string() const;

  friend bool operator==(const Value& a, const Value& b);
  friend std::strong_ordering operator<=>(const Value& a, const Value& b);

 private:
  Type type_;
  union {
    std::int64_t i_;
    float r_;
  };
};

}  // namespace cbi
