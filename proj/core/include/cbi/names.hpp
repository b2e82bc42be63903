#pragma once

#include <string>
#include <string_view>

namespace cbi {

/// IEC identifiers are case-insensitive; keys are the upper-cased spelling.
std::string to_key(std::string_view name);

bool iequals(std::string_view a, std::string_view b);

struct KeyLess {
  using is_transparent = void;
  bool operator()(std::string_view a, std::string_view b) const;
};

}  // namespace cbi
