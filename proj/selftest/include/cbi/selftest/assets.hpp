#pragma once

// Data files compiled into the binary, keyed by their path in the source
// tree ("data/plant/plc1.st").

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cbi/config.hpp"

namespace cbi::selftest {

std::optional<std::string_view> asset(std::string_view path);
std::vector<std::string> asset_names();

/// Reads `<dir>/<relative>` from the embedded assets; throws IoError.
FileReader asset_reader(const std::string& dir);

}  // namespace cbi::selftest
