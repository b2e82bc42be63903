#pragma once

#include <string>

#include "cbi/config.hpp"
#include "cbi/consolidator.hpp"
#include "cbi/exec.hpp"
#include "cbi/stlang.hpp"

namespace test {

inline std::string source_path(const std::string& rel) { return std::string(CBI_SOURCE_DIR) + "/" + rel; }

inline cbi::StModel mixing_model() { return cbi::consolidate(cbi::load_manifest(source_path("data/mixing/manifest.json"))); }

inline std::string wrap(const std::string& decls, const std::string& body, const std::string& name = "p",
                        const std::string& interval = "T#1s") {
  return "PROGRAM " + name + "\n" + decls + "\n" + body + "\nEND_PROGRAM\n" +
         "CONFIGURATION C\n  RESOURCE R ON PLC\n    TASK Main(INTERVAL := " + interval +
         ", PRIORITY := 0);\n    PROGRAM I WITH Main : " + name + ";\n  END_RESOURCE\nEND_CONFIGURATION\n";
}

inline cbi::StModel model_of(const std::string& source) {
  return cbi::consolidate({cbi::PlcSource{"p", cbi::parse_program(source)}});
}

}  // namespace test
