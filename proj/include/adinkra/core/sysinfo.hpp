#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

namespace adinkra::core {

// Peak resident set size of this process in bytes (VmHWM), or 0 when the
// proc interface is unavailable.
inline std::int64_t peak_rss_bytes() {
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("VmHWM:", 0) == 0) {
      std::istringstream fields(line.substr(6));
      std::int64_t kb = 0;
      fields >> kb;
      return kb * 1024;
    }
  }
  return 0;
}

}  // namespace adinkra::core
