#pragma once

#include <filesystem>
#include <string>

namespace gtsim {

// Create the parent directory of an output path if it does not exist yet.
inline void ensure_parent_dir(const std::string& path) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
}

}  // namespace gtsim
