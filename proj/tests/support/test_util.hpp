#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "protoverb/encoder.hpp"
#include "protoverb/losses.hpp"

namespace protoverb::testing {

inline Vector to_eigen(const Vec& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())); }

inline ClassGroups to_eigen(const Groups& groups) {
  ClassGroups out(groups.size());
  for (std::size_t n = 0; n < groups.size(); ++n) {
    for (const auto& v : groups[n]) out[n].push_back(to_eigen(v));
  }
  return out;
}

inline PrototypeSet to_prototypes(const std::vector<Vec>& rows) {
  PrototypeSet set;
  set.prototypes.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t n = 0; n < rows.size(); ++n) {
    for (std::size_t i = 0; i < rows[n].size(); ++i) set.prototypes(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i)) = rows[n][i];
  }
  return set;
}

inline Vec unit(std::size_t d, std::size_t axis, double sign = 1.0) {
  Vec v(d, 0.0);
  v[axis] = sign;
  return v;
}

// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("protoverb-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path data_file(const std::string& name) {
  return std::filesystem::path(PROTOVERB_DATA_DIR) / name;
}

}  // namespace protoverb::testing
