#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace klab {

inline constexpr const char* kVersion = "0.1.0";

// Machine-readable record of one CLI run: resolved config, seed, outputs and
// headline metrics. Re-running with the same manifest inputs reproduces the
// CSV outputs byte for byte.
struct RunManifest {
  std::string subcommand;
  std::string config_path;
  std::map<std::string, std::string> config;
  uint64_t master_seed = 0;
  int workers = 0;
  std::string version = kVersion;
  std::vector<std::string> outputs;
  std::map<std::string, double> metrics;
  double wall_seconds = 0.0;

  void write(const std::string& path) const;
  static RunManifest load(const std::string& path);
};

}  // namespace klab
