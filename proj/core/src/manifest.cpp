#include "klab/manifest.hpp"

#include <json.hpp>

#include <fstream>
#include <stdexcept>

namespace klab {

using nlohmann::json;

void RunManifest::write(const std::string& path) const {
  json j;
  j["subcommand"] = subcommand;
  j["config_path"] = config_path;
  j["config"] = config;
  j["master_seed"] = master_seed;
  j["workers"] = workers;
  j["version"] = version;
  j["outputs"] = outputs;
  j["metrics"] = metrics;
  j["wall_seconds"] = wall_seconds;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << j.dump(2) << "\n";
}

RunManifest RunManifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read manifest: " + path);
  json j;
  in >> j;
  RunManifest m;
  m.subcommand = j.value("subcommand", "");
  m.config_path = j.value("config_path", "");
  m.config = j.value("config", std::map<std::string, std::string>{});
  m.master_seed = j.value("master_seed", uint64_t(0));
  m.workers = j.value("workers", 0);
  m.version = j.value("version", "");
  m.outputs = j.value("outputs", std::vector<std::string>{});
  m.metrics = j.value("metrics", std::map<std::string, double>{});
  m.wall_seconds = j.value("wall_seconds", 0.0);
  return m;
}

}  // namespace klab
