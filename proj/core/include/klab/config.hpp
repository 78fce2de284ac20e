#pragma once

#include "klab/covariance.hpp"
#include "klab/grid.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace klab {

// Flat sectioned key-value configuration with a closed schema: every key has
// a type, a default and a one-line doc; unknown keys are rejected. The full
// key is "section.key".
struct SchemaEntry {
  std::string key;
  std::string type;  // int | float | u64 | str | list
  std::string def;
  std::string doc;
};

const std::vector<SchemaEntry>& config_schema();

class Config {
 public:
  static Config defaults();
  // INI-style file: [section], key = value, '#' comments. Unknown keys or
  // malformed lines raise ConfigError.
  static Config from_file(const std::string& path);

  void set(const std::string& key, const std::string& value);  // schema-checked

  std::string get_str(const std::string& key) const;
  double get_f(const std::string& key) const;
  long get_i(const std::string& key) const;
  uint64_t get_u64(const std::string& key) const;
  std::vector<double> get_list(const std::string& key) const;

  const std::map<std::string, std::string>& snapshot() const { return values_; }

  // Assembled domain objects.
  CovarianceSpec covariance() const;
  Grid grid() const;
  Grid zgrid() const;
  // run.dt, or the conservative default when run.dt == 0.
  double run_dt() const;

  // Rendered schema documentation (shipped as configs/SCHEMA.txt).
  static std::string schema_text();

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace klab
