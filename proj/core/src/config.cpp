#include "klab/config.hpp"

#include "klab/flow.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace klab {

const std::vector<SchemaEntry>& config_schema() {
  static const std::vector<SchemaEntry> schema = {
      {"covariance.dimension", "int", "1", "spatial dimension d (1 or 2 on the grid)"},
      {"covariance.nu", "float", "1.0", "molecular diffusivity nu > 0"},
      {"covariance.family", "str", "isotropic-scalar",
       "kernel family: isotropic-scalar | incompressible | potential"},
      {"covariance.sigma2", "float", "0.5", "kernel amplitude, tr R(0) = d sigma2"},
      {"covariance.corr_length", "float", "1.0", "correlation length l"},
      {"covariance.support_radius", "float", "4.0",
       "effective support M of R (>= 4 l); R is treated as zero beyond it"},
      {"grid.n", "int", "256", "grid points per side (power of two)"},
      {"grid.box_length", "float", "64", "periodic box side L (>= 8 M, dx <= l/4)"},
      {"zgrid.n", "int", "512", "separation-grid points per side"},
      {"zgrid.box_length", "float", "64", "separation-grid box side"},
      {"run.master_seed", "u64", "12345", "master seed; all streams derive from it"},
      {"run.workers", "int", "0", "worker threads; 0 = KLAB_WORKERS env or hardware"},
      {"run.dt", "float", "0",
       "time step; 0 = min(dx^2/(4 d lambda_max), (dx/(4 sigma))^2)"},
      {"run.out_dir", "str", "out", "output directory for CSVs and manifests"},
      {"synth.draws", "int", "10000", "field draws for the statistics checks"},
      {"synth.dt", "float", "0.01", "time step used for the synthesis checks"},
      {"synth.lags", "list", "0,1,2,4", "covariance test lags in units of corr_length"},
      {"annealed.replicas", "int", "100", "environments for the annealed law check"},
      {"annealed.particles", "int", "10000", "particles per environment"},
      {"annealed.t", "float", "1.0", "horizon of the annealed covariance check"},
      {"quenched.particles", "int", "100000", "particles for the duality oracle"},
      {"quenched.t", "float", "1.0", "horizon of the duality oracle"},
      {"quenched.bandwidth", "float", "0.125", "KDE bandwidth (>= 2 dx)"},
      {"quenched.mass_steps", "int", "10000", "steps of the mass-conservation run"},
      {"quenched.treg_steps", "int", "10", "delta data regularized as G at treg_steps*dt"},
      {"chi.dt", "float", "0.001", "time step of the separation-PDE solver"},
      {"chi.tol", "float", "1e-6", "stationarity stop: sup change per unit time"},
      {"chi.t_budget", "float", "4096", "abort the invariant-density solve after this time"},
      {"chi.slope_times", "list", "8,16,32,64", "horizons of the convergence-rate fit"},
      {"chi.slope_box", "float", "256", "box used for the rate fit (suppresses the torus mass factor)"},
      {"chi.slope_n", "int", "2048", "grid for the rate fit"},
      {"corrector.burn_in", "float", "64", "burn-in M in time units (heuristic floor: 10 l^2/nu)"},
      {"corrector.replicas", "int", "200", "environments for the corrector statistics"},
      {"corrector.separations", "list", "0,0.5,1,2,4", "two-point separations (length units)"},
      {"corrector.base_points", "int", "6",
       "base points per replica for the two-point estimator (0 = every node); "
       "few points keep the burn-in truncation below half the MC error"},
      {"corrector.lags", "list", "0,1,2,4,8", "time-correlation lags in units of l^2/nu"},
      {"moment_cross.replicas", "int", "200", "environments for the MC-vs-PDE oracle"},
      {"moment_cross.pairs", "int", "500", "particle pairs per environment"},
      {"moment_cross.s0", "float", "0.5", "initial separation std"},
      {"moment_cross.t", "float", "4", "horizon of the MC-vs-PDE oracle"},
      {"moment_cross.pde_dt", "float", "0.001", "separation-PDE time step"},
      {"moment_cross.bandwidth", "float", "0.25", "KDE bandwidth for the separation cloud"},
      {"envelope.times", "list", "1,2,4,8", "times of the Gaussian-envelope check"},
      {"envelope.bump_var", "float", "0.0625", "variance of the initial bump"},
      {"envelope.dt", "float", "0.001", "time step of the envelope run"},
      {"llt.ladder_base", "float", "8", "first observation time of the dyadic ladder"},
      {"llt.ladder_points", "int", "4", "ladder length (t, 2t, 4t, ...)"},
      {"llt.beta", "float", "0", "noise layer exponent; 0 = 2/3 (d=1) or d/(d+2) (d>=2)"},
      {"llt.replicas", "int", "200", "environments per ladder"},
      {"llt.probes", "list", "0,0.5,1", "probe points as multiples of sqrt(lambda_max t)"},
      {"llt.c_bulk", "float", "0.1", "diffusive-bulk constant in x.Sigma^-1 x <= c t log t"},
      {"llt.treg_steps", "int", "10", "delta regularization of the full solution"},
      {"llt.mode", "str", "full", "full | clt (clt skips the conditioning runs)"},
  };
  return schema;
}

namespace {

const SchemaEntry& entry_for(const std::string& key) {
  for (const auto& e : config_schema())
    if (e.key == key) return e;
  throw ConfigError("unknown config key: '" + key + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::defaults() {
  Config c;
  for (const auto& e : config_schema()) c.values_[e.key] = e.def;
  return c;
}

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  Config c = defaults();
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(path + ":" + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty())
      throw ConfigError(path + ":" + std::to_string(lineno) + ": key outside any [section]");
    c.set(section + "." + key, value);
  }
  return c;
}

void Config::set(const std::string& key, const std::string& value) {
  const SchemaEntry& e = entry_for(key);
  // type check now so errors point at the config, not at first use
  if (e.type == "int" || e.type == "u64") {
    char* end = nullptr;
    (void)std::strtoull(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0')
      throw ConfigError("config key " + key + ": expected an integer, got '" + value + "'");
  } else if (e.type == "float") {
    char* end = nullptr;
    (void)std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0')
      throw ConfigError("config key " + key + ": expected a number, got '" + value + "'");
  } else if (e.type == "list") {
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      char* end = nullptr;
      const std::string t = trim(item);
      (void)std::strtod(t.c_str(), &end);
      if (end == t.c_str() || *end != '\0')
        throw ConfigError("config key " + key + ": expected a comma list of numbers");
    }
  }
  values_[key] = value;
}

std::string Config::get_str(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key: '" + key + "'");
  return it->second;
}

double Config::get_f(const std::string& key) const { return std::strtod(get_str(key).c_str(), nullptr); }
long Config::get_i(const std::string& key) const { return std::strtol(get_str(key).c_str(), nullptr, 10); }
uint64_t Config::get_u64(const std::string& key) const {
  return std::strtoull(get_str(key).c_str(), nullptr, 10);
}

std::vector<double> Config::get_list(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(get_str(key));
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::strtod(trim(item).c_str(), nullptr));
  return out;
}

CovarianceSpec Config::covariance() const {
  CovarianceSpec s;
  s.dimension = int(get_i("covariance.dimension"));
  s.nu = get_f("covariance.nu");
  s.family = kernel_family_from_string(get_str("covariance.family"));
  s.sigma2 = get_f("covariance.sigma2");
  s.corr_length = get_f("covariance.corr_length");
  s.support_radius = get_f("covariance.support_radius");
  s.validate();
  return s;
}

Grid Config::grid() const {
  Grid g;
  g.dim = int(get_i("covariance.dimension"));
  g.n = int(get_i("grid.n"));
  g.box_length = get_f("grid.box_length");
  return g;
}

Grid Config::zgrid() const {
  Grid g;
  g.dim = int(get_i("covariance.dimension"));
  g.n = int(get_i("zgrid.n"));
  g.box_length = get_f("zgrid.box_length");
  return g;
}

double Config::run_dt() const {
  const double dt = get_f("run.dt");
  if (dt > 0.0) return dt;
  return default_dt(covariance(), grid());
}

std::string Config::schema_text() {
  std::ostringstream out;
  out << "Configuration schema (INI sections; every key with its default).\n"
      << "Unknown keys are rejected; '#' starts a comment.\n\n";
  std::string section;
  for (const auto& e : config_schema()) {
    const std::string sec = e.key.substr(0, e.key.find('.'));
    if (sec != section) {
      section = sec;
      out << "[" << section << "]\n";
    }
    out << "  " << e.key.substr(sec.size() + 1) << " = " << e.def << "\n      (" << e.type
        << ") " << e.doc << "\n";
  }
  return out.str();
}

}  // namespace klab
