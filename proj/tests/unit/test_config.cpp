#include <doctest.h>

#include "klab/config.hpp"
#include "klab/csvio.hpp"
#include "klab/manifest.hpp"

#include <cstdio>
#include <fstream>

using namespace klab;

namespace {

std::string write_temp(const std::string& body) {
  const std::string path = "/tmp/klab_test_config.cfg";
  std::ofstream out(path);
  out << body;
  return path;
}

}  // namespace

TEST_CASE("defaults cover the whole schema") {
  const Config c = Config::defaults();
  CHECK(c.get_i("covariance.dimension") == 1);
  CHECK(c.get_f("covariance.sigma2") == doctest::Approx(0.5));
  CHECK(c.get_str("covariance.family") == "isotropic-scalar");
  CHECK(c.get_list("llt.probes").size() == 3);
  CHECK(c.get_u64("run.master_seed") == 12345);
  // every schema key resolves
  for (const auto& e : config_schema()) CHECK_NOTHROW(c.get_str(e.key));
}

TEST_CASE("file parsing, overrides, and rejection of unknown keys") {
  const auto path = write_temp(
      "# comment\n"
      "[covariance]\n"
      "dimension = 2\n"
      "family = incompressible  # inline comment\n"
      "[run]\n"
      "master_seed = 999\n");
  Config c = Config::from_file(path);
  CHECK(c.get_i("covariance.dimension") == 2);
  CHECK(c.get_str("covariance.family") == "incompressible");
  CHECK(c.get_u64("run.master_seed") == 999);

  c.set("llt.replicas", "32");
  CHECK(c.get_i("llt.replicas") == 32);
  CHECK_THROWS_AS(c.set("llt.bogus", "1"), ConfigError);
  CHECK_THROWS_AS(c.set("llt.replicas", "many"), ConfigError);

  const auto bad = write_temp("[covariance]\nwhatever = 3\n");
  CHECK_THROWS_AS(Config::from_file(bad), ConfigError);
  const auto bad2 = write_temp("dimension = 1\n");
  CHECK_THROWS_AS(Config::from_file(bad2), ConfigError);
}

TEST_CASE("assembled domain objects and dt default") {
  Config c = Config::defaults();
  const auto spec = c.covariance();
  CHECK(spec.dimension == 1);
  const auto g = c.grid();
  CHECK(g.n == 256);
  CHECK(c.run_dt() > 0.0);
  c.set("run.dt", "0.0078125");
  CHECK(c.run_dt() == doctest::Approx(0.0078125));
}

TEST_CASE("schema text lists every key") {
  const std::string text = Config::schema_text();
  for (const auto& e : config_schema()) {
    const auto dot = e.key.find('.');
    CHECK(text.find(e.key.substr(dot + 1)) != std::string::npos);
  }
}

TEST_CASE("manifest round trip") {
  RunManifest m;
  m.subcommand = "chi";
  m.config_path = "configs/scalar_d1.cfg";
  m.config = {{"covariance.nu", "1.0"}};
  m.master_seed = 31;
  m.workers = 2;
  m.outputs = {"out/chi_profile.csv"};
  m.metrics = {{"sup_error", 0.004}};
  m.wall_seconds = 1.5;
  const std::string path = "/tmp/klab_test_manifest.json";
  m.write(path);
  const auto back = RunManifest::load(path);
  CHECK(back.subcommand == "chi");
  CHECK(back.config.at("covariance.nu") == "1.0");
  CHECK(back.master_seed == 31);
  CHECK(back.metrics.at("sup_error") == doctest::Approx(0.004));
  std::remove(path.c_str());
}

TEST_CASE("csv formatting is deterministic") {
  CHECK(CsvWriter::format(0.5) == "0.5");
  CHECK(CsvWriter::format(1.0 / 3.0) == CsvWriter::format(1.0 / 3.0));
}
