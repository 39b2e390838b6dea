#include <doctest.h>

#include <fstream>
#include <string>

#include "helpers.hpp"
#include "sinoplace/errors.hpp"
#include "sinoplace/run_config.hpp"

using namespace sinoplace;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const BadConfig& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("run_config") {

TEST_CASE("defaults are valid") {
  const RunConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.pipeline.grid.size_cells == 120);
  CHECK(c.pipeline.n_theta == 120);
  CHECK(c.sampling_dist == 20.0);
  CHECK(c.pos_thresh == 10.0);
  CHECK(to_string(network_config_for(c)) == to_string(default_network_config()));
}

TEST_CASE("every listed key is settable") {
  RunConfig c;
  c.set("grid.cells", "64");
  c.set("grid.extent=35.5");
  c.set("ground.enabled", "false");
  c.set("train.milestones", "3,7");
  c.set("train.loss", "triplet");
  c.set("seed", "99");
  c.set("query.k", "3");
  CHECK(c.pipeline.grid.size_cells == 64);
  CHECK(c.pipeline.grid.extent == 35.5);
  CHECK_FALSE(c.pipeline.remove_ground);
  CHECK(c.train.lr_milestones == std::vector<std::size_t>{3, 7});
  CHECK(c.train.loss == LossKind::triplet);
  CHECK(c.seed == 99);
  CHECK(c.train.seed == 99);
  CHECK(c.top_k == 3);
  CHECK(RunConfig::keys().size() >= 25);
}

TEST_CASE("bad keys and values") {
  RunConfig c;
  CHECK_THROWS_AS(c.set("grid.size", "4"), BadConfig);
  CHECK_THROWS_AS(c.set("grid.cells", "-4"), BadConfig);
  CHECK_THROWS_AS(c.set("grid.cells", "12x"), BadConfig);
  CHECK_THROWS_AS(c.set("grid.extent", "wide"), BadConfig);
  CHECK_THROWS_AS(c.set("ground.enabled", "maybe"), BadConfig);
  CHECK_THROWS_AS(c.set("train.loss", "hinge"), BadConfig);
  CHECK_THROWS_AS(c.set("novalue"), BadConfig);
}

TEST_CASE("cross-field checks") {
  CHECK_FALSE(error_of("ground.z_min = 3\nground.z_max = 1\n").empty());
  CHECK_FALSE(error_of("sino.n_theta = 121").empty());
  CHECK_FALSE(error_of("db.sampling_dist = 0").empty());
  CHECK_FALSE(error_of("query.k = 0").empty());
  CHECK_FALSE(error_of("train.gamma = 2").empty());
}

TEST_CASE("config text parsing") {
  const RunConfig c = parse_run_config("# comment\n\n  sino.n_tau = 64  # trailing\neval.pos_thresh=12.5\n");
  CHECK(c.pipeline.n_tau == 64);
  CHECK(c.pos_thresh == 12.5);
  const std::string err = error_of("seed = 1\n\nbogus.key = 3\n");
  CHECK(err.find("line 3") != std::string::npos);
  CHECK(err.find("bogus.key") != std::string::npos);
}

TEST_CASE("config files") {
  testing::TempDir dir("cfg");
  {
    std::ofstream(dir / "run.cfg") << "train.epochs = 3\nnet.config = " << (dir / "net.txt").string() << "\n";
    std::ofstream(dir / "net.txt") << "layer 2 3 relu; layer 2 3 none; skip 0 1\n";
  }
  const RunConfig c = load_run_config(dir / "run.cfg");
  CHECK(c.train.epochs == 3);
  const NetworkConfig nc = network_config_for(c);
  CHECK(nc.layers.size() == 2);
  CHECK_THROWS_AS(load_run_config(dir / "missing.cfg"), IoError);
  RunConfig bad = c;
  bad.net_config_path = (dir / "nope.txt").string();
  CHECK_THROWS_AS(network_config_for(bad), IoError);
}

}  // TEST_SUITE
