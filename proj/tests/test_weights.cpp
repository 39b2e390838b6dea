#include <doctest.h>

#include <fstream>

#include "helpers.hpp"
#include "sinoplace/errors.hpp"
#include "sinoplace/weights_io.hpp"

using namespace sinoplace;

TEST_SUITE("weights") {

TEST_CASE("file round trip is exact") {
  testing::TempDir dir("weights");
  NetworkConfig cfg = default_network_config();
  cfg.aggregation = Aggregation::gap;
  Network net = init_network(cfg, 42);
  net.layers[1].kernel.bias[3] = 0.125;
  save_network(dir / "w.drnw", net);
  const Network back = load_network(dir / "w.drnw");
  CHECK(back == net);
  CHECK(network_fingerprint(back) == network_fingerprint(net));
  const auto a = read_file_bytes(dir / "w.drnw");
  save_network(dir / "w2.drnw", back);
  CHECK(read_file_bytes(dir / "w2.drnw") == a);
}

TEST_CASE("header layout") {
  const auto bytes = serialize_network(identity_network(Aggregation::gmp));
  REQUIRE(bytes.size() == 4 + 2 + 2 + (12 + 1 + 4 + 4) + 1 + 4);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "DRNW");
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0);
  CHECK(bytes[6] == 1);
  CHECK(bytes[8] == 1);   // c_out
  CHECK(bytes[20] == 0);  // activation none
  CHECK(bytes[29] == static_cast<std::uint8_t>(Aggregation::gmp));
}

TEST_CASE("fingerprint tracks weights") {
  Network a = init_network(default_network_config(), 1);
  Network b = a;
  b.layers[0].kernel.weights[0] += 0.5;
  CHECK(network_fingerprint(a) != network_fingerprint(b));
  CHECK(network_fingerprint(a) == wire::fnv1a64(serialize_network(a)));
  const std::vector<std::uint8_t> empty;
  CHECK(wire::fnv1a64(empty) == 0xcbf29ce484222325ULL);
  const std::vector<std::uint8_t> one{'a'};
  CHECK(wire::fnv1a64(one) == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("corrupted weights are rejected") {
  testing::TempDir dir("weights");
  const auto good = serialize_network(init_network(default_network_config(), 3));
  auto bad_magic = good;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(deserialize_network(bad_magic), CorruptFile);
  auto bad_version = good;
  bad_version[4] = 9;
  CHECK_THROWS_AS(deserialize_network(bad_version), CorruptFile);
  for (std::size_t cut : {std::size_t{3}, std::size_t{10}, good.size() / 2, good.size() - 1}) {
    const std::vector<std::uint8_t> t(good.begin(), good.begin() + static_cast<long>(cut));
    CHECK_THROWS_AS(deserialize_network(t), CorruptFile);
  }
  auto bad_act = good;
  bad_act[8 + 12] = 7;
  CHECK_THROWS_AS(deserialize_network(bad_act), CorruptFile);
  write_file_bytes(dir / "t.drnw", std::vector<std::uint8_t>(good.begin(), good.begin() + 40));
  CHECK_THROWS_AS(load_network(dir / "t.drnw"), CorruptFile);
  CHECK_THROWS_AS(load_network(dir / "missing.drnw"), IoError);
  auto longer = good;
  longer.push_back(0);
  write_file_bytes(dir / "long.drnw", longer);
  CHECK_THROWS_AS(load_network(dir / "long.drnw"), CorruptFile);
}

}
