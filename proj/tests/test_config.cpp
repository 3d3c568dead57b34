#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "rrm/config.hpp"

using namespace rrm;

TEST_CASE("profiles") {
  const NetworkConfig full = full_scale_config();
  CHECK(full.num_aps == 4);
  CHECK(full.num_ues == 24);
  CHECK(full.top_k == 3);
  CHECK(full.area_side == 50.0);
  CHECK(full.min_ap_ue_dist == 10.0);
  CHECK(full.min_ap_ap_dist == 1.0);
  CHECK(full.ue_speed == 1.0);
  CHECK(full.channel.pl_ref_db == 10.0);
  CHECK(full.channel.tx_power_dbm == 10.0);
  CHECK(full.slots_per_episode == 2000);
  CHECK(full.score_weight_sum == doctest::Approx(1.0 / 24.0));
  CHECK(full.score_weight_tail == 3.0);
  CHECK(full.fairness_exponent == 0.8);
  CHECK(desk_scale_config().slots_per_episode == 200);
}

TEST_CASE("key-value parsing") {
  const KeyValues kv = parse_key_values("# header\n num_aps = 2 \n\ntop_k=1 # trailing\n");
  CHECK(kv.size() == 2);
  CHECK(kv.at("num_aps") == "2");
  CHECK(kv.at("top_k") == "1");
  CHECK_THROWS_AS(parse_key_values("num_aps 2\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_key_values(" = 2\n"), std::invalid_argument);
}

TEST_CASE("overrides") {
  const NetworkConfig base = desk_scale_config();
  SUBCASE("mu_1 follows M unless given") {
    CHECK(apply_overrides(base, {{"num_ues", "6"}}).score_weight_sum == doctest::Approx(1.0 / 6));
    CHECK(apply_overrides(base, {{"num_ues", "6"}, {"score_weight_sum", "0.5"}}).score_weight_sum ==
          0.5);
  }
  SUBCASE("nested channel keys") {
    const NetworkConfig c = apply_overrides(base, {{"shadow_std_db", "4"}, {"obs_logw_scale", "3"}});
    CHECK(c.channel.shadow_std_db == 4.0);
    CHECK(c.obs.logw_scale == 3.0);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(apply_overrides(base, {{"bogus", "1"}}), std::invalid_argument);
    CHECK_THROWS_AS(apply_overrides(base, {{"num_aps", "two"}}), std::invalid_argument);
    CHECK_THROWS_AS(apply_overrides(base, {{"num_aps", "0"}}), std::invalid_argument);
    CHECK_THROWS_AS(apply_overrides(base, {{"pf_step", "0"}}), std::invalid_argument);
    CHECK_THROWS_AS(apply_overrides(base, {{"fairness_exponent", "1.5"}}), std::invalid_argument);
  }
}

TEST_CASE("serialisation roundtrip and hash") {
  NetworkConfig c = desk_scale_config();
  c.pf_step = 0.1 + 0.2;  // not representable in short decimal
  c.seed = 0xfffffffffffffffULL;
  const NetworkConfig back = apply_overrides(NetworkConfig{}, parse_key_values(serialize_config(c)));
  CHECK(serialize_config(back) == serialize_config(c));
  CHECK(config_hash(back) == config_hash(c));
  NetworkConfig d = c;
  d.ue_speed = 2.0;
  CHECK(config_hash(d) != config_hash(c));
  CHECK(hash_hex(0xabcULL) == "0000000000000abc");

  const auto path = std::filesystem::temp_directory_path() / "rrm_test_config.txt";
  {
    std::ofstream out(path);
    out << "num_aps = 2\ntop_k = 2\nnum_ues = 6\n";
  }
  const NetworkConfig loaded = load_config_file(path.string(), desk_scale_config());
  CHECK(loaded.num_aps == 2);
  CHECK(loaded.obs_dim() == 8);
  CHECK(loaded.num_actions() == 9);
  std::filesystem::remove(path);
  CHECK_THROWS(load_config_file(path.string(), NetworkConfig{}));
}

TEST_CASE("FNV-1a reference vectors") {
  CHECK(fnv1a64("", 0) == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar", 6) == 0x85944171f73967e8ULL);
}

TEST_CASE("seed mixing separates streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t base = 0; base < 20; ++base)
    for (std::uint64_t stream = 0; stream < 50; ++stream) seen.insert(mix_seed(base, stream));
  CHECK(seen.size() == 1000);
}
