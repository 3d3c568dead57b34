#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "doctest.h"
#include "rrm/environment.hpp"
#include "rrm/units.hpp"

using namespace rrm;

namespace {

NetworkConfig small_config() {
  NetworkConfig c = desk_scale_config();
  c.area_side = 50.0;
  c.slots_per_episode = 30;
  return c;
}

// Largest R among the observed values with P[avg >= R] >= 0.95.
double brute_force_five_percentile(const std::vector<double>& rates) {
  double best = -1.0;
  for (double candidate : rates) {
    const auto count = std::count_if(rates.begin(), rates.end(),
                                     [&](double r) { return r >= candidate; });
    if (static_cast<double>(count) >= 0.95 * static_cast<double>(rates.size())) {
      best = std::max(best, candidate);
    }
  }
  return best;
}

}  // namespace

TEST_CASE("deployment") {
  SUBCASE("full scale satisfies every constraint") {
    NetworkConfig c = full_scale_config();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(seed);
      CHECK(topology_valid(deploy(c, rng), c));
    }
    c.area_side = 50.0;
    Rng rng(3);
    CHECK(topology_valid(deploy(c, rng), c));
  }
  SUBCASE("unconstrained single pair") {
    NetworkConfig c;
    c.num_aps = 1;
    c.num_ues = 1;
    c.top_k = 1;
    c.min_ap_ue_dist = 0.0;
    Rng rng(1);
    const Topology t = deploy(c, rng);
    CHECK(t.ap_positions.size() == 1);
    CHECK(t.ue_positions.size() == 1);
    CHECK(topology_valid(t, c));
  }
  SUBCASE("separation beyond the diagonal is infeasible") {
    NetworkConfig c;
    c.area_side = 10.0;
    c.min_ap_ue_dist = 10.0 * std::sqrt(2.0) + 0.1;
    Rng rng(1);
    CHECK_THROWS_AS(deploy(c, rng), std::runtime_error);
  }
  SUBCASE("too many APs for the AP spacing is infeasible") {
    NetworkConfig c;
    c.area_side = 10.0;
    c.num_aps = 50;
    c.min_ap_ap_dist = 9.0;
    c.min_ap_ue_dist = 0.0;
    Rng rng(1);
    CHECK_THROWS_AS(deploy(c, rng), std::runtime_error);
  }
}

TEST_CASE("association picks the strongest AP") {
  SUBCASE("single AP") {
    Eigen::MatrixXd g = Eigen::MatrixXd::Constant(5, 1, 1e-7);
    CHECK(associate(g) == std::vector<int>(5, 0));
  }
  SUBCASE("ties go to the lower index") {
    Eigen::MatrixXd g(1, 3);
    g << 1e-7, 2e-7, 2e-7;
    CHECK(associate(g) == std::vector<int>{1});
  }
  SUBCASE("random matrix against a brute-force argmax") {
    Rng rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
      Eigen::MatrixXd g(24, 4);
      for (int m = 0; m < 24; ++m)
        for (int n = 0; n < 4; ++n) g(m, n) = u(rng);
      const auto assoc = associate(g);
      for (int m = 0; m < 24; ++m) {
        int best = 0;
        for (int n = 0; n < 4; ++n)
          if (g(m, n) > g(m, best)) best = n;
        CHECK(assoc[m] == best);
      }
    }
  }
}

TEST_CASE("top-K selection") {
  SUBCASE("fewer associated UEs than K") {
    const std::vector<int> assoc{0, 1, 0};
    const std::vector<double> w{1.0, 2.0, 3.0};
    const auto lists = select_top_k(assoc, w, 2, 3);
    CHECK(lists[0] == std::vector<int>{2, 0});
    CHECK(lists[1] == std::vector<int>{1});
  }
  SUBCASE("sorted by weight, truncated") {
    const std::vector<int> assoc{0, 0, 0, 0};
    const std::vector<double> w{5.0, 1.0, 3.0, 2.0};
    CHECK(select_top_k(assoc, w, 1, 3)[0] == std::vector<int>{0, 2, 3});
  }
  SUBCASE("equal weights keep UE order") {
    const std::vector<int> assoc(6, 0);
    const std::vector<double> w(6, 1.0);
    CHECK(select_top_k(assoc, w, 1, 3)[0] == std::vector<int>{0, 1, 2});
  }
}

TEST_CASE("PF recursion") {
  SUBCASE("hand evaluation") {
    const PfUpdate u = update_pf(1.0, 2.0, 0.1, 1e-3);
    CHECK(u.smoothed_rate == doctest::Approx(1.9));
    CHECK(u.weight == doctest::Approx(1.0 / 1.9));
  }
  SUBCASE("unit step copies the rate") {
    CHECK(update_pf(3.25, 7.0, 1.0, 1e-3).smoothed_rate == 3.25);
  }
  SUBCASE("floor keeps weights bounded") {
    const PfUpdate u = update_pf(0.0, 1e-3, 0.5, 1e-3);
    CHECK(u.smoothed_rate == 1e-3);
    CHECK(u.weight == doctest::Approx(1000.0));
  }
  SUBCASE("geometric convergence to a constant rate") {
    Rng rng(4);
    std::uniform_real_distribution<double> u(0.01, 10.0), eta_dist(0.01, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
      const double c = u(rng), start = u(rng), eta = eta_dist(rng);
      double r = start;
      for (int t = 1; t <= 200; ++t) {
        r = update_pf(c, r, eta, 1e-3).smoothed_rate;
        CHECK(std::abs(r - c) <= std::pow(1.0 - eta, t) * std::abs(start - c) + 1e-12);
      }
      const PfUpdate last = update_pf(c, r, eta, 1e-3);
      CHECK(last.weight == 1.0 / last.smoothed_rate);
    }
  }
}

TEST_CASE("five percentile rate") {
  SUBCASE("constant rates") {
    const std::vector<double> r(24, 1.7);
    CHECK(five_percentile_rate(r) == 1.7);
  }
  SUBCASE("1..24 gives the second smallest") {
    std::vector<double> r(24);
    std::iota(r.begin(), r.end(), 1.0);
    CHECK(five_percentile_rate(r) == 2.0);
    CHECK(brute_force_five_percentile(r) == 2.0);
  }
  SUBCASE("M = 20") {
    std::vector<double> r(20);
    std::iota(r.begin(), r.end(), 0.5);
    CHECK(five_percentile_rate(r) == r[1]);
  }
  SUBCASE("empty input") {
    CHECK_THROWS_AS(five_percentile_rate(std::vector<double>{}), std::domain_error);
  }
  SUBCASE("agrees with the brute-force threshold scan") {
    Rng rng(77);
    std::uniform_int_distribution<int> size(1, 60);
    std::uniform_real_distribution<double> rate(0.0, 5.0);
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<double> r(size(rng));
      for (auto& x : r) x = rate(rng);
      if (trial % 3 == 0) r[0] = r.back();  // exercise ties
      CHECK(five_percentile_rate(r) == brute_force_five_percentile(r));
      CHECK(five_percentile_rate(r) <= *std::max_element(r.begin(), r.end()));
    }
  }
}

TEST_CASE("episode metrics") {
  SUBCASE("all zero") {
    const EpisodeMetrics m = episode_metrics(Eigen::MatrixXd::Zero(10, 24), 1.0 / 24, 3.0);
    CHECK(m.sum_rate == 0.0);
    CHECK(m.five_percentile_rate == 0.0);
    CHECK(m.r_score == 0.0);
  }
  SUBCASE("two UEs by hand") {
    Eigen::MatrixXd rates(2, 2);
    rates << 6.0, 1.0, 2.0, 3.0;  // averages (4, 2)
    const EpisodeMetrics m = episode_metrics(rates, 0.5, 3.0);
    CHECK(m.sum_rate == doctest::Approx(6.0));
    CHECK(m.five_percentile_rate == doctest::Approx(2.0));
    CHECK(m.r_score == doctest::Approx(9.0));
  }
  SUBCASE("no tail weight") {
    const std::vector<double> avg{1.0, 2.5, 0.25};
    const EpisodeMetrics m = metrics_from_average_rates(avg, 0.7, 0.0);
    CHECK(m.r_score == 0.7 * m.sum_rate);
  }
}

TEST_CASE("joint action encoding") {
  CHECK(encode_action(std::vector<int>{0, 0, 0, 0}, 3) == 0);
  CHECK(encode_action(std::vector<int>{1, 2, 3, 0}, 3) == 108);
  CHECK(decode_action(108, 4, 3) == JointAction{1, 2, 3, 0});
  for (int a = 0; a < 256; ++a) CHECK(encode_action(decode_action(a, 4, 3), 3) == a);
  CHECK_THROWS_AS(decode_action(256, 4, 3), std::domain_error);
  CHECK_THROWS_AS(decode_action(-1, 4, 3), std::domain_error);
  CHECK_THROWS_AS(encode_action(std::vector<int>{4, 0}, 3), std::domain_error);
}

TEST_CASE("environment dimensions") {
  NetworkConfig c = full_scale_config();
  CHECK(c.obs_dim() == 24);
  CHECK(c.num_actions() == 256);
  Environment env(c);
  Rng rng(1);
  CHECK(env.reset(rng).size() == 24);

  NetworkConfig tiny;
  tiny.num_aps = 1;
  tiny.top_k = 1;
  tiny.num_ues = 3;
  Environment env1(tiny);
  CHECK(env1.reset(rng).size() == 2);
  CHECK(env1.num_actions() == 2);
}

TEST_CASE("environment invariants along an episode") {
  NetworkConfig c = small_config();
  Environment env(c);
  Rng rng(8);
  env.reset(rng);
  std::uniform_int_distribution<int> pick(0, env.num_actions() - 1);
  while (!env.done()) {
    const EnvState& s = env.state();
    CHECK(s.association.size() == static_cast<std::size_t>(c.num_ues));
    std::set<int> seen;
    for (int n = 0; n < c.num_aps; ++n) {
      CHECK(s.top_k_lists[n].size() <= static_cast<std::size_t>(c.top_k));
      for (int ue : s.top_k_lists[n]) {
        CHECK(s.association[ue] == n);
        CHECK(seen.insert(ue).second);
      }
    }
    for (int m = 0; m < c.num_ues; ++m) {
      CHECK(s.pf_weights[m] == doctest::Approx(1.0 / s.pf_smoothed_rates[m]));
      CHECK(s.pf_weights[m] > 0.0);
    }
    const StepResult r = env.step(pick(rng), rng);
    CHECK(r.observation.size() == static_cast<std::size_t>(c.obs_dim()));
    CHECK(r.reward >= 0.0);
    CHECK(topology_valid(env.state().topology, c));
  }
  CHECK_THROWS_AS(env.step(0, rng), std::logic_error);
}

TEST_CASE("silent network earns nothing") {
  Environment env(small_config());
  Rng rng(3);
  env.reset(rng);
  const SlotOutcome out = env.step_joint(JointAction{0, 0, 0, 0}, rng);
  CHECK(out.reward == 0.0);
  CHECK(std::all_of(out.rates.begin(), out.rates.end(), [](double r) { return r == 0.0; }));
}

TEST_CASE("single AP reward is w^lambda times the SNR rate") {
  NetworkConfig c = small_config();
  c.num_aps = 1;
  c.num_ues = 4;
  c.top_k = 2;
  Environment env(c);
  Rng rng(12);
  env.reset(rng);
  const int ue = env.state().top_k_lists[0][0];
  const SlotOutcome out = env.step_joint(JointAction{1}, rng);
  const double snr = env.state().last_gains(ue, 0) * dbm_to_mw(c.channel.tx_power_dbm) /
                     dbm_to_mw(c.channel.noise_power_dbm);
  const double rate = std::log2(1.0 + snr);
  CHECK(out.rates[ue] == doctest::Approx(rate).epsilon(1e-12));
  const double w = env.state().pf_weights[ue];
  CHECK(out.reward == doctest::Approx(std::pow(w, c.fairness_exponent) * rate).epsilon(1e-12));
}

TEST_CASE("serving a lone AP's UE never lowers the slot reward") {
  NetworkConfig c = small_config();
  c.num_aps = 1;
  c.num_ues = 5;
  c.top_k = 3;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Environment served(c), silent(c);
    Rng a(seed), b(seed);
    served.reset(a);
    silent.reset(b);
    const double with = served.step(1, a).reward;
    const double without = silent.step(0, b).reward;
    CHECK(with >= without);
  }
}

TEST_CASE("out-of-list choices are treated as silent") {
  NetworkConfig c = small_config();
  c.num_aps = 2;
  c.num_ues = 3;
  c.top_k = 3;
  Environment env(c);
  Rng rng(2);
  env.reset(rng);
  const auto& lists = env.state().top_k_lists;
  const int short_ap = lists[0].size() < lists[1].size() ? 0 : 1;
  REQUIRE(lists[short_ap].size() < 3u);
  JointAction a{0, 0};
  a[short_ap] = 3;
  const SlotOutcome out = env.step_joint(a, rng);
  CHECK(out.served[short_ap] == -1);
  CHECK(out.reward == 0.0);
}

TEST_CASE("observation padding is zero") {
  NetworkConfig c = small_config();
  c.num_aps = 2;
  c.num_ues = 3;
  c.top_k = 3;
  Environment env(c);
  Rng rng(2);
  const auto obs = env.reset(rng);
  for (int n = 0; n < 2; ++n) {
    for (int k = static_cast<int>(env.state().top_k_lists[n].size()); k < 3; ++k) {
      CHECK(obs[2 * (n * 3 + k)] == 0.0);
      CHECK(obs[2 * (n * 3 + k) + 1] == 0.0);
    }
  }
}

TEST_CASE("seeded determinism") {
  NetworkConfig c = small_config();
  auto run = [&](std::uint64_t seed) {
    Environment env(c);
    Rng rng(seed);
    std::vector<double> trace = env.reset(rng);
    for (int t = 0; t < c.slots_per_episode; ++t) {
      const StepResult r = env.step((t * 37) % env.num_actions(), rng);
      trace.push_back(r.reward);
      trace.insert(trace.end(), r.observation.begin(), r.observation.end());
    }
    const EpisodeMetrics m = env.metrics();
    trace.push_back(m.r_score);
    return trace;
  };
  CHECK(run(5) == run(5));
  CHECK(run(5) != run(6));
}

TEST_CASE("metrics keep the Rscore identity") {
  NetworkConfig c = small_config();
  Environment env(c);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    env.reset(rng);
    while (!env.done()) env.step(static_cast<int>(seed * 13 % env.num_actions()), rng);
    const EpisodeMetrics m = env.metrics();
    CHECK(m.r_score == c.score_weight_sum * m.sum_rate + c.score_weight_tail * m.five_percentile_rate);
  }
}
