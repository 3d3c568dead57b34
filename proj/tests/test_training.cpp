#include <cmath>

#include "doctest.h"
#include "rrm/baselines.hpp"
#include "rrm/environment.hpp"
#include "rrm/rl.hpp"
#include "support/chain_mdp.hpp"

using namespace rrm;
using testing::ChainMdp;

namespace {

Transition tagged(int i) {
  Transition t;
  t.s = {static_cast<double>(i)};
  t.s_next = {static_cast<double>(i + 1)};
  t.a = i % 2;
  t.r = i;
  return t;
}

TrainConfig small_offline_config() {
  TrainConfig c;
  c.gamma = 0.9;
  c.learning_rate = 1e-3;
  c.epochs = 6;
  c.gradient_steps = 500;
  c.batch_size = 32;
  c.target_sync_period = 100;
  c.hidden_layers = {32, 32};
  return c;
}

}  // namespace

TEST_CASE("replay memory") {
  ReplayMemory m(3);
  CHECK_THROWS_AS(ReplayMemory(0), std::invalid_argument);
  Rng rng(1);
  CHECK_THROWS_AS((void)m.sample(1, rng), std::logic_error);
  for (int i = 0; i < 2; ++i) m.push(tagged(i));
  CHECK(m.size() == 2);
  CHECK(m[0] == tagged(0));
  for (int i = 2; i < 5; ++i) m.push(tagged(i));
  CHECK(m.size() == 3);
  CHECK(m[0] == tagged(2));
  CHECK(m[2] == tagged(4));
  CHECK_THROWS_AS((void)m[3], std::out_of_range);
  for (const Transition* t : m.sample(100, rng)) CHECK(t->r >= 2.0);
}

TEST_CASE("make_batch layout") {
  std::vector<Transition> ts{tagged(3), tagged(4)};
  ts[1].done = true;
  const Batch b = make_batch(std::span<const Transition>(ts), 0.5);
  CHECK(b.states.rows() == 1);
  CHECK(b.states.cols() == 2);
  CHECK(b.states(0, 1) == 4.0);
  CHECK(b.next_states(0, 0) == 4.0);
  CHECK(b.rewards(1) == 2.0);
  CHECK(b.not_done(0) == 1.0);
  CHECK(b.not_done(1) == 0.0);
  CHECK(b.actions == std::vector<int>{1, 0});
  ts[1].s.push_back(0.0);
  CHECK_THROWS_AS(make_batch(std::span<const Transition>(ts)), std::invalid_argument);
}

TEST_CASE("action selection") {
  CHECK(argmax_lowest(std::vector<double>{1.0, 3.0, 3.0}) == 1);
  CHECK_THROWS_AS(argmax_lowest(std::vector<double>{}), std::domain_error);
  Rng rng(2);
  const std::vector<double> q{0.0, 1.0, 0.5, 0.2};
  for (int i = 0; i < 100; ++i) CHECK(epsilon_greedy(q, 0.0, rng) == 1);
  int greedy = 0;
  for (int i = 0; i < 40000; ++i) greedy += epsilon_greedy(q, 0.4, rng) == 1;
  CHECK(greedy / 40000.0 == doctest::Approx(0.6 + 0.4 / 4).epsilon(0.02));
  CHECK_THROWS_AS(epsilon_greedy(q, 1.5, rng), std::domain_error);

  Mlp net = Mlp::zeros({2, 6});
  net.params().layers[0].bias << 1, 3, 0, 0, 2, 2;  // two actions, three quantiles
  const std::vector<double> obs{0.0, 0.0};
  const Eigen::VectorXd v = action_values(net, obs, 3);
  CHECK(v(0) == doctest::Approx(4.0 / 3));
  CHECK(v(1) == doctest::Approx(4.0 / 3));
  CHECK(QPolicy(net, 3).greedy(obs) == 0);
}

TEST_CASE("epsilon schedule") {
  TrainConfig c;
  c.online_episodes = 100;
  c.epsilon_decay_fraction = 0.3;
  CHECK(epsilon_at(c, 0) == 1.0);
  CHECK(epsilon_at(c, 15) == doctest::Approx(1.0 - 0.95 / 2));
  CHECK(epsilon_at(c, 30) == doctest::Approx(0.05));
  CHECK(epsilon_at(c, 99) == doctest::Approx(0.05));
  c.epsilon_decay_fraction = 0.0;
  CHECK(epsilon_at(c, 0) == 0.05);
}

TEST_CASE("network dimensions") {
  CHECK(network_dims(24, 256, 8, {256, 256}) == std::vector<int>{24, 256, 256, 2048});
  CHECK(network_dims(24, 256, 1, {256, 256}) == std::vector<int>{24, 256, 256, 256});
}

TEST_CASE("value iteration oracle") {
  const ChainMdp mdp;
  const auto q = mdp.optimal_q(0.9);
  CHECK(q[2][1] == doctest::Approx(1.0));
  CHECK(q[1][1] == doctest::Approx(0.9));
  CHECK(q[0][1] == doctest::Approx(0.81));
  CHECK(q[0][0] == doctest::Approx(0.85));
}

TEST_CASE("offline learners recover the chain optimum") {
  const ChainMdp mdp;
  const auto data = mdp.full_coverage({0, 1, 1}, 3, 1);
  const auto q = mdp.optimal_q(0.9);
  for (auto algo : {Algorithm::Dqn, Algorithm::Cql, Algorithm::QrDqn, Algorithm::Cqr}) {
    CAPTURE(algorithm_name(algo));
    const OfflineResult r = train_offline(data, 2, algo, small_offline_config());
    const int quantiles = is_distributional(algo) ? 8 : 1;
    CHECK(r.epoch_loss.size() == 6);
    for (int s = 0; s < 3; ++s) {
      const auto obs = ChainMdp::one_hot(s);
      const Eigen::VectorXd v = action_values(r.net, obs, quantiles);
      CHECK((v(1) > v(0)) == (q[s][1] > q[s][0]));
    }
  }
}

TEST_CASE("offline training is deterministic and validates input") {
  const ChainMdp mdp;
  const auto data = mdp.full_coverage({0, 1, 1}, 1, 1);
  TrainConfig c = small_offline_config();
  c.epochs = 2;
  c.gradient_steps = 50;
  int hook_calls = 0;
  const auto a = train_offline(data, 2, Algorithm::Cqr, c, [&](int, const Mlp&) {
    ++hook_calls;
    return 0.0;
  });
  const auto b = train_offline(data, 2, Algorithm::Cqr, c);
  CHECK(a.net == b.net);
  CHECK(a.epoch_loss == b.epoch_loss);
  CHECK(hook_calls == 2);
  c.seed = 8;
  CHECK_FALSE(train_offline(data, 2, Algorithm::Cqr, c).net == a.net);
  CHECK_THROWS_AS(train_offline(std::vector<Transition>{}, 2, Algorithm::Dqn, c),
                  std::invalid_argument);
  CHECK_THROWS_AS(train_offline(data, 1, Algorithm::Dqn, c), std::invalid_argument);
}

TEST_CASE("online DQN on the chain") {
  ChainMdp mdp;
  TrainConfig c;
  c.gamma = 0.9;
  c.learning_rate = 1e-3;
  c.online_episodes = 1500;
  c.learning_starts = 64;
  c.batch_size = 32;
  c.target_sync_period = 100;
  c.hidden_layers = {32};
  c.epsilon_decay_fraction = 0.5;
  const OnlineResult a = train_online_dqn(mdp, c);
  const OnlineResult b = train_online_dqn(mdp, c);
  CHECK(a.net == b.net);
  CHECK(a.log == b.log);
  CHECK(a.episode_returns.size() == 1500);
  CHECK(a.gradient_steps > 0);
  const auto q = mdp.optimal_q(0.9);
  for (int s = 0; s < 3; ++s) {
    const Eigen::VectorXd v = action_values(a.net, ChainMdp::one_hot(s), 1);
    CHECK((v(1) > v(0)) == (q[s][1] > q[s][0]));
  }
}

TEST_CASE("evaluation does not depend on the thread count") {
  NetworkConfig cfg = desk_scale_config();
  cfg.slots_per_episode = 20;
  auto make = [] { return std::make_unique<BaselinePolicy>(BaselineKind::ItLinQ); };
  const EvaluationResult one = evaluate(make, cfg, 6, 3, 1);
  const EvaluationResult three = evaluate(make, cfg, 6, 3, 3);
  REQUIRE(one.episodes.size() == 6);
  for (int i = 0; i < 6; ++i) CHECK(one.episodes[i].r_score == three.episodes[i].r_score);
  CHECK(one.mean.r_score == three.mean.r_score);
  CHECK(test_episode_seed(3, 0) != test_episode_seed(3, 1));
}

TEST_CASE("every policy faces the same channel trajectory") {
  NetworkConfig cfg = desk_scale_config();
  cfg.slots_per_episode = 30;
  auto trajectory = [&](BaselineKind kind) {
    Environment env(cfg);
    BaselinePolicy policy(kind);
    std::vector<double> gains;
    run_episode(env, policy, 99, [&](int, int, const SlotOutcome&) {
      const auto& g = env.state().last_gains;
      gains.insert(gains.end(), g.data(), g.data() + g.size());
    });
    return gains;
  };
  const auto random = trajectory(BaselineKind::RandomWalk);
  CHECK(random == trajectory(BaselineKind::Tdm));
  CHECK(random == trajectory(BaselineKind::ItLinQ));
}
