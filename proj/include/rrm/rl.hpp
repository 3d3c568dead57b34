#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rrm/environment.hpp"
#include "rrm/mdp.hpp"
#include "rrm/nn.hpp"
#include "rrm/policy.hpp"

namespace rrm {

struct Transition {
  std::vector<double> s;
  int a = 0;
  double r = 0.0;
  std::vector<double> s_next;
  bool done = false;

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Fixed-capacity ring buffer; once full the oldest transition is overwritten.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity = 100000);

  void push(Transition t);

  [[nodiscard]] std::size_t size() const { return fill_; }
  [[nodiscard]] std::size_t capacity() const { return capacity_; }

  /// Index 0 is the oldest stored transition.
  [[nodiscard]] const Transition& operator[](std::size_t i) const;

  /// Uniform with replacement.
  [[nodiscard]] std::vector<const Transition*> sample(std::size_t batch_size, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::size_t fill_ = 0;
  std::vector<Transition> slots_;
};

/// Column-major minibatch: one transition per column.
struct Batch {
  Eigen::MatrixXd states;
  Eigen::MatrixXd next_states;
  std::vector<int> actions;
  Eigen::VectorXd rewards;
  Eigen::VectorXd not_done;

  [[nodiscard]] int size() const { return static_cast<int>(actions.size()); }
};

Batch make_batch(std::span<const Transition* const> transitions, double reward_scale = 1.0);
Batch make_batch(std::span<const Transition> transitions, double reward_scale = 1.0);

enum class Algorithm { Dqn, Cql, QrDqn, Cqr };

Algorithm parse_algorithm(const std::string& name);
std::string algorithm_name(Algorithm algo);
bool is_distributional(Algorithm algo);

struct TrainConfig {
  double gamma = 0.99;
  double alpha = 1.0;
  int num_quantiles = 8;
  double learning_rate = 1e-5;
  int epochs = 100;
  int gradient_steps = 1000;
  int batch_size = 128;
  int target_sync_period = 500;
  double huber_kappa = 1.0;
  double reward_scale = 1.0;  // multiplies rewards before any loss sees them
  std::vector<int> hidden_layers{256, 256};
  std::uint64_t seed = 7;

  // online only
  int online_episodes = 150;
  std::size_t replay_capacity = 100000;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay_fraction = 0.3;
  int learning_starts = 1000;
  int train_every = 1;

  void validate() const;
};

struct LossResult {
  double value = 0.0;
  MlpParams grads;
  /// Smallest logsumexp - Q(s,a) gap seen (conservative losses only).
  double min_conservative_gap = std::numeric_limits<double>::infinity();
};

/// |tau - 1{u<0}| * Huber_kappa(u) / kappa.
double quantile_huber(double u, double tau, double kappa);

/// tau_j = (2j - 1) / (2I), j = 1..I.
std::vector<double> quantile_midpoints(int num_quantiles);

/// Numerically stable log(sum(exp(values))).
double log_sum_exp(std::span<const double> values);

LossResult dqn_loss(const Batch& batch, const Mlp& online, const Mlp& target, double gamma);
LossResult cql_loss(const Batch& batch, const Mlp& online, const Mlp& target, double gamma,
                    double alpha);
LossResult qrdqn_loss(const Batch& batch, const Mlp& online, const Mlp& target, double gamma,
                      int num_quantiles, double kappa = 1.0);
LossResult cqr_loss(const Batch& batch, const Mlp& online, const Mlp& target, double gamma,
                    double alpha, int num_quantiles, double kappa = 1.0);

LossResult algorithm_loss(Algorithm algo, const Batch& batch, const Mlp& online,
                          const Mlp& target, const TrainConfig& config);

/// Lowest index among the maxima.
int argmax_lowest(std::span<const double> values);

int epsilon_greedy(std::span<const double> q_values, double epsilon, Rng& rng);

/// Q(s, .) for one observation; quantile heads are averaged.
Eigen::VectorXd action_values(const Mlp& net, std::span<const double> observation,
                              int num_quantiles);

/// Network shape used for a given problem size and algorithm.
std::vector<int> network_dims(int obs_dim, int num_actions, int num_quantiles,
                              const std::vector<int>& hidden);

/// Greedy policy over a trained network.
class QPolicy final : public Policy {
 public:
  QPolicy(Mlp net, int num_quantiles);

  int act(const Environment& env, std::span<const double> observation, Rng& rng) override;
  [[nodiscard]] int greedy(std::span<const double> observation) const;

 private:
  Mlp net_;
  int num_quantiles_;
};

struct OnlineResult {
  Mlp net;
  std::vector<Transition> log;
  std::vector<double> episode_returns;
  std::vector<double> episode_scores;  // whatever the episode hook returns
  std::int64_t gradient_steps = 0;
};

/// Called after each training episode with the environment still holding the
/// finished episode; its return value is appended to `episode_scores`.
using EpisodeHook = std::function<double(int episode, const Mlp& net, EpisodicEnv& env)>;

/// Linear decay from epsilon_start to epsilon_end over the first
/// epsilon_decay_fraction of the online episodes.
double epsilon_at(const TrainConfig& config, int episode);

/// Environment seed of online training episode `episode`.
std::uint64_t train_episode_seed(const TrainConfig& config, int episode);

/// Epsilon-greedy DQN with replay memory and a periodically synced target
/// network. Every transition is logged in order.
OnlineResult train_online_dqn(EpisodicEnv& env, const TrainConfig& config,
                              const EpisodeHook& hook = {});

struct OfflineResult {
  Mlp net;
  std::vector<double> epoch_loss;
  std::vector<double> epoch_scores;
};

using EpochHook = std::function<double(int epoch, const Mlp& net)>;

/// E epochs of G minibatch gradient steps on a static dataset; the
/// environment is never touched.
OfflineResult train_offline(std::span<const Transition> dataset, int num_actions, Algorithm algo,
                            const TrainConfig& config, const EpochHook& hook = {});

struct EvaluationResult {
  std::vector<EpisodeMetrics> episodes;
  EpisodeMetrics mean;
};

using PolicyFactory = std::function<std::unique_ptr<Policy>()>;

/// Seed of test episode `index` under base seed `seed`.
std::uint64_t test_episode_seed(std::uint64_t seed, int index);

/// Plays `num_episodes` fresh episodes, each with its own environment copy
/// and policy instance; up to `threads` episodes run concurrently. Results
/// are reduced in episode order so they do not depend on `threads`.
EvaluationResult evaluate(const PolicyFactory& make_policy, const NetworkConfig& config,
                          int num_episodes, std::uint64_t seed, int threads = 1);

/// Plays one episode and returns its metrics; `on_slot` sees every slot.
using SlotHook = std::function<void(int slot, int action, const SlotOutcome& outcome)>;
EpisodeMetrics run_episode(Environment& env, Policy& policy, std::uint64_t episode_seed,
                           const SlotHook& on_slot = {});

}  // namespace rrm
