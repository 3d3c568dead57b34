#include "rrm/rl.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace rrm {

namespace {

// Softmax over one column minus the one-hot of `action`; this is the
// gradient of logsumexp(q) - q[action].
void add_conservative_grad(const Eigen::MatrixXd& values, int col, int action, int stride,
                           int offset, int num_actions, double scale, Eigen::MatrixXd& grad,
                           double& gap_out) {
  double top = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < num_actions; ++a) top = std::max(top, values(a * stride + offset, col));
  double total = 0.0;
  for (int a = 0; a < num_actions; ++a) total += std::exp(values(a * stride + offset, col) - top);
  const double lse = top + std::log(total);
  for (int a = 0; a < num_actions; ++a) {
    grad(a * stride + offset, col) +=
        scale * std::exp(values(a * stride + offset, col) - lse);
  }
  grad(action * stride + offset, col) -= scale;
  gap_out = lse - values(action * stride + offset, col);
}

void check_batch(const Batch& batch, const Mlp& online, const Mlp& target) {
  if (batch.size() == 0) throw std::invalid_argument("loss: empty batch");
  if (online.layer_dims() != target.layer_dims()) {
    throw std::invalid_argument("loss: online and target networks differ in shape");
  }
}

// Bellman squared error; `scale` multiplies both value and gradient.
double add_td_squared(const Batch& batch, const Eigen::MatrixXd& q, const Eigen::MatrixXd& next_q,
                      double gamma, double scale, Eigen::MatrixXd& grad) {
  const int b_count = batch.size();
  double loss = 0.0;
  for (int b = 0; b < b_count; ++b) {
    const double bootstrap = next_q.col(b).maxCoeff();
    const double y = batch.rewards(b) + gamma * batch.not_done(b) * bootstrap;
    const double diff = y - q(batch.actions[b], b);
    loss += diff * diff;
    grad(batch.actions[b], b) += -2.0 * diff * scale / b_count;
  }
  return scale * loss / b_count;
}

double quantile_huber_grad(double u, double tau, double kappa) {
  const double weight = std::abs(tau - (u < 0.0 ? 1.0 : 0.0));
  const double huber_grad = std::abs(u) <= kappa ? u : kappa * (u > 0.0 ? 1.0 : -1.0);
  return weight * huber_grad / kappa;
}

// Quantile regression loss; returns dL/dtheta in `grad` scaled by `scale`.
double add_quantile_regression(const Batch& batch, const Eigen::MatrixXd& theta,
                               const Eigen::MatrixXd& next_theta, double gamma, int num_quantiles,
                               double kappa, double scale, Eigen::MatrixXd& grad) {
  const int b_count = batch.size();
  const int quantiles = num_quantiles;
  const int actions = static_cast<int>(theta.rows()) / quantiles;
  const std::vector<double> taus = quantile_midpoints(quantiles);
  const double norm = scale / (static_cast<double>(quantiles) * quantiles * b_count);
  std::vector<double> targets(quantiles);
  double loss = 0.0;
  for (int b = 0; b < b_count; ++b) {
    int best = 0;
    double best_mean = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < actions; ++a) {
      const double mean = next_theta.block(a * quantiles, b, quantiles, 1).mean();
      if (mean > best_mean) {
        best_mean = mean;
        best = a;
      }
    }
    for (int jp = 0; jp < quantiles; ++jp) {
      targets[jp] = batch.rewards(b) + gamma * batch.not_done(b) * next_theta(best * quantiles + jp, b);
    }
    const int row0 = batch.actions[b] * quantiles;
    for (int j = 0; j < quantiles; ++j) {
      const double estimate = theta(row0 + j, b);
      double g = 0.0;
      for (int jp = 0; jp < quantiles; ++jp) {
        const double u = targets[jp] - estimate;
        loss += quantile_huber(u, taus[j], kappa);
        g -= quantile_huber_grad(u, taus[j], kappa);
      }
      grad(row0 + j, b) += g * norm;
    }
  }
  return loss * norm;
}

void check_quantile_head(const Mlp& online, int num_quantiles) {
  if (num_quantiles < 1 || online.output_dim() % num_quantiles != 0) {
    throw std::invalid_argument("quantile loss: output width is not actions x quantiles");
  }
}

}  // namespace

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("ReplayMemory capacity must be positive");
  slots_.reserve(std::min<std::size_t>(capacity_, 1u << 16));
}

void ReplayMemory::push(Transition t) {
  if (slots_.size() < capacity_) {
    slots_.push_back(std::move(t));
  } else {
    slots_[cursor_] = std::move(t);
  }
  cursor_ = (cursor_ + 1) % capacity_;
  fill_ = std::min(fill_ + 1, capacity_);
}

const Transition& ReplayMemory::operator[](std::size_t i) const {
  if (i >= fill_) throw std::out_of_range("ReplayMemory index");
  const std::size_t oldest = fill_ < capacity_ ? 0 : cursor_;
  return slots_[(oldest + i) % capacity_];
}

std::vector<const Transition*> ReplayMemory::sample(std::size_t batch_size, Rng& rng) const {
  if (fill_ == 0) throw std::logic_error("ReplayMemory::sample on empty memory");
  std::uniform_int_distribution<std::size_t> pick(0, fill_ - 1);
  std::vector<const Transition*> out(batch_size);
  for (auto& p : out) p = &slots_[pick(rng)];
  return out;
}

Batch make_batch(std::span<const Transition* const> transitions, double reward_scale) {
  Batch batch;
  const auto b_count = static_cast<Eigen::Index>(transitions.size());
  if (b_count == 0) return batch;
  const auto dim = static_cast<Eigen::Index>(transitions.front()->s.size());
  batch.states.resize(dim, b_count);
  batch.next_states.resize(dim, b_count);
  batch.rewards.resize(b_count);
  batch.not_done.resize(b_count);
  batch.actions.resize(b_count);
  for (Eigen::Index b = 0; b < b_count; ++b) {
    const Transition& t = *transitions[b];
    if (static_cast<Eigen::Index>(t.s.size()) != dim ||
        static_cast<Eigen::Index>(t.s_next.size()) != dim) {
      throw std::invalid_argument("make_batch: inconsistent observation width");
    }
    batch.states.col(b) = Eigen::Map<const Eigen::VectorXd>(t.s.data(), dim);
    batch.next_states.col(b) = Eigen::Map<const Eigen::VectorXd>(t.s_next.data(), dim);
    batch.actions[b] = t.a;
    batch.rewards(b) = t.r * reward_scale;
    batch.not_done(b) = t.done ? 0.0 : 1.0;
  }
  return batch;
}

Batch make_batch(std::span<const Transition> transitions, double reward_scale) {
  std::vector<const Transition*> ptrs;
  ptrs.reserve(transitions.size());
  for (const auto& t : transitions) ptrs.push_back(&t);
  return make_batch(std::span<const Transition* const>(ptrs), reward_scale);
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "dqn") return Algorithm::Dqn;
  if (name == "cql") return Algorithm::Cql;
  if (name == "qrdqn") return Algorithm::QrDqn;
  if (name == "cqr") return Algorithm::Cqr;
  throw std::invalid_argument("unknown algorithm '" + name + "'");
}

std::string algorithm_name(Algorithm algo) {
  switch (algo) {
    case Algorithm::Dqn: return "dqn";
    case Algorithm::Cql: return "cql";
    case Algorithm::QrDqn: return "qrdqn";
    case Algorithm::Cqr: return "cqr";
  }
  return "unknown";
}

bool is_distributional(Algorithm algo) {
  return algo == Algorithm::QrDqn || algo == Algorithm::Cqr;
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid TrainConfig: ") + what);
  };
  require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0,1]");
  require(alpha >= 0.0, "alpha must be non-negative");
  require(num_quantiles >= 1, "num_quantiles must be >= 1");
  require(learning_rate >= 0.0, "learning_rate must be non-negative");
  require(epochs >= 0 && gradient_steps >= 0, "epochs and gradient_steps must be >= 0");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(target_sync_period >= 1, "target_sync_period must be >= 1");
  require(huber_kappa > 0.0, "huber_kappa must be positive");
  require(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 &&
              epsilon_end <= 1.0,
          "epsilon must lie in [0,1]");
  require(epsilon_decay_fraction >= 0.0, "epsilon_decay_fraction must be >= 0");
  require(online_episodes >= 0, "online_episodes must be >= 0");
  require(replay_capacity >= 1, "replay_capacity must be >= 1");
  require(train_every >= 1, "train_every must be >= 1");
}

double quantile_huber(double u, double tau, double kappa) {
  if (!(kappa > 0.0) || !(tau > 0.0 && tau < 1.0)) {
    throw std::domain_error("quantile_huber: need kappa > 0 and tau in (0,1)");
  }
  const double abs_u = std::abs(u);
  const double huber = abs_u <= kappa ? 0.5 * u * u : kappa * (abs_u - 0.5 * kappa);
  return std::abs(tau - (u < 0.0 ? 1.0 : 0.0)) * huber / kappa;
}

std::vector<double> quantile_midpoints(int num_quantiles) {
  if (num_quantiles < 1) throw std::domain_error("quantile_midpoints: need I >= 1");
  std::vector<double> taus(num_quantiles);
  for (int j = 1; j <= num_quantiles; ++j) taus[j - 1] = (2.0 * j - 1.0) / (2.0 * num_quantiles);
  return taus;
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw std::domain_error("log_sum_exp of nothing");
  const double top = *std::max_element(values.begin(), values.end());
  if (std::isinf(top)) return top;
  double total = 0.0;
  for (double v : values) total += std::exp(v - top);
  return top + std::log(total);
}

LossResult dqn_loss(const Batch& batch, const Mlp& online, const Mlp& target, double gamma) {
  check_batch(batch, online, target);
  ForwardCache cache;
  const Eigen::MatrixXd q = online.forward(batch.states, &cache);
  const Eigen::MatrixXd next_q = target.forward(batch.next_states);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(q.rows(), q.cols());
  LossResult result;
  result.value = add_td_squared(batch, q, next_q, gamma, 1.0, grad);
  result.grads = online.backward(cache, grad);
  return result;
}

LossResult cql_loss(const Batch& batch, const Mlp& online, const Mlp& target, double gamma,
                    double alpha) {
  check_batch(batch, online, target);
  ForwardCache cache;
  const Eigen::MatrixXd q = online.forward(batch.states, &cache);
  const Eigen::MatrixXd next_q = target.forward(batch.next_states);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(q.rows(), q.cols());
  LossResult result;
  result.value = add_td_squared(batch, q, next_q, gamma, 0.5, grad);
  const int b_count = batch.size();
  const int actions = static_cast<int>(q.rows());
  double penalty = 0.0;
  for (int b = 0; b < b_count; ++b) {
    double gap = 0.0;
    add_conservative_grad(q, b, batch.actions[b], 1, 0, actions, alpha / b_count, grad, gap);
    penalty += gap;
    result.min_conservative_gap = std::min(result.min_conservative_gap, gap);
  }
  result.value += alpha * penalty / b_count;
  result.grads = online.backward(cache, grad);
  return result;
}

LossResult qrdqn_loss(const Batch& batch, const Mlp& online, const Mlp& target, double gamma,
                      int num_quantiles, double kappa) {
  check_batch(batch, online, target);
  check_quantile_head(online, num_quantiles);
  ForwardCache cache;
  const Eigen::MatrixXd theta = online.forward(batch.states, &cache);
  const Eigen::MatrixXd next_theta = target.forward(batch.next_states);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(theta.rows(), theta.cols());
  LossResult result;
  result.value = add_quantile_regression(batch, theta, next_theta, gamma, num_quantiles, kappa,
                                         1.0, grad);
  result.grads = online.backward(cache, grad);
  return result;
}

LossResult cqr_loss(const Batch& batch, const Mlp& online, const Mlp& target, double gamma,
                    double alpha, int num_quantiles, double kappa) {
  check_batch(batch, online, target);
  check_quantile_head(online, num_quantiles);
  ForwardCache cache;
  const Eigen::MatrixXd theta = online.forward(batch.states, &cache);
  const Eigen::MatrixXd next_theta = target.forward(batch.next_states);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(theta.rows(), theta.cols());
  LossResult result;
  result.value = add_quantile_regression(batch, theta, next_theta, gamma, num_quantiles, kappa,
                                         0.5, grad);
  const int b_count = batch.size();
  const int actions = static_cast<int>(theta.rows()) / num_quantiles;
  const double scale = alpha / (static_cast<double>(b_count) * num_quantiles);
  double penalty = 0.0;
  for (int b = 0; b < b_count; ++b) {
    for (int j = 0; j < num_quantiles; ++j) {
      double gap = 0.0;
      add_conservative_grad(theta, b, batch.actions[b], num_quantiles, j, actions, scale, grad,
                            gap);
      penalty += gap;
      result.min_conservative_gap = std::min(result.min_conservative_gap, gap);
    }
  }
  result.value += scale * penalty;
  result.grads = online.backward(cache, grad);
  return result;
}

LossResult algorithm_loss(Algorithm algo, const Batch& batch, const Mlp& online,
                          const Mlp& target, const TrainConfig& config) {
  switch (algo) {
    case Algorithm::Dqn: return dqn_loss(batch, online, target, config.gamma);
    case Algorithm::Cql: return cql_loss(batch, online, target, config.gamma, config.alpha);
    case Algorithm::QrDqn:
      return qrdqn_loss(batch, online, target, config.gamma, config.num_quantiles,
                        config.huber_kappa);
    case Algorithm::Cqr:
      return cqr_loss(batch, online, target, config.gamma, config.alpha, config.num_quantiles,
                      config.huber_kappa);
  }
  throw std::logic_error("unhandled algorithm");
}

int argmax_lowest(std::span<const double> values) {
  if (values.empty()) throw std::domain_error("argmax of nothing");
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

int epsilon_greedy(std::span<const double> q_values, double epsilon, Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw std::domain_error("epsilon_greedy: epsilon outside [0,1]");
  }
  if (epsilon > 0.0) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < epsilon) {
      std::uniform_int_distribution<int> pick(0, static_cast<int>(q_values.size()) - 1);
      return pick(rng);
    }
  }
  return argmax_lowest(q_values);
}

Eigen::VectorXd action_values(const Mlp& net, std::span<const double> observation,
                              int num_quantiles) {
  const Eigen::Map<const Eigen::VectorXd> x(observation.data(),
                                            static_cast<Eigen::Index>(observation.size()));
  const Eigen::VectorXd out = net.forward(x);
  if (num_quantiles == 1) return out;
  const Eigen::Index actions = out.size() / num_quantiles;
  Eigen::VectorXd q(actions);
  for (Eigen::Index a = 0; a < actions; ++a) q(a) = out.segment(a * num_quantiles, num_quantiles).mean();
  return q;
}

std::vector<int> network_dims(int obs_dim, int num_actions, int num_quantiles,
                              const std::vector<int>& hidden) {
  std::vector<int> dims{obs_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(num_actions * num_quantiles);
  return dims;
}

QPolicy::QPolicy(Mlp net, int num_quantiles) : net_(std::move(net)), num_quantiles_(num_quantiles) {
  if (num_quantiles_ < 1 || net_.output_dim() % num_quantiles_ != 0) {
    throw std::invalid_argument("QPolicy: output width is not a multiple of quantiles");
  }
}

int QPolicy::greedy(std::span<const double> observation) const {
  const Eigen::VectorXd q = action_values(net_, observation, num_quantiles_);
  return argmax_lowest(std::span<const double>(q.data(), q.size()));
}

int QPolicy::act(const Environment&, std::span<const double> observation, Rng&) {
  return greedy(observation);
}

double epsilon_at(const TrainConfig& config, int episode) {
  const double horizon = config.epsilon_decay_fraction * config.online_episodes;
  if (horizon <= 0.0) return config.epsilon_end;
  const double progress = std::min(1.0, static_cast<double>(episode) / horizon);
  return config.epsilon_start + (config.epsilon_end - config.epsilon_start) * progress;
}

std::uint64_t train_episode_seed(const TrainConfig& config, int episode) {
  return mix_seed(config.seed, 0x10000 + static_cast<std::uint64_t>(episode));
}

OnlineResult train_online_dqn(EpisodicEnv& env, const TrainConfig& config,
                              const EpisodeHook& hook) {
  config.validate();
  Rng agent_rng(mix_seed(config.seed, 0x0A));
  OnlineResult result;
  result.net = Mlp::init(network_dims(env.obs_dim(), env.num_actions(), 1, config.hidden_layers),
                         agent_rng);
  Mlp target = result.net;
  AdamState adam(result.net, config.learning_rate);
  ReplayMemory memory(config.replay_capacity);
  std::int64_t env_steps = 0;

  for (int episode = 0; episode < config.online_episodes; ++episode) {
    Rng env_rng(train_episode_seed(config, episode));
    std::vector<double> obs = env.reset(env_rng);
    const double epsilon = epsilon_at(config, episode);
    double episode_return = 0.0;
    bool done = false;
    while (!done) {
      const Eigen::VectorXd q = action_values(result.net, obs, 1);
      const int action = epsilon_greedy(std::span<const double>(q.data(), q.size()), epsilon,
                                        agent_rng);
      StepResult step = env.step(action, env_rng);
      episode_return += step.reward;
      done = step.done;
      Transition t{obs, action, step.reward, step.observation, step.done};
      obs = std::move(step.observation);
      memory.push(t);
      result.log.push_back(std::move(t));
      ++env_steps;

      if (static_cast<std::int64_t>(memory.size()) >= config.learning_starts &&
          env_steps % config.train_every == 0) {
        const auto sample = memory.sample(static_cast<std::size_t>(config.batch_size), agent_rng);
        const Batch batch = make_batch(std::span<const Transition* const>(sample), config.reward_scale);
        const LossResult loss = dqn_loss(batch, result.net, target, config.gamma);
        adam_step(result.net, loss.grads, adam);
        ++result.gradient_steps;
        if (result.gradient_steps % config.target_sync_period == 0) copy_params(result.net, target);
      }
    }
    result.episode_returns.push_back(episode_return);
    if (hook) result.episode_scores.push_back(hook(episode, result.net, env));
  }
  return result;
}

OfflineResult train_offline(std::span<const Transition> dataset, int num_actions, Algorithm algo,
                            const TrainConfig& config, const EpochHook& hook) {
  config.validate();
  if (dataset.empty()) throw std::invalid_argument("train_offline: empty dataset");
  const int obs_dim = static_cast<int>(dataset.front().s.size());
  for (const auto& t : dataset) {
    if (t.a < 0 || t.a >= num_actions) {
      throw std::invalid_argument("train_offline: dataset action outside the action space");
    }
  }

  Rng rng(mix_seed(config.seed, 0x0F));
  const int quantiles = is_distributional(algo) ? config.num_quantiles : 1;
  OfflineResult result;
  result.net =
      Mlp::init(network_dims(obs_dim, num_actions, quantiles, config.hidden_layers), rng);
  Mlp target = result.net;
  AdamState adam(result.net, config.learning_rate);
  const bool conservative = algo == Algorithm::Cql || algo == Algorithm::Cqr;
  std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
  std::vector<const Transition*> sample(static_cast<std::size_t>(config.batch_size));
  std::int64_t steps = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double loss_sum = 0.0;
    for (int g = 0; g < config.gradient_steps; ++g) {
      for (auto& p : sample) p = &dataset[pick(rng)];
      const Batch batch = make_batch(std::span<const Transition* const>(sample), config.reward_scale);
      const LossResult loss = algorithm_loss(algo, batch, result.net, target, config);
      if (conservative && loss.min_conservative_gap < -1e-9) {
        throw std::logic_error("conservative penalty went negative");
      }
      loss_sum += loss.value;
      adam_step(result.net, loss.grads, adam);
      if (++steps % config.target_sync_period == 0) copy_params(result.net, target);
    }
    result.epoch_loss.push_back(config.gradient_steps > 0 ? loss_sum / config.gradient_steps : 0.0);
    if (hook) result.epoch_scores.push_back(hook(epoch, result.net));
  }
  return result;
}

std::uint64_t test_episode_seed(std::uint64_t seed, int index) {
  return mix_seed(seed ^ 0x7e57'7e57'7e57'7e57ULL, static_cast<std::uint64_t>(index));
}

EpisodeMetrics run_episode(Environment& env, Policy& policy, std::uint64_t episode_seed,
                           const SlotHook& on_slot) {
  // Separate streams so every policy faces the same channel trajectory on a
  // given episode seed, whatever randomness the policy itself consumes.
  Rng rng(episode_seed);
  Rng policy_rng(mix_seed(episode_seed, 0x9011C7));
  std::vector<double> obs = env.reset(rng);
  policy.begin_episode();
  while (!env.done()) {
    const int action = policy.act(env, obs, policy_rng);
    const int slot = env.state().slot;
    SlotOutcome out = env.step_joint(
        decode_action(action, env.config().num_aps, env.config().top_k), rng);
    if (on_slot) on_slot(slot, action, out);
    obs = std::move(out.observation);
  }
  return env.metrics();
}

EvaluationResult evaluate(const PolicyFactory& make_policy, const NetworkConfig& config,
                          int num_episodes, std::uint64_t seed, int threads) {
  if (num_episodes < 1) throw std::invalid_argument("evaluate: need at least one episode");
  const int workers = std::clamp(threads, 1, num_episodes);
  EvaluationResult result;
  result.episodes.resize(num_episodes);

  std::vector<std::unique_ptr<Policy>> policies;
  for (int w = 0; w < workers; ++w) policies.push_back(make_policy());
  std::atomic<int> next{0};
  auto work = [&](int w) {
    Environment env(config);
    for (int e = next++; e < num_episodes; e = next++) {
      result.episodes[e] = run_episode(env, *policies[w], test_episode_seed(seed, e));
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }

  for (const auto& m : result.episodes) {
    result.mean.sum_rate += m.sum_rate;
    result.mean.five_percentile_rate += m.five_percentile_rate;
    result.mean.r_score += m.r_score;
  }
  result.mean.sum_rate /= num_episodes;
  result.mean.five_percentile_rate /= num_episodes;
  result.mean.r_score /= num_episodes;
  return result;
}

}  // namespace rrm
