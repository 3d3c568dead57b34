#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rrm/channel.hpp"
#include "rrm/config.hpp"
#include "rrm/mdp.hpp"

namespace rrm {

using Point = std::array<double, 2>;

double distance(const Point& a, const Point& b);

struct Topology {
  std::vector<Point> ap_positions;
  std::vector<Point> ue_positions;
};

/// Uniform rejection sampling of APs and UEs inside [0, L]^2 subject to the
/// d_0 / d_1 separation constraints. Throws std::runtime_error when more than
/// 1e5 candidate points are rejected.
Topology deploy(const NetworkConfig& config, Rng& rng);

/// Redraws only the UE positions against fixed APs.
std::vector<Point> deploy_ues(const NetworkConfig& config, std::span<const Point> aps,
                              Rng& rng);

/// True when every constraint of `config` holds for `topology`.
bool topology_valid(const Topology& topology, const NetworkConfig& config);

/// RSRP association: UE m goes to argmax_n of `large_scale_gains(m, n)`;
/// ties resolve to the lowest AP index.
std::vector<int> associate(const Eigen::MatrixXd& large_scale_gains);

/// Per AP, its associated UEs sorted by weight (descending, ties by UE
/// index) truncated to K.
std::vector<std::vector<int>> select_top_k(std::span<const int> association,
                                           std::span<const double> weights, int num_aps,
                                           int top_k);

struct PfUpdate {
  double smoothed_rate;
  double weight;
};

/// One step of the exponential rate average and its inverse weight.
PfUpdate update_pf(double rate, double smoothed_prev, double step, double rate_floor);

/// The ceil(0.95 M)-th largest value of `avg_rates`.
double five_percentile_rate(std::span<const double> avg_rates);

struct EpisodeMetrics {
  double sum_rate = 0.0;
  double five_percentile_rate = 0.0;
  double r_score = 0.0;
};

EpisodeMetrics metrics_from_average_rates(std::span<const double> avg_rates,
                                          double weight_sum, double weight_tail);

/// `slot_rates(t, m)` holds R_m(t) for a full episode.
EpisodeMetrics episode_metrics(const Eigen::MatrixXd& slot_rates, double weight_sum,
                               double weight_tail);

/// Per-AP choice: 0 is silent, k in 1..K schedules the k-th top-K candidate.
using JointAction = std::vector<int>;

int encode_action(std::span<const int> per_ap, int top_k);
JointAction decode_action(int flat_index, int num_aps, int top_k);

/// What a non-learning scheduler may look at for one candidate UE. All
/// channel quantities come from the previous slot.
struct Candidate {
  int ue = -1;
  double weight = 0.0;
  double rate_estimate = 0.0;    // log2(1+SINR) given last slot's active APs
  double snr = 0.0;              // interference-free, linear
  double interference_mw = 0.0;  // sum over all other APs
  std::vector<double> received_mw;  // p_t * gain from every AP, serving AP included
};

struct SchedulingView {
  std::vector<std::vector<Candidate>> per_ap;
  double noise_mw = 0.0;
  int slot = 0;
  int top_k = 0;
};

struct EnvState {
  int slot = 0;
  Topology topology;
  std::vector<int> association;
  std::vector<std::vector<int>> top_k_lists;
  std::vector<double> pf_smoothed_rates;
  std::vector<double> pf_weights;
  std::vector<double> cumulative_rates;
  Eigen::MatrixXd shadowing_db;   // M x N, per episode
  Eigen::MatrixXd last_gains;     // M x N, previous slot including fading
  std::vector<bool> last_active;  // APs transmitting in the previous slot
};

struct SlotOutcome {
  std::vector<double> observation;
  double reward = 0.0;
  std::vector<double> rates;
  bool done = false;
  JointAction served;  // per AP: served UE id or -1
};

/// Episodic multi-AP downlink scheduling environment.
class Environment final : public EpisodicEnv {
 public:
  /// APs are placed once from `config.seed`; every reset redraws UEs.
  explicit Environment(NetworkConfig config);

  [[nodiscard]] int obs_dim() const override { return config_.obs_dim(); }
  [[nodiscard]] int num_actions() const override { return num_actions_; }

  std::vector<double> reset(Rng& rng) override;
  StepResult step(int action, Rng& rng) override;

  SlotOutcome step_joint(const JointAction& action, Rng& rng);

  [[nodiscard]] const NetworkConfig& config() const { return config_; }
  [[nodiscard]] const EnvState& state() const { return state_; }
  [[nodiscard]] bool done() const { return state_.slot >= config_.slots_per_episode; }

  [[nodiscard]] SchedulingView scheduling_view() const;
  [[nodiscard]] std::vector<double> observation() const;

  /// Metrics over the slots played so far (probe slot excluded).
  [[nodiscard]] EpisodeMetrics metrics() const;

 private:
  void refresh_large_scale();
  void draw_fast_fading(Rng& rng);
  void move_ues(Rng& rng);
  [[nodiscard]] double sinr_if_served(int ue, int ap, const std::vector<bool>& active) const;

  NetworkConfig config_;
  int num_actions_;
  std::vector<Point> ap_positions_;
  Eigen::MatrixXd large_scale_;  // M x N linear gains without fading
  EnvState state_;
  bool started_ = false;
};

}  // namespace rrm
