#include "rrm/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "rrm/units.hpp"

namespace rrm {

namespace {

constexpr long kMaxRejections = 100000;
// Path loss is only defined for distances beyond 1 m.
constexpr double kMinPathDistance = 1.0;

Point uniform_point(double side, Rng& rng) {
  std::uniform_real_distribution<double> coord(0.0, side);
  const double x = coord(rng);
  const double y = coord(rng);
  return {x, y};
}

bool far_from_all(const Point& p, std::span<const Point> others, double min_dist) {
  return std::all_of(others.begin(), others.end(),
                     [&](const Point& o) { return distance(p, o) >= min_dist; });
}

void check_geometry(const NetworkConfig& config) {
  const double diagonal = config.area_side * std::numbers::sqrt2;
  if (config.min_ap_ue_dist > diagonal || (config.num_aps > 1 && config.min_ap_ap_dist > diagonal)) {
    throw std::runtime_error("deploy: separation constraint exceeds the area diagonal");
  }
}

}  // namespace

double distance(const Point& a, const Point& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

std::vector<Point> deploy_ues(const NetworkConfig& config, std::span<const Point> aps,
                              Rng& rng) {
  check_geometry(config);
  std::vector<Point> ues;
  ues.reserve(config.num_ues);
  long rejections = 0;
  while (static_cast<int>(ues.size()) < config.num_ues) {
    const Point p = uniform_point(config.area_side, rng);
    if (far_from_all(p, aps, config.min_ap_ue_dist)) {
      ues.push_back(p);
    } else if (++rejections > kMaxRejections) {
      throw std::runtime_error("deploy: infeasible configuration (UE placement)");
    }
  }
  return ues;
}

Topology deploy(const NetworkConfig& config, Rng& rng) {
  check_geometry(config);
  Topology topo;
  topo.ap_positions.reserve(config.num_aps);
  long rejections = 0;
  while (static_cast<int>(topo.ap_positions.size()) < config.num_aps) {
    const Point p = uniform_point(config.area_side, rng);
    if (far_from_all(p, topo.ap_positions, config.min_ap_ap_dist)) {
      topo.ap_positions.push_back(p);
    } else if (++rejections > kMaxRejections) {
      throw std::runtime_error("deploy: infeasible configuration (AP placement)");
    }
  }
  topo.ue_positions = deploy_ues(config, topo.ap_positions, rng);
  return topo;
}

bool topology_valid(const Topology& topology, const NetworkConfig& config) {
  if (static_cast<int>(topology.ap_positions.size()) != config.num_aps ||
      static_cast<int>(topology.ue_positions.size()) != config.num_ues) {
    return false;
  }
  auto inside = [&](const Point& p) {
    return p[0] >= 0.0 && p[0] <= config.area_side && p[1] >= 0.0 &&
           p[1] <= config.area_side;
  };
  for (std::size_t i = 0; i < topology.ap_positions.size(); ++i) {
    if (!inside(topology.ap_positions[i])) return false;
    for (std::size_t j = i + 1; j < topology.ap_positions.size(); ++j) {
      if (distance(topology.ap_positions[i], topology.ap_positions[j]) <
          config.min_ap_ap_dist) {
        return false;
      }
    }
  }
  for (const auto& ue : topology.ue_positions) {
    if (!inside(ue) || !far_from_all(ue, topology.ap_positions, config.min_ap_ue_dist)) {
      return false;
    }
  }
  return true;
}

std::vector<int> associate(const Eigen::MatrixXd& large_scale_gains) {
  std::vector<int> assoc(large_scale_gains.rows(), 0);
  for (Eigen::Index m = 0; m < large_scale_gains.rows(); ++m) {
    int best = 0;
    for (Eigen::Index n = 1; n < large_scale_gains.cols(); ++n) {
      if (large_scale_gains(m, n) > large_scale_gains(m, best)) best = static_cast<int>(n);
    }
    assoc[m] = best;
  }
  return assoc;
}

std::vector<std::vector<int>> select_top_k(std::span<const int> association,
                                           std::span<const double> weights, int num_aps,
                                           int top_k) {
  std::vector<std::vector<int>> lists(num_aps);
  for (std::size_t m = 0; m < association.size(); ++m) {
    lists.at(association[m]).push_back(static_cast<int>(m));
  }
  for (auto& list : lists) {
    std::stable_sort(list.begin(), list.end(),
                     [&](int a, int b) { return weights[a] > weights[b]; });
    if (static_cast<int>(list.size()) > top_k) list.resize(top_k);
  }
  return lists;
}

PfUpdate update_pf(double rate, double smoothed_prev, double step, double rate_floor) {
  double smoothed = step * rate + (1.0 - step) * smoothed_prev;
  smoothed = std::max(smoothed, rate_floor);
  return {smoothed, 1.0 / smoothed};
}

double five_percentile_rate(std::span<const double> avg_rates) {
  if (avg_rates.empty()) throw std::domain_error("five_percentile_rate: empty input");
  std::vector<double> sorted(avg_rates.begin(), avg_rates.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const std::size_t m = sorted.size();
  const std::size_t rank = (95 * m + 99) / 100;  // ceil(0.95 M) without rounding error
  return sorted[rank - 1];
}

EpisodeMetrics metrics_from_average_rates(std::span<const double> avg_rates,
                                          double weight_sum, double weight_tail) {
  EpisodeMetrics out;
  out.sum_rate = std::accumulate(avg_rates.begin(), avg_rates.end(), 0.0);
  out.five_percentile_rate = five_percentile_rate(avg_rates);
  out.r_score = weight_sum * out.sum_rate + weight_tail * out.five_percentile_rate;
  return out;
}

EpisodeMetrics episode_metrics(const Eigen::MatrixXd& slot_rates, double weight_sum,
                               double weight_tail) {
  const Eigen::Index slots = slot_rates.rows();
  std::vector<double> avg(slot_rates.cols(), 0.0);
  for (Eigen::Index m = 0; m < slot_rates.cols(); ++m) {
    avg[m] = slots > 0 ? slot_rates.col(m).sum() / static_cast<double>(slots) : 0.0;
  }
  return metrics_from_average_rates(avg, weight_sum, weight_tail);
}

int encode_action(std::span<const int> per_ap, int top_k) {
  int index = 0;
  for (int choice : per_ap) {
    if (choice < 0 || choice > top_k) {
      throw std::domain_error("encode_action: per-AP choice outside [0, K]");
    }
    index = index * (top_k + 1) + choice;
  }
  return index;
}

JointAction decode_action(int flat_index, int num_aps, int top_k) {
  const int base = top_k + 1;
  long long size = 1;
  for (int n = 0; n < num_aps; ++n) size *= base;
  if (flat_index < 0 || flat_index >= size) {
    throw std::domain_error("decode_action: index outside [0, (K+1)^N)");
  }
  JointAction per_ap(num_aps, 0);
  for (int n = num_aps - 1; n >= 0; --n) {
    per_ap[n] = flat_index % base;
    flat_index /= base;
  }
  return per_ap;
}

Environment::Environment(NetworkConfig config)
    : config_(std::move(config)), num_actions_(0) {
  config_.validate();
  num_actions_ = config_.num_actions();
  Rng deploy_rng(mix_seed(config_.seed, 0xA9));
  ap_positions_ = deploy(config_, deploy_rng).ap_positions;
}

void Environment::refresh_large_scale() {
  const int m_count = config_.num_ues;
  const int n_count = config_.num_aps;
  large_scale_.resize(m_count, n_count);
  for (int m = 0; m < m_count; ++m) {
    for (int n = 0; n < n_count; ++n) {
      const double d =
          std::max(distance(state_.topology.ue_positions[m], ap_positions_[n]), kMinPathDistance);
      large_scale_(m, n) =
          compose_gain(d, state_.shadowing_db(m, n), 1.0, config_.channel.pl_ref_db);
    }
  }
}

void Environment::draw_fast_fading(Rng& rng) {
  if (config_.redraw_shadowing_per_slot) {
    for (int m = 0; m < config_.num_ues; ++m) {
      for (int n = 0; n < config_.num_aps; ++n) {
        state_.shadowing_db(m, n) = sample_shadowing_db(config_.channel.shadow_std_db, rng);
      }
    }
    refresh_large_scale();
  }
  state_.last_gains.resize(config_.num_ues, config_.num_aps);
  for (int m = 0; m < config_.num_ues; ++m) {
    for (int n = 0; n < config_.num_aps; ++n) {
      state_.last_gains(m, n) = large_scale_(m, n) * sample_rayleigh_power(rng);
    }
  }
}

void Environment::move_ues(Rng& rng) {
  const double step_len = config_.ue_speed * config_.slot_duration;
  if (step_len <= 0.0) return;
  std::uniform_real_distribution<double> heading(0.0, 2.0 * std::numbers::pi);
  const double side = config_.area_side;
  auto reflect = [side](double x) {
    // fold into [0, side]
    const double period = 2.0 * side;
    x = std::fmod(x, period);
    if (x < 0.0) x += period;
    return x > side ? period - x : x;
  };
  for (auto& ue : state_.topology.ue_positions) {
    const double theta = heading(rng);
    const Point next{reflect(ue[0] + step_len * std::cos(theta)),
                     reflect(ue[1] + step_len * std::sin(theta))};
    if (far_from_all(next, ap_positions_, config_.min_ap_ue_dist)) ue = next;
  }
}

double Environment::sinr_if_served(int ue, int ap, const std::vector<bool>& active) const {
  std::vector<bool> with_server = active;
  with_server[ap] = true;
  const Eigen::VectorXd row = state_.last_gains.row(ue).transpose();
  return sinr_linear(std::span<const double>(row.data(), row.size()), ap, with_server,
                     config_.channel);
}

std::vector<double> Environment::reset(Rng& rng) {
  const int m_count = config_.num_ues;
  const int n_count = config_.num_aps;
  state_ = EnvState{};
  state_.topology.ap_positions = ap_positions_;
  state_.topology.ue_positions = deploy_ues(config_, ap_positions_, rng);
  state_.shadowing_db.resize(m_count, n_count);
  for (int m = 0; m < m_count; ++m) {
    for (int n = 0; n < n_count; ++n) {
      state_.shadowing_db(m, n) = sample_shadowing_db(config_.channel.shadow_std_db, rng);
    }
  }
  refresh_large_scale();
  state_.association = associate(large_scale_);

  // Probe slot: every AP transmits, every UE measures the rate it would get.
  draw_fast_fading(rng);
  state_.last_active.assign(n_count, true);
  state_.pf_smoothed_rates.resize(m_count);
  state_.pf_weights.resize(m_count);
  for (int m = 0; m < m_count; ++m) {
    const double r0 =
        instantaneous_rate(sinr_if_served(m, state_.association[m], state_.last_active));
    state_.pf_smoothed_rates[m] = std::max(r0, config_.rate_floor);
    state_.pf_weights[m] = 1.0 / state_.pf_smoothed_rates[m];
  }
  state_.cumulative_rates.assign(m_count, 0.0);
  state_.top_k_lists =
      select_top_k(state_.association, state_.pf_weights, n_count, config_.top_k);
  state_.slot = 0;
  started_ = true;
  return observation();
}

std::vector<double> Environment::observation() const {
  const int k_count = config_.top_k;
  const auto& scale = config_.obs;
  std::vector<double> obs(config_.obs_dim(), 0.0);
  for (int n = 0; n < config_.num_aps; ++n) {
    const auto& list = state_.top_k_lists[n];
    for (int k = 0; k < static_cast<int>(list.size()); ++k) {
      const int ue = list[k];
      double sinr_db = linear_to_db(sinr_if_served(ue, n, state_.last_active));
      sinr_db = std::clamp(sinr_db, scale.sinr_min_db, scale.sinr_max_db);
      const std::size_t base = 2 * static_cast<std::size_t>(n * k_count + k);
      obs[base] = (sinr_db - scale.sinr_offset_db) / scale.sinr_scale_db;
      obs[base + 1] = (std::log(state_.pf_weights[ue]) - scale.logw_offset) / scale.logw_scale;
    }
  }
  return obs;
}

StepResult Environment::step(int action, Rng& rng) {
  SlotOutcome out = step_joint(decode_action(action, config_.num_aps, config_.top_k), rng);
  return {std::move(out.observation), out.reward, out.done};
}

SlotOutcome Environment::step_joint(const JointAction& action, Rng& rng) {
  if (!started_ || done()) {
    throw std::logic_error("Environment::step called on a finished episode");
  }
  const int m_count = config_.num_ues;
  const int n_count = config_.num_aps;
  if (static_cast<int>(action.size()) != n_count) {
    throw std::invalid_argument("step: joint action must have one entry per AP");
  }

  SlotOutcome out;
  out.served.assign(n_count, -1);
  std::vector<bool> active(n_count, false);
  for (int n = 0; n < n_count; ++n) {
    const int choice = action[n];
    if (choice < 0 || choice > config_.top_k) {
      throw std::domain_error("step: per-AP choice outside [0, K]");
    }
    const auto& list = state_.top_k_lists[n];
    if (choice >= 1 && choice <= static_cast<int>(list.size())) {
      out.served[n] = list[choice - 1];
      active[n] = true;
    }
  }

  move_ues(rng);
  refresh_large_scale();
  draw_fast_fading(rng);

  out.rates.assign(m_count, 0.0);
  for (int n = 0; n < n_count; ++n) {
    if (out.served[n] < 0) continue;
    const int ue = out.served[n];
    const Eigen::VectorXd row = state_.last_gains.row(ue).transpose();
    out.rates[ue] = instantaneous_rate(
        sinr_linear(std::span<const double>(row.data(), row.size()), n, active, config_.channel));
  }

  double reward = 0.0;
  for (int m = 0; m < m_count; ++m) {
    const PfUpdate pf = update_pf(out.rates[m], state_.pf_smoothed_rates[m], config_.pf_step,
                                  config_.rate_floor);
    state_.pf_smoothed_rates[m] = pf.smoothed_rate;
    state_.pf_weights[m] = pf.weight;
    state_.cumulative_rates[m] += out.rates[m];
    reward += std::pow(pf.weight, config_.fairness_exponent) * out.rates[m];
  }
  state_.last_active = active;
  ++state_.slot;
  if (config_.topk_refresh_period > 0 && state_.slot % config_.topk_refresh_period == 0) {
    state_.top_k_lists =
        select_top_k(state_.association, state_.pf_weights, n_count, config_.top_k);
  }

  out.reward = reward;
  out.done = done();
  out.observation = observation();
  return out;
}

SchedulingView Environment::scheduling_view() const {
  SchedulingView view;
  view.top_k = config_.top_k;
  view.slot = state_.slot;
  view.noise_mw = dbm_to_mw(config_.channel.noise_power_dbm);
  const double pt = dbm_to_mw(config_.channel.tx_power_dbm);
  view.per_ap.resize(config_.num_aps);
  for (int n = 0; n < config_.num_aps; ++n) {
    for (int ue : state_.top_k_lists[n]) {
      Candidate c;
      c.ue = ue;
      c.weight = state_.pf_weights[ue];
      c.rate_estimate = instantaneous_rate(sinr_if_served(ue, n, state_.last_active));
      c.snr = state_.last_gains(ue, n) * pt / view.noise_mw;
      c.received_mw.resize(config_.num_aps);
      for (int i = 0; i < config_.num_aps; ++i) {
        c.received_mw[i] = state_.last_gains(ue, i) * pt;
        if (i != n) c.interference_mw += c.received_mw[i];
      }
      view.per_ap[n].push_back(c);
    }
  }
  return view;
}

EpisodeMetrics Environment::metrics() const {
  std::vector<double> avg(config_.num_ues, 0.0);
  if (state_.slot > 0) {
    for (int m = 0; m < config_.num_ues; ++m) {
      avg[m] = state_.cumulative_rates[m] / static_cast<double>(state_.slot);
    }
  }
  return metrics_from_average_rates(avg, config_.score_weight_sum, config_.score_weight_tail);
}

}  // namespace rrm
