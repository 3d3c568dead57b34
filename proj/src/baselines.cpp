#include "rrm/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rrm {

namespace {

double pf_ratio(const Candidate& c) { return c.weight * c.rate_estimate; }

int best_pf_slot(const std::vector<Candidate>& candidates) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(candidates.size()); ++k) {
    if (pf_ratio(candidates[k]) > pf_ratio(candidates[best])) best = k;
  }
  return best + 1;
}

}  // namespace

BaselineKind parse_baseline(const std::string& name) {
  if (name == "random") return BaselineKind::RandomWalk;
  if (name == "full-reuse") return BaselineKind::FullReuse;
  if (name == "tdm") return BaselineKind::Tdm;
  if (name == "itlinq") return BaselineKind::ItLinQ;
  throw std::invalid_argument("unknown baseline policy '" + name + "'");
}

std::string baseline_name(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::RandomWalk: return "random";
    case BaselineKind::FullReuse: return "full-reuse";
    case BaselineKind::Tdm: return "tdm";
    case BaselineKind::ItLinQ: return "itlinq";
  }
  return "unknown";
}

JointAction random_policy(const SchedulingView& view, Rng& rng) {
  JointAction action(view.per_ap.size(), 0);
  for (std::size_t n = 0; n < view.per_ap.size(); ++n) {
    const int available = static_cast<int>(view.per_ap[n].size());
    if (available == 0) continue;
    std::uniform_int_distribution<int> pick(1, available);
    action[n] = pick(rng);
  }
  return action;
}

JointAction full_reuse_policy(const SchedulingView& view) {
  JointAction action(view.per_ap.size(), 0);
  for (std::size_t n = 0; n < view.per_ap.size(); ++n) {
    if (!view.per_ap[n].empty()) action[n] = best_pf_slot(view.per_ap[n]);
  }
  return action;
}

JointAction tdm_policy(const SchedulingView& view, RoundRobinState& rotation) {
  JointAction action(view.per_ap.size(), 0);
  for (std::size_t n = 0; n < view.per_ap.size(); ++n) {
    const auto& candidates = view.per_ap[n];
    if (candidates.empty()) continue;
    auto last = [&](int k) -> long {
      const auto ue = static_cast<std::size_t>(candidates[k].ue);
      return ue < rotation.last_served.size() ? rotation.last_served[ue] : -1;
    };
    int pick = 0;
    for (int k = 1; k < static_cast<int>(candidates.size()); ++k) {
      if (last(k) < last(pick)) pick = k;
    }
    const auto ue = static_cast<std::size_t>(candidates[pick].ue);
    if (rotation.last_served.size() <= ue) rotation.last_served.resize(ue + 1, -1);
    rotation.last_served[ue] = rotation.clock;
    action[n] = pick + 1;
  }
  ++rotation.clock;
  return action;
}

JointAction itlinq_policy(const SchedulingView& view, const ItLinQParams& params) {
  const int n_count = static_cast<int>(view.per_ap.size());
  JointAction action(n_count, 0);

  // APs take turns in order of their best PF ratio; within an AP candidates
  // go in PF order.
  std::vector<std::vector<int>> orders(n_count);
  std::vector<double> best_pf(n_count, -1.0);
  for (int n = 0; n < n_count; ++n) {
    const auto& candidates = view.per_ap[n];
    auto& order = orders[n];
    order.resize(candidates.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = static_cast<int>(k);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return pf_ratio(candidates[a]) > pf_ratio(candidates[b]);
    });
    if (!order.empty()) best_pf[n] = pf_ratio(candidates[order.front()]);
  }
  std::vector<int> ap_order(n_count);
  for (int n = 0; n < n_count; ++n) ap_order[n] = n;
  std::stable_sort(ap_order.begin(), ap_order.end(),
                   [&](int a, int b) { return best_pf[a] > best_pf[b]; });

  auto threshold = [&](const Candidate& c) {
    return params.threshold_scale * std::pow(c.snr, params.snr_exponent) * view.noise_mw;
  };

  struct Scheduled {
    int ap;
    const Candidate* link;
  };
  std::vector<Scheduled> scheduled;
  for (int n : ap_order) {
    const auto& candidates = view.per_ap[n];
    for (int k : orders[n]) {
      const Candidate& c = candidates[k];
      bool tolerated = true;
      for (const Scheduled& s : scheduled) {
        // interference received from an already active AP, and caused to its UE
        if (c.received_mw[s.ap] > threshold(c) || s.link->received_mw[n] > threshold(*s.link)) {
          tolerated = false;
          break;
        }
      }
      if (tolerated) {
        action[n] = k + 1;
        scheduled.push_back({n, &c});
        break;
      }
    }
  }
  return action;
}

BaselinePolicy::BaselinePolicy(BaselineKind kind, ItLinQParams itlinq)
    : kind_(kind), itlinq_(itlinq) {
  if (!(itlinq_.threshold_scale > 0.0) || !(itlinq_.snr_exponent > 0.0)) {
    throw std::invalid_argument("ITLinQ parameters must be positive");
  }
}

void BaselinePolicy::begin_episode() { rotation_ = RoundRobinState{}; }

int BaselinePolicy::act(const Environment& env, std::span<const double>, Rng& rng) {
  const SchedulingView view = env.scheduling_view();
  JointAction action;
  switch (kind_) {
    case BaselineKind::RandomWalk: action = random_policy(view, rng); break;
    case BaselineKind::FullReuse: action = full_reuse_policy(view); break;
    case BaselineKind::Tdm: action = tdm_policy(view, rotation_); break;
    case BaselineKind::ItLinQ: action = itlinq_policy(view, itlinq_); break;
  }
  return encode_action(action, env.config().top_k);
}

}  // namespace rrm
