#pragma once

#include <string>
#include <vector>

#include "rrm/environment.hpp"
#include "rrm/policy.hpp"

namespace rrm {

enum class BaselineKind { RandomWalk, FullReuse, Tdm, ItLinQ };

BaselineKind parse_baseline(const std::string& name);
std::string baseline_name(BaselineKind kind);

struct ItLinQParams {
  double threshold_scale = 316.22776601683796;  // 10^(25/10)
  double snr_exponent = 0.5;
};

/// Each AP picks uniformly among its non-empty candidate slots.
JointAction random_policy(const SchedulingView& view, Rng& rng);

/// Each AP picks the candidate with the largest w * R (ties: lowest slot).
JointAction full_reuse_policy(const SchedulingView& view);

/// Rotation bookkeeping for round robin: when each UE was last served.
struct RoundRobinState {
  std::vector<long> last_served;  // -1 = never
  long clock = 0;
};

/// Round robin: each AP serves the candidate it served least recently
/// (never-served first, ties by lowest slot). With an unchanging candidate
/// list this is the cyclic order 1, 2, ..., K, 1, 2, ...
JointAction tdm_policy(const SchedulingView& view, RoundRobinState& rotation);

/// PF-ordered interference tolerance check; an AP with no passing candidate
/// stays silent.
JointAction itlinq_policy(const SchedulingView& view, const ItLinQParams& params);

class BaselinePolicy final : public Policy {
 public:
  explicit BaselinePolicy(BaselineKind kind, ItLinQParams itlinq = {});

  void begin_episode() override;
  int act(const Environment& env, std::span<const double> observation, Rng& rng) override;

  [[nodiscard]] BaselineKind kind() const { return kind_; }

 private:
  BaselineKind kind_;
  ItLinQParams itlinq_;
  RoundRobinState rotation_;
};

}  // namespace rrm
