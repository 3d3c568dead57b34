#pragma once

#include <vector>

#include "rrm/channel.hpp"

namespace rrm {

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool done = false;
};

/// Minimal episodic interface shared by the RRM simulator and the small
/// enumerable MDPs used to check the learners.
class EpisodicEnv {
 public:
  virtual ~EpisodicEnv() = default;

  [[nodiscard]] virtual int obs_dim() const = 0;
  [[nodiscard]] virtual int num_actions() const = 0;

  virtual std::vector<double> reset(Rng& rng) = 0;
  virtual StepResult step(int action, Rng& rng) = 0;
};

}  // namespace rrm
