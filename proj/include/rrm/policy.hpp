#pragma once

#include <span>

#include "rrm/channel.hpp"

namespace rrm {

class Environment;

/// A scheduler that can drive an Environment for whole episodes.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual void begin_episode() {}

  /// Returns a flat joint-action index.
  virtual int act(const Environment& env, std::span<const double> observation, Rng& rng) = 0;
};

}  // namespace rrm
