#pragma once

#include <cstdint>
#include <string>

#include "rrm/config.hpp"
#include "rrm/rl.hpp"

namespace rrm {

/// Everything a pipeline stage needs: the network, the learners and the
/// evaluation protocol. Flat keys: NetworkConfig keys, TrainConfig field
/// names, and the fields below.
struct ExperimentSpec {
  std::string profile = "desk";
  NetworkConfig network;
  TrainConfig train;
  int test_episodes = 100;
  std::uint64_t test_seed = 2024;
  int eval_threads = 1;
  int online_eval_every = 5;    // episodes between greedy checks of the online learner
  int offline_eval_every = 5;   // epochs between greedy checks of offline learners
  int curve_eval_episodes = 10;

  /// Throws std::invalid_argument on a bad value or when a test episode
  /// seed coincides with a training episode seed.
  void validate() const;
};

/// N=4, M=24, K=3, T=200 with learner settings sized for one CPU.
ExperimentSpec desk_profile();

/// The full-size experiment with its own learner settings.
ExperimentSpec full_profile();

ExperimentSpec profile_by_name(const std::string& name);

ExperimentSpec apply_experiment_overrides(ExperimentSpec spec, const KeyValues& kv);
KeyValues experiment_key_values(const ExperimentSpec& spec);
std::string serialize_experiment(const ExperimentSpec& spec);

/// Identity of a whole experiment, stamped on every CSV row. The thread
/// count is left out because results do not depend on it.
std::uint64_t experiment_hash(const ExperimentSpec& spec);

}  // namespace rrm
