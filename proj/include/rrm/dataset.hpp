#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rrm/config.hpp"
#include "rrm/rl.hpp"

namespace rrm {

struct DatasetMetadata {
  int num_aps = 0;
  int num_ues = 0;
  int top_k = 0;
  int obs_dim = 0;
  int num_actions = 0;
  std::uint64_t config_hash = 0;
  std::string source_policy;  // at most 32 bytes
  double fraction = 1.0;
  ObservationScaling obs_scaling;
  std::uint64_t seed = 0;
  std::int64_t created_unix = 0;

  friend bool operator==(const DatasetMetadata&, const DatasetMetadata&) = default;
};

struct OfflineDataset {
  DatasetMetadata meta;
  std::vector<Transition> transitions;

  friend bool operator==(const OfflineDataset&, const OfflineDataset&) = default;
};

inline constexpr std::size_t kDatasetHeaderBytes = 152;
inline constexpr std::size_t kSourcePolicyBytes = 32;

/// Bytes taken by one stored transition.
std::size_t dataset_record_bytes(int obs_dim);

/// Metadata describing data generated under `config`.
DatasetMetadata metadata_for(const NetworkConfig& config, std::string source_policy,
                             double fraction, std::uint64_t seed, std::int64_t created_unix);

/// The final ceil(fraction * log.size()) transitions, order preserved.
OfflineDataset slice_last_fraction(std::span<const Transition> log, double fraction,
                                   DatasetMetadata meta);

std::vector<char> serialize_dataset(const OfflineDataset& dataset);
OfflineDataset deserialize_dataset(const std::vector<char>& bytes);

void save_dataset(const OfflineDataset& dataset, const std::string& path);
OfflineDataset load_dataset(const std::string& path);

/// Throws FormatError unless the dataset was produced under `config`.
void check_dataset_matches(const DatasetMetadata& meta, const NetworkConfig& config);

/// Uniform with replacement.
std::vector<const Transition*> sample_batch(const OfflineDataset& dataset, std::size_t batch_size,
                                            Rng& rng);

struct DatasetSummary {
  std::size_t count = 0;
  double reward_mean = 0.0;
  double reward_std = 0.0;
  std::size_t terminal_count = 0;
  std::vector<std::size_t> action_histogram;
};

DatasetSummary summarize(const OfflineDataset& dataset);

}  // namespace rrm
