#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "rrm/channel.hpp"

namespace rrm {

/// Fixed affine maps applied to raw observation features before they reach a
/// learner. Stored with every dataset so offline learners see the behaviour
/// policy's exact input distribution.
struct ObservationScaling {
  double sinr_min_db = -30.0;
  double sinr_max_db = 40.0;
  double sinr_offset_db = 10.0;
  double sinr_scale_db = 20.0;
  double logw_offset = 0.0;
  double logw_scale = 2.0;

  friend bool operator==(const ObservationScaling&, const ObservationScaling&) = default;
};

/// Every parameter of one simulated network. Key names in the flat config
/// format are exactly the field names below.
struct NetworkConfig {
  double area_side = 50.0;         // L, meters
  int num_aps = 4;                 // N
  int num_ues = 24;                // M
  int top_k = 3;                   // K
  double min_ap_ue_dist = 10.0;    // d_0
  double min_ap_ap_dist = 1.0;     // d_1
  int slots_per_episode = 2000;    // T
  double ue_speed = 1.0;           // v, m/s
  double slot_duration = 1.0;      // seconds advanced per slot by mobility
  double score_weight_sum = 1.0 / 24.0;  // mu_1
  double score_weight_tail = 3.0;        // mu_2
  double fairness_exponent = 0.8;        // lambda
  double pf_step = 0.05;                 // eta
  double rate_floor = 1e-3;              // lower clamp on smoothed rate
  int topk_refresh_period = 1;  // slots between top-K rebuilds; 0 = once per episode
  bool redraw_shadowing_per_slot = false;
  ChannelParams channel;
  ObservationScaling obs;
  std::uint64_t seed = 1;

  [[nodiscard]] int obs_dim() const { return 2 * num_aps * top_k; }
  [[nodiscard]] int num_actions() const;

  /// Throws std::invalid_argument on a broken invariant.
  void validate() const;
};

/// The full-size experiment: T=2000 slots per episode.
NetworkConfig full_scale_config();

/// Shortened episodes used for CI-sized experiments.
NetworkConfig desk_scale_config();

using KeyValues = std::map<std::string, std::string>;

// Value codecs shared by every flat key-value table; errors name the key.
std::string format_config_double(double v);
double parse_config_double(const std::string& key, const std::string& value);
long long parse_config_int(const std::string& key, const std::string& value);
bool parse_config_bool(const std::string& key, const std::string& value);

/// Parses `key = value` lines; '#' starts a comment.
KeyValues parse_key_values(const std::string& text);

/// Applies overrides on top of `base`. Unknown keys throw. When `num_ues`
/// changes and `score_weight_sum` is not given, mu_1 follows as 1/M.
NetworkConfig apply_overrides(NetworkConfig base, const KeyValues& kv);

KeyValues to_key_values(const NetworkConfig& config);

/// Canonical text: one sorted `key = value` line per field.
std::string serialize_config(const NetworkConfig& config);

NetworkConfig load_config_file(const std::string& path, NetworkConfig base);

/// 64-bit FNV-1a of the canonical text.
std::uint64_t config_hash(const NetworkConfig& config);

std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string hash_hex(std::uint64_t h);

/// SplitMix64 finalizer; derives independent stream seeds from a base seed.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace rrm
