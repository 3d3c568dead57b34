#include "rrm/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace rrm {

std::string format_config_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_config_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': expected a number, got '" +
                                value + "'");
  }
}

long long parse_config_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': expected an integer, got '" +
                                value + "'");
  }
}

bool parse_config_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument("config key '" + key + "': expected true/false");
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

struct Field {
  std::function<std::string(const NetworkConfig&)> get;
  std::function<void(NetworkConfig&, const std::string&, const std::string&)> set;
};

template <typename T>
Field double_field(T NetworkConfig::*member) {
  return {[member](const NetworkConfig& c) { return format_config_double(c.*member); },
          [member](NetworkConfig& c, const std::string& k, const std::string& v) {
            c.*member = parse_config_double(k, v);
          }};
}

Field int_field(int NetworkConfig::*member) {
  return {[member](const NetworkConfig& c) { return std::to_string(c.*member); },
          [member](NetworkConfig& c, const std::string& k, const std::string& v) {
            c.*member = static_cast<int>(parse_config_int(k, v));
          }};
}

Field channel_field(double ChannelParams::*member) {
  return {[member](const NetworkConfig& c) { return format_config_double(c.channel.*member); },
          [member](NetworkConfig& c, const std::string& k, const std::string& v) {
            c.channel.*member = parse_config_double(k, v);
          }};
}

Field obs_field(double ObservationScaling::*member) {
  return {[member](const NetworkConfig& c) { return format_config_double(c.obs.*member); },
          [member](NetworkConfig& c, const std::string& k, const std::string& v) {
            c.obs.*member = parse_config_double(k, v);
          }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"area_side", double_field(&NetworkConfig::area_side)},
      {"num_aps", int_field(&NetworkConfig::num_aps)},
      {"num_ues", int_field(&NetworkConfig::num_ues)},
      {"top_k", int_field(&NetworkConfig::top_k)},
      {"min_ap_ue_dist", double_field(&NetworkConfig::min_ap_ue_dist)},
      {"min_ap_ap_dist", double_field(&NetworkConfig::min_ap_ap_dist)},
      {"slots_per_episode", int_field(&NetworkConfig::slots_per_episode)},
      {"ue_speed", double_field(&NetworkConfig::ue_speed)},
      {"slot_duration", double_field(&NetworkConfig::slot_duration)},
      {"score_weight_sum", double_field(&NetworkConfig::score_weight_sum)},
      {"score_weight_tail", double_field(&NetworkConfig::score_weight_tail)},
      {"fairness_exponent", double_field(&NetworkConfig::fairness_exponent)},
      {"pf_step", double_field(&NetworkConfig::pf_step)},
      {"rate_floor", double_field(&NetworkConfig::rate_floor)},
      {"topk_refresh_period", int_field(&NetworkConfig::topk_refresh_period)},
      {"redraw_shadowing_per_slot",
       {[](const NetworkConfig& c) {
          return std::string(c.redraw_shadowing_per_slot ? "true" : "false");
        },
        [](NetworkConfig& c, const std::string& k, const std::string& v) {
          c.redraw_shadowing_per_slot = parse_config_bool(k, v);
        }}},
      {"pl_ref_db", channel_field(&ChannelParams::pl_ref_db)},
      {"shadow_std_db", channel_field(&ChannelParams::shadow_std_db)},
      {"tx_power_dbm", channel_field(&ChannelParams::tx_power_dbm)},
      {"noise_power_dbm", channel_field(&ChannelParams::noise_power_dbm)},
      {"obs_sinr_min_db", obs_field(&ObservationScaling::sinr_min_db)},
      {"obs_sinr_max_db", obs_field(&ObservationScaling::sinr_max_db)},
      {"obs_sinr_offset_db", obs_field(&ObservationScaling::sinr_offset_db)},
      {"obs_sinr_scale_db", obs_field(&ObservationScaling::sinr_scale_db)},
      {"obs_logw_offset", obs_field(&ObservationScaling::logw_offset)},
      {"obs_logw_scale", obs_field(&ObservationScaling::logw_scale)},
      {"seed",
       {[](const NetworkConfig& c) { return std::to_string(c.seed); },
        [](NetworkConfig& c, const std::string& k, const std::string& v) {
          const long long s = parse_config_int(k, v);
          if (s < 0) throw std::invalid_argument("config key 'seed' must be >= 0");
          c.seed = static_cast<std::uint64_t>(s);
        }}},
  };
  return table;
}

}  // namespace

int NetworkConfig::num_actions() const {
  long long size = 1;
  for (int n = 0; n < num_aps; ++n) {
    size *= (top_k + 1);
    if (size > std::numeric_limits<int>::max()) {
      throw std::invalid_argument("action space (K+1)^N does not fit in int");
    }
  }
  return static_cast<int>(size);
}

void NetworkConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid NetworkConfig: ") + what);
  };
  require(area_side > 0.0 && std::isfinite(area_side), "area_side must be positive");
  require(num_aps >= 1, "num_aps must be >= 1");
  require(num_ues >= 1, "num_ues must be >= 1");
  require(top_k >= 1, "top_k must be >= 1");
  require(top_k <= num_ues, "top_k must not exceed num_ues");
  require(min_ap_ue_dist >= 0.0, "min_ap_ue_dist must be >= 0");
  require(min_ap_ap_dist >= 0.0, "min_ap_ap_dist must be >= 0");
  require(slots_per_episode >= 1, "slots_per_episode must be >= 1");
  require(ue_speed >= 0.0 && slot_duration >= 0.0, "mobility must be non-negative");
  require(fairness_exponent >= 0.0 && fairness_exponent <= 1.0,
          "fairness_exponent must lie in [0,1]");
  require(pf_step > 0.0 && pf_step <= 1.0, "pf_step must lie in (0,1]");
  require(rate_floor > 0.0, "rate_floor must be positive");
  require(topk_refresh_period >= 0, "topk_refresh_period must be >= 0");
  require(obs.sinr_scale_db > 0.0 && obs.logw_scale > 0.0,
          "observation scales must be positive");
  require(obs.sinr_min_db < obs.sinr_max_db, "observation SINR clip range is empty");
  channel.validate();
  (void)num_actions();
}

NetworkConfig full_scale_config() {
  NetworkConfig c;
  c.slots_per_episode = 2000;
  return c;
}

NetworkConfig desk_scale_config() {
  NetworkConfig c;
  c.slots_per_episode = 200;
  return c;
}

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    }
    kv[key] = value;
  }
  return kv;
}

NetworkConfig apply_overrides(NetworkConfig base, const KeyValues& kv) {
  const auto& table = fields();
  for (const auto& [key, value] : kv) {
    const auto it = table.find(key);
    if (it == table.end()) throw std::invalid_argument("unknown config key '" + key + "'");
    it->second.set(base, key, value);
  }
  if (kv.count("num_ues") && !kv.count("score_weight_sum")) {
    base.score_weight_sum = 1.0 / base.num_ues;
  }
  base.validate();
  return base;
}

KeyValues to_key_values(const NetworkConfig& config) {
  KeyValues kv;
  for (const auto& [key, field] : fields()) kv[key] = field.get(config);
  return kv;
}

std::string serialize_config(const NetworkConfig& config) {
  std::string out;
  for (const auto& [key, value] : to_key_values(config)) {
    out += key + " = " + value + "\n";
  }
  return out;
}

NetworkConfig load_config_file(const std::string& path, NetworkConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return apply_overrides(std::move(base), parse_key_values(buffer.str()));
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t config_hash(const NetworkConfig& config) {
  const std::string text = serialize_config(config);
  return fnv1a64(text.data(), text.size());
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace rrm
