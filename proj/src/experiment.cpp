#include "rrm/experiment.hpp"

#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace rrm {

namespace {

struct Field {
  std::function<std::string(const ExperimentSpec&)> get;
  std::function<void(ExperimentSpec&, const std::string&, const std::string&)> set;
};

template <typename Owner, typename T>
Field number(Owner ExperimentSpec::*owner, T Owner::*member) {
  return {[=](const ExperimentSpec& s) {
            const T v = s.*owner.*member;
            if constexpr (std::is_floating_point_v<T>) return format_config_double(v);
            else return std::to_string(v);
          },
          [=](ExperimentSpec& s, const std::string& k, const std::string& v) {
            if constexpr (std::is_floating_point_v<T>) {
              s.*owner.*member = parse_config_double(k, v);
            } else {
              const long long x = parse_config_int(k, v);
              if constexpr (std::is_unsigned_v<T>) {
                if (x < 0) throw std::invalid_argument("config key '" + k + "' must be >= 0");
              }
              s.*owner.*member = static_cast<T>(x);
            }
          }};
}

template <typename T>
Field top(T ExperimentSpec::*member) {
  return {[=](const ExperimentSpec& s) { return std::to_string(s.*member); },
          [=](ExperimentSpec& s, const std::string& k, const std::string& v) {
            const long long x = parse_config_int(k, v);
            if (x < 0) throw std::invalid_argument("config key '" + k + "' must be >= 0");
            s.*member = static_cast<T>(x);
          }};
}

std::string join_dims(const std::vector<int>& dims) {
  std::string out;
  for (std::size_t i = 0; i < dims.size(); ++i) out += (i ? "," : "") + std::to_string(dims[i]);
  return out;
}

std::vector<int> split_dims(const std::string& key, const std::string& text) {
  std::vector<int> dims;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const long long d = parse_config_int(key, item);
    if (d < 1) throw std::invalid_argument("config key '" + key + "': widths must be positive");
    dims.push_back(static_cast<int>(d));
  }
  if (dims.empty()) throw std::invalid_argument("config key '" + key + "' is empty");
  return dims;
}

const std::map<std::string, Field>& train_fields() {
  using S = ExperimentSpec;
  using T = TrainConfig;
  static const std::map<std::string, Field> table = {
      {"gamma", number(&S::train, &T::gamma)},
      {"alpha", number(&S::train, &T::alpha)},
      {"num_quantiles", number(&S::train, &T::num_quantiles)},
      {"learning_rate", number(&S::train, &T::learning_rate)},
      {"epochs", number(&S::train, &T::epochs)},
      {"gradient_steps", number(&S::train, &T::gradient_steps)},
      {"batch_size", number(&S::train, &T::batch_size)},
      {"target_sync_period", number(&S::train, &T::target_sync_period)},
      {"huber_kappa", number(&S::train, &T::huber_kappa)},
      {"reward_scale", number(&S::train, &T::reward_scale)},
      {"train_seed", number(&S::train, &T::seed)},
      {"online_episodes", number(&S::train, &T::online_episodes)},
      {"replay_capacity", number(&S::train, &T::replay_capacity)},
      {"epsilon_start", number(&S::train, &T::epsilon_start)},
      {"epsilon_end", number(&S::train, &T::epsilon_end)},
      {"epsilon_decay_fraction", number(&S::train, &T::epsilon_decay_fraction)},
      {"learning_starts", number(&S::train, &T::learning_starts)},
      {"train_every", number(&S::train, &T::train_every)},
      {"hidden_layers",
       {[](const S& s) { return join_dims(s.train.hidden_layers); },
        [](S& s, const std::string& k, const std::string& v) {
          s.train.hidden_layers = split_dims(k, v);
        }}},
      {"test_episodes", top(&S::test_episodes)},
      {"test_seed", top(&S::test_seed)},
      {"eval_threads", top(&S::eval_threads)},
      {"online_eval_every", top(&S::online_eval_every)},
      {"offline_eval_every", top(&S::offline_eval_every)},
      {"curve_eval_episodes", top(&S::curve_eval_episodes)},
  };
  return table;
}

}  // namespace

void ExperimentSpec::validate() const {
  network.validate();
  train.validate();
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid experiment: ") + what);
  };
  require(test_episodes >= 1, "test_episodes must be >= 1");
  require(eval_threads >= 1, "eval_threads must be >= 1");
  require(online_eval_every >= 1 && offline_eval_every >= 1, "eval periods must be >= 1");
  require(curve_eval_episodes >= 1, "curve_eval_episodes must be >= 1");
  require(!train.hidden_layers.empty(), "hidden_layers must not be empty");

  std::set<std::uint64_t> train_seeds;
  for (int e = 0; e < train.online_episodes; ++e) train_seeds.insert(train_episode_seed(train, e));
  const int checked = std::max(test_episodes, curve_eval_episodes);
  for (int i = 0; i < checked; ++i) {
    require(!train_seeds.count(test_episode_seed(test_seed, i)),
            "a test episode seed coincides with a training episode seed");
  }
}

ExperimentSpec desk_profile() {
  ExperimentSpec s;
  s.profile = "desk";
  s.network = desk_scale_config();
  s.train.gamma = 0.9;
  s.train.learning_rate = 1e-4;
  s.train.online_episodes = 150;
  s.train.epochs = 20;
  s.train.gradient_steps = 500;
  s.test_episodes = 100;
  return s;
}

ExperimentSpec full_profile() {
  ExperimentSpec s;
  s.profile = "full";
  s.network = full_scale_config();
  s.test_episodes = 100;
  s.online_eval_every = 5;
  s.offline_eval_every = 5;
  s.curve_eval_episodes = 20;
  return s;
}

ExperimentSpec profile_by_name(const std::string& name) {
  if (name == "desk") return desk_profile();
  if (name == "full") return full_profile();
  throw std::invalid_argument("unknown profile '" + name + "' (expected desk or full)");
}

ExperimentSpec apply_experiment_overrides(ExperimentSpec spec, const KeyValues& kv) {
  KeyValues network_kv;
  const auto& table = train_fields();
  for (const auto& [key, value] : kv) {
    if (const auto it = table.find(key); it != table.end()) {
      it->second.set(spec, key, value);
    } else {
      network_kv[key] = value;
    }
  }
  spec.network = apply_overrides(spec.network, network_kv);
  spec.validate();
  return spec;
}

KeyValues experiment_key_values(const ExperimentSpec& spec) {
  KeyValues kv = to_key_values(spec.network);
  for (const auto& [key, field] : train_fields()) kv[key] = field.get(spec);
  return kv;
}

std::string serialize_experiment(const ExperimentSpec& spec) {
  std::string out;
  for (const auto& [key, value] : experiment_key_values(spec)) out += key + " = " + value + "\n";
  return out;
}

std::uint64_t experiment_hash(const ExperimentSpec& spec) {
  // Thread count changes wall time only; evaluation is reduced in episode order.
  KeyValues kv = experiment_key_values(spec);
  kv.erase("eval_threads");
  std::string text;
  for (const auto& [key, value] : kv) text += key + " = " + value + "\n";
  return fnv1a64(text.data(), text.size());
}

}  // namespace rrm
