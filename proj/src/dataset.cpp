#include "rrm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rrm/io.hpp"

namespace rrm {

namespace {

constexpr char kMagic[8] = {'R', 'R', 'M', 'D', 'S', 'E', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void put_scaling(ByteWriter& w, const ObservationScaling& s) {
  w.put(s.sinr_min_db);
  w.put(s.sinr_max_db);
  w.put(s.sinr_offset_db);
  w.put(s.sinr_scale_db);
  w.put(s.logw_offset);
  w.put(s.logw_scale);
}

ObservationScaling get_scaling(ByteReader& r) {
  ObservationScaling s;
  s.sinr_min_db = r.get<double>();
  s.sinr_max_db = r.get<double>();
  s.sinr_offset_db = r.get<double>();
  s.sinr_scale_db = r.get<double>();
  s.logw_offset = r.get<double>();
  s.logw_scale = r.get<double>();
  return s;
}

std::int32_t to_i32(int value) { return static_cast<std::int32_t>(value); }

int positive_dim(std::uint32_t value, const char* what) {
  if (value == 0 || value > (1u << 24)) {
    throw FormatError(std::string("dataset header: implausible ") + what);
  }
  return static_cast<int>(value);
}

}  // namespace

std::size_t dataset_record_bytes(int obs_dim) {
  return 2 * static_cast<std::size_t>(obs_dim) * sizeof(double) + sizeof(std::int32_t) +
         sizeof(double) + 1;
}

DatasetMetadata metadata_for(const NetworkConfig& config, std::string source_policy,
                             double fraction, std::uint64_t seed, std::int64_t created_unix) {
  if (source_policy.size() > kSourcePolicyBytes) {
    throw std::invalid_argument("source policy id longer than 32 bytes");
  }
  DatasetMetadata meta;
  meta.num_aps = config.num_aps;
  meta.num_ues = config.num_ues;
  meta.top_k = config.top_k;
  meta.obs_dim = config.obs_dim();
  meta.num_actions = config.num_actions();
  meta.config_hash = config_hash(config);
  meta.source_policy = std::move(source_policy);
  meta.fraction = fraction;
  meta.obs_scaling = config.obs;
  meta.seed = seed;
  meta.created_unix = created_unix;
  return meta;
}

OfflineDataset slice_last_fraction(std::span<const Transition> log, double fraction,
                                   DatasetMetadata meta) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::domain_error("slice_last_fraction: fraction must lie in (0, 1]");
  }
  if (log.empty()) throw std::invalid_argument("slice_last_fraction: empty transition log");
  // 0.2 is not exact in binary; the slack keeps 0.2 * 10 from rounding up to 3.
  const double exact = fraction * static_cast<double>(log.size());
  auto keep = static_cast<std::size_t>(std::ceil(exact - 1e-6));
  keep = std::clamp<std::size_t>(keep, 1, log.size());
  OfflineDataset out;
  meta.fraction = fraction;
  out.meta = std::move(meta);
  out.transitions.assign(log.end() - static_cast<std::ptrdiff_t>(keep), log.end());
  return out;
}

std::vector<char> serialize_dataset(const OfflineDataset& dataset) {
  const DatasetMetadata& m = dataset.meta;
  if (m.source_policy.size() > kSourcePolicyBytes) {
    throw std::invalid_argument("source policy id longer than 32 bytes");
  }
  const auto dim = static_cast<std::size_t>(m.obs_dim);
  ByteWriter w;
  w.put_bytes(kMagic, sizeof kMagic);
  w.put(kVersion);
  for (int v : {m.num_aps, m.num_ues, m.top_k, m.obs_dim, m.num_actions}) {
    w.put(static_cast<std::uint32_t>(v));
  }
  w.put(m.config_hash);
  w.put_fixed_string(m.source_policy, kSourcePolicyBytes);
  w.put(m.fraction);
  put_scaling(w, m.obs_scaling);
  w.put(m.seed);
  w.put(m.created_unix);
  w.put(static_cast<std::uint64_t>(dataset.transitions.size()));
  for (const Transition& t : dataset.transitions) {
    if (t.s.size() != dim || t.s_next.size() != dim) {
      throw std::invalid_argument("serialize_dataset: observation width differs from header");
    }
    w.put_bytes(t.s.data(), dim * sizeof(double));
    w.put(to_i32(t.a));
    w.put(t.r);
    w.put_bytes(t.s_next.data(), dim * sizeof(double));
    w.put(static_cast<std::uint8_t>(t.done ? 1 : 0));
  }
  return w.take();
}

OfflineDataset deserialize_dataset(const std::vector<char>& bytes) {
  ByteReader r(bytes);
  char magic[sizeof kMagic];
  r.get_bytes(magic, sizeof magic);
  if (!std::equal(std::begin(magic), std::end(magic), std::begin(kMagic))) {
    throw FormatError("not a dataset file (bad magic)");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) {
    throw FormatError("unsupported dataset version " + std::to_string(version));
  }
  OfflineDataset out;
  DatasetMetadata& m = out.meta;
  m.num_aps = positive_dim(r.get<std::uint32_t>(), "N");
  m.num_ues = positive_dim(r.get<std::uint32_t>(), "M");
  m.top_k = positive_dim(r.get<std::uint32_t>(), "K");
  m.obs_dim = positive_dim(r.get<std::uint32_t>(), "observation width");
  m.num_actions = positive_dim(r.get<std::uint32_t>(), "action count");
  if (m.obs_dim != 2 * m.num_aps * m.top_k) {
    throw FormatError("dataset header: observation width is not 2NK");
  }
  m.config_hash = r.get<std::uint64_t>();
  m.source_policy = r.get_fixed_string(kSourcePolicyBytes);
  m.fraction = r.get<double>();
  m.obs_scaling = get_scaling(r);
  m.seed = r.get<std::uint64_t>();
  m.created_unix = r.get<std::int64_t>();
  const auto count = r.get<std::uint64_t>();
  if (!(m.fraction > 0.0 && m.fraction <= 1.0)) {
    throw FormatError("dataset header: fraction outside (0, 1]");
  }

  const auto dim = static_cast<std::size_t>(m.obs_dim);
  const std::size_t record = dataset_record_bytes(m.obs_dim);
  if (r.remaining() != count * record) {
    throw FormatError(r.remaining() < count * record ? "truncated dataset file"
                                                      : "trailing bytes after dataset records");
  }
  out.transitions.resize(count);
  for (Transition& t : out.transitions) {
    t.s.resize(dim);
    t.s_next.resize(dim);
    r.get_bytes(t.s.data(), dim * sizeof(double));
    t.a = r.get<std::int32_t>();
    t.r = r.get<double>();
    r.get_bytes(t.s_next.data(), dim * sizeof(double));
    const auto done = r.get<std::uint8_t>();
    if (done > 1) throw FormatError("dataset record: corrupt done flag");
    t.done = done == 1;
    if (t.a < 0 || t.a >= m.num_actions) throw FormatError("dataset record: action out of range");
  }
  return out;
}

void save_dataset(const OfflineDataset& dataset, const std::string& path) {
  write_file_atomic(path, serialize_dataset(dataset));
}

OfflineDataset load_dataset(const std::string& path) {
  return deserialize_dataset(read_file(path));
}

void check_dataset_matches(const DatasetMetadata& meta, const NetworkConfig& config) {
  if (meta.num_aps != config.num_aps || meta.num_ues != config.num_ues ||
      meta.top_k != config.top_k || meta.obs_dim != config.obs_dim() ||
      meta.num_actions != config.num_actions()) {
    throw FormatError("dataset dimensions do not match the requested configuration");
  }
  if (meta.config_hash != config_hash(config)) {
    throw FormatError("dataset config hash " + hash_hex(meta.config_hash) +
                      " does not match configuration " + hash_hex(config_hash(config)));
  }
  if (!(meta.obs_scaling == config.obs)) {
    throw FormatError("dataset observation scaling does not match the configuration");
  }
}

std::vector<const Transition*> sample_batch(const OfflineDataset& dataset, std::size_t batch_size,
                                            Rng& rng) {
  if (dataset.transitions.empty()) throw std::logic_error("sample_batch: empty dataset");
  std::uniform_int_distribution<std::size_t> pick(0, dataset.transitions.size() - 1);
  std::vector<const Transition*> out(batch_size);
  for (auto& p : out) p = &dataset.transitions[pick(rng)];
  return out;
}

DatasetSummary summarize(const OfflineDataset& dataset) {
  DatasetSummary s;
  s.count = dataset.transitions.size();
  s.action_histogram.assign(static_cast<std::size_t>(std::max(dataset.meta.num_actions, 0)), 0);
  double sum = 0.0, sum_sq = 0.0;
  for (const Transition& t : dataset.transitions) {
    sum += t.r;
    sum_sq += t.r * t.r;
    if (t.done) ++s.terminal_count;
    if (t.a >= 0 && static_cast<std::size_t>(t.a) < s.action_histogram.size()) {
      ++s.action_histogram[t.a];
    }
  }
  if (s.count > 0) {
    s.reward_mean = sum / s.count;
    s.reward_std = std::sqrt(std::max(0.0, sum_sq / s.count - s.reward_mean * s.reward_mean));
  }
  return s;
}

}  // namespace rrm
