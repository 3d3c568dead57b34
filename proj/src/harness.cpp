#include "rrm/harness.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rrm/io.hpp"

namespace rrm {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const std::vector<Algorithm> kAlgorithms{Algorithm::Dqn, Algorithm::Cql, Algorithm::QrDqn,
                                         Algorithm::Cqr};
const std::vector<BaselineKind> kBaselines{BaselineKind::RandomWalk, BaselineKind::FullReuse,
                                           BaselineKind::Tdm, BaselineKind::ItLinQ};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void say(const Workspace& ws, const std::string& line) {
  if (ws.log) *ws.log << line << '\n' << std::flush;
}

std::string rel(const Workspace& ws, const fs::path& p) {
  return fs::relative(p, ws.root).generic_string();
}

std::int64_t creation_time() {
  // Honour SOURCE_DATE_EPOCH so datasets can be rebuilt byte for byte.
  if (const char* fixed = std::getenv("SOURCE_DATE_EPOCH")) {
    try {
      return std::stoll(fixed);
    } catch (const std::exception&) {
    }
  }
  return static_cast<std::int64_t>(std::time(nullptr));
}

// Rows of comma-separated text. Every file carries a config_hash column
// holding the experiment hash.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {
    header_.push_back("config_hash");
  }

  void row(std::vector<std::string> cells, const std::string& hash) {
    cells.push_back(hash);
    if (cells.size() != header_.size()) throw std::logic_error("csv row width mismatch");
    rows_.push_back(std::move(cells));
  }

  void write(const fs::path& path) const {
    std::string text;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) text += (i ? "," : "") + cells[i];
      text += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    fs::create_directories(path.parent_path());
    write_file_atomic(path.string(), std::string_view(text));
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  [[nodiscard]] std::size_t column(const std::string& name, const fs::path& source) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw ArtifactError(source.string() + ": missing column '" + name + "'");
  }
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream in(line);
  std::string cell;
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

// Reads a CSV written by this harness and checks its config_hash column.
Table read_table(const fs::path& path, const std::string& expected_hash) {
  std::ifstream in(path);
  if (!in) throw ArtifactError("missing " + path.string());
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw ArtifactError(path.string() + ": empty file");
  t.header = split_csv_line(line);
  const std::size_t hash_col = t.column("config_hash", path);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != t.header.size()) throw ArtifactError(path.string() + ": ragged row");
    if (cells[hash_col] != expected_hash) {
      throw ArtifactError(path.string() + " was produced under configuration " +
                          cells[hash_col] + ", not " + expected_hash);
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

double cell_number(const std::string& text, const fs::path& source) {
  try {
    return std::stod(text);
  } catch (const std::exception&) {
    throw ArtifactError(source.string() + ": expected a number, found '" + text + "'");
  }
}

// Stage ledger kept next to the artifacts. Each entry records the experiment
// it ran under and the content hash of every file it read or wrote.
class Manifest {
 public:
  explicit Manifest(const Workspace& ws) : ws_(ws), path_(artifacts::manifest(ws)) {
    if (fs::exists(path_)) {
      try {
        doc_ = json::parse(std::ifstream(path_));
      } catch (const json::exception& e) {
        throw ArtifactError("unreadable manifest " + path_.string() + ": " + e.what());
      }
    }
    if (!doc_.is_object()) doc_ = json::object();
    if (!doc_.contains("stages")) doc_["stages"] = json::object();
  }

  // Throws unless `path` exists, was written by a recorded stage of this
  // same experiment, and is unchanged since.
  void verify_input(const fs::path& path, const std::string& producer_hint) const {
    if (!fs::exists(path)) {
      throw ArtifactError("missing input " + path.string() + " (run " + producer_hint + " first)");
    }
    const std::string key = rel(ws_, path);
    for (const auto& [stage, entry] : doc_["stages"].items()) {
      const auto& outputs = entry["outputs"];
      if (!outputs.contains(key)) continue;
      if (entry["config_hash"] != hash_hex(experiment_hash(ws_.spec))) {
        throw ArtifactError(key + " was produced by '" + stage +
                            "' under a different configuration (" +
                            entry["config_hash"].get<std::string>() + ")");
      }
      if (outputs[key] != file_hash(path.string())) {
        throw ArtifactError(key + " changed after '" + stage + "' wrote it");
      }
      return;
    }
    throw ArtifactError("no manifest entry produced " + key + " (run " + producer_hint + " first)");
  }

  void record(const std::string& stage, const std::vector<fs::path>& inputs,
              const std::vector<fs::path>& outputs) {
    json entry;
    entry["config_hash"] = hash_hex(experiment_hash(ws_.spec));
    entry["profile"] = ws_.spec.profile;
    entry["config"] = experiment_key_values(ws_.spec);
    entry["inputs"] = json::object();
    entry["outputs"] = json::object();
    for (const auto& p : inputs) entry["inputs"][rel(ws_, p)] = file_hash(p.string());
    for (const auto& p : outputs) entry["outputs"][rel(ws_, p)] = file_hash(p.string());
    doc_["stages"][stage] = std::move(entry);
    fs::create_directories(path_.parent_path());
    write_file_atomic(path_.string(), std::string_view(doc_.dump(2) + "\n"));
  }

 private:
  const Workspace& ws_;
  fs::path path_;
  json doc_;
};

Mlp load_verified_checkpoint(const Workspace& ws, const fs::path& path, const std::string& hint) {
  Manifest(ws).verify_input(path, hint);
  return load_checkpoint(path.string());
}

int quantiles_of(const Mlp& net, const NetworkConfig& config) {
  if (net.input_dim() != config.obs_dim() || net.output_dim() % config.num_actions() != 0) {
    throw ArtifactError("checkpoint shape does not fit the configured network");
  }
  return net.output_dim() / config.num_actions();
}

PolicyFactory greedy_factory(const Mlp& net, int quantiles) {
  return [net, quantiles] { return std::make_unique<QPolicy>(net, quantiles); };
}

EvaluationResult curve_eval(const Workspace& ws, const Mlp& net, int quantiles) {
  return evaluate(greedy_factory(net, quantiles), ws.spec.network, ws.spec.curve_eval_episodes,
                  ws.spec.test_seed, ws.spec.eval_threads);
}

std::string hash_of(const Workspace& ws) { return hash_hex(experiment_hash(ws.spec)); }

}  // namespace

std::string fraction_tag(double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("dataset fraction must lie in (0, 1]");
  }
  const double pct = fraction * 100.0;
  if (std::abs(pct - std::round(pct)) < 1e-9) return std::to_string(std::lround(pct));
  return num(pct);
}

namespace artifacts {
fs::path manifest(const Workspace& ws) { return ws.root / "manifest.json"; }
fs::path online_checkpoint(const Workspace& ws) { return ws.root / "online" / "online_dqn.ckpt"; }
fs::path online_log(const Workspace& ws) { return ws.root / "online" / "online_log.bin"; }
fs::path online_curve(const Workspace& ws) { return ws.root / "online" / "online_curve.csv"; }
fs::path dataset(const Workspace& ws, double fraction) {
  return ws.root / "datasets" / ("dataset_" + fraction_tag(fraction) + ".bin");
}
fs::path offline_checkpoint(const Workspace& ws, Algorithm algo, double fraction) {
  return ws.root / "offline" / (algorithm_name(algo) + "_" + fraction_tag(fraction) + ".ckpt");
}
fs::path offline_curve(const Workspace& ws, Algorithm algo, double fraction) {
  return ws.root / "offline" /
         (algorithm_name(algo) + "_" + fraction_tag(fraction) + "_curve.csv");
}
fs::path evaluation(const Workspace& ws, const std::string& label) {
  return ws.root / "eval" / (label + ".csv");
}
fs::path baselines_summary(const Workspace& ws) { return ws.root / "eval" / "baselines.csv"; }
fs::path figure(const Workspace& ws, int number) {
  return ws.root / "figs" / ("fig" + std::to_string(number) + ".csv");
}
}  // namespace artifacts

std::string PolicySource::label() const {
  switch (kind) {
    case Kind::Baseline: return baseline_name(baseline);
    case Kind::Online: return "online";
    case Kind::Offline: return algorithm_name(algo) + "_" + fraction_tag(fraction);
    case Kind::Checkpoint: return checkpoint.stem().string();
  }
  return "policy";
}

PolicySource parse_policy(const std::string& name, double fraction) {
  PolicySource p;
  p.fraction = fraction;
  if (name == "online") {
    p.kind = PolicySource::Kind::Online;
    return p;
  }
  for (auto kind : kBaselines) {
    if (baseline_name(kind) == name) {
      p.kind = PolicySource::Kind::Baseline;
      p.baseline = kind;
      return p;
    }
  }
  p.kind = PolicySource::Kind::Offline;
  p.algo = parse_algorithm(name);
  fraction_tag(fraction);
  return p;
}

OnlineStageResult stage_train_online(const Workspace& ws) {
  const ExperimentSpec& spec = ws.spec;
  const std::string hash = hash_of(ws);
  Environment env(spec.network);
  std::vector<std::vector<std::string>> rows;
  double last_greedy = 0.0;
  auto hook = [&](int episode, const Mlp& net, EpisodicEnv&) {
    const double train_score = env.metrics().r_score;
    std::vector<std::string> cells{std::to_string(episode + 1),
                                   num(epsilon_at(spec.train, episode)), num(train_score)};
    const bool check = (episode + 1) % spec.online_eval_every == 0 ||
                       episode + 1 == spec.train.online_episodes;
    if (check) {
      const EvaluationResult r = curve_eval(ws, net, 1);
      last_greedy = r.mean.r_score;
      cells.insert(cells.end(), {num(r.mean.sum_rate), num(r.mean.five_percentile_rate),
                                 num(r.mean.r_score)});
      say(ws, "  episode " + std::to_string(episode + 1) + "  greedy Rscore " +
                  num(r.mean.r_score));
    } else {
      cells.insert(cells.end(), {"", "", ""});
    }
    rows.push_back(std::move(cells));
    return train_score;
  };
  say(ws, "train-online: " + std::to_string(spec.train.online_episodes) + " episodes");
  OnlineResult result = train_online_dqn(env, spec.train, hook);

  Csv curve({"episode", "epsilon", "episode_return", "train_r_score", "greedy_sum_rate",
             "greedy_five_percentile_rate", "greedy_r_score"});
  for (std::size_t e = 0; e < rows.size(); ++e) {
    rows[e].insert(rows[e].begin() + 2, num(result.episode_returns[e]));
    curve.row(rows[e], hash);
  }

  OfflineDataset log;
  log.meta = metadata_for(spec.network, "online-dqn", 1.0, spec.train.seed, creation_time());
  log.transitions = std::move(result.log);
  fs::create_directories(artifacts::online_checkpoint(ws).parent_path());
  save_checkpoint(result.net, artifacts::online_checkpoint(ws).string());
  save_dataset(log, artifacts::online_log(ws).string());
  curve.write(artifacts::online_curve(ws));
  Manifest(ws).record("train-online", {},
                      {artifacts::online_checkpoint(ws), artifacts::online_log(ws),
                       artifacts::online_curve(ws)});
  return {log.transitions.size(), result.gradient_steps, last_greedy};
}

OfflineDataset stage_collect_dataset(const Workspace& ws, double fraction) {
  const fs::path source = artifacts::online_log(ws);
  Manifest(ws).verify_input(source, "train-online");
  OfflineDataset log = load_dataset(source.string());
  check_dataset_matches(log.meta, ws.spec.network);
  DatasetMetadata meta = log.meta;
  meta.created_unix = creation_time();
  OfflineDataset slice = slice_last_fraction(log.transitions, fraction, meta);
  const fs::path out = artifacts::dataset(ws, fraction);
  fs::create_directories(out.parent_path());
  save_dataset(slice, out.string());
  Manifest(ws).record("collect-dataset:" + fraction_tag(fraction), {source}, {out});
  say(ws, "collect-dataset: kept " + std::to_string(slice.transitions.size()) + " of " +
              std::to_string(log.transitions.size()) + " transitions");
  return slice;
}

OfflineResult stage_train_offline(const Workspace& ws, Algorithm algo, double fraction) {
  const ExperimentSpec& spec = ws.spec;
  const fs::path source = artifacts::dataset(ws, fraction);
  Manifest(ws).verify_input(source, "collect-dataset --fraction " + num(fraction));
  const OfflineDataset data = load_dataset(source.string());
  check_dataset_matches(data.meta, spec.network);

  const std::string hash = hash_of(ws);
  const int quantiles = is_distributional(algo) ? spec.train.num_quantiles : 1;
  std::vector<std::vector<std::string>> evals(static_cast<std::size_t>(spec.train.epochs));
  auto hook = [&](int epoch, const Mlp& net) {
    const bool check =
        (epoch + 1) % spec.offline_eval_every == 0 || epoch + 1 == spec.train.epochs;
    if (!check) {
      evals[epoch] = {"", "", ""};
      return std::nan("");
    }
    const EvaluationResult r = curve_eval(ws, net, quantiles);
    evals[epoch] = {num(r.mean.sum_rate), num(r.mean.five_percentile_rate), num(r.mean.r_score)};
    say(ws, "  " + algorithm_name(algo) + " epoch " + std::to_string(epoch + 1) + "  Rscore " +
                num(r.mean.r_score));
    return r.mean.r_score;
  };
  say(ws, "train-offline: " + algorithm_name(algo) + " on " +
              std::to_string(data.transitions.size()) + " transitions");
  OfflineResult result =
      train_offline(data.transitions, spec.network.num_actions(), algo, spec.train, hook);

  Csv curve({"epoch", "loss", "sum_rate", "five_percentile_rate", "r_score"});
  for (int e = 0; e < spec.train.epochs; ++e) {
    std::vector<std::string> cells{std::to_string(e + 1), num(result.epoch_loss[e])};
    cells.insert(cells.end(), evals[e].begin(), evals[e].end());
    curve.row(cells, hash);
  }
  const fs::path ckpt = artifacts::offline_checkpoint(ws, algo, fraction);
  const fs::path curve_path = artifacts::offline_curve(ws, algo, fraction);
  fs::create_directories(ckpt.parent_path());
  save_checkpoint(result.net, ckpt.string());
  curve.write(curve_path);
  Manifest(ws).record("train-offline:" + algorithm_name(algo) + ":" + fraction_tag(fraction),
                      {source}, {ckpt, curve_path});
  return result;
}

EvaluationResult stage_evaluate(const Workspace& ws, const PolicySource& policy, int episodes,
                                const std::optional<fs::path>& trace) {
  const ExperimentSpec& spec = ws.spec;
  const int count = episodes > 0 ? episodes : spec.test_episodes;
  std::vector<fs::path> inputs;
  PolicyFactory factory;
  switch (policy.kind) {
    case PolicySource::Kind::Baseline: {
      const BaselineKind kind = policy.baseline;
      factory = [kind] { return std::make_unique<BaselinePolicy>(kind); };
      break;
    }
    case PolicySource::Kind::Online:
    case PolicySource::Kind::Offline:
    case PolicySource::Kind::Checkpoint: {
      fs::path path = policy.checkpoint;
      std::string hint = "the stage that wrote " + path.string();
      if (policy.kind == PolicySource::Kind::Online) {
        path = artifacts::online_checkpoint(ws);
        hint = "train-online";
      } else if (policy.kind == PolicySource::Kind::Offline) {
        path = artifacts::offline_checkpoint(ws, policy.algo, policy.fraction);
        hint = "train-offline --algo " + algorithm_name(policy.algo) + " --fraction " +
               num(policy.fraction);
      }
      const Mlp net = load_verified_checkpoint(ws, path, hint);
      factory = greedy_factory(net, quantiles_of(net, spec.network));
      inputs.push_back(path);
      break;
    }
  }

  const EvaluationResult result =
      evaluate(factory, spec.network, count, spec.test_seed, spec.eval_threads);
  const std::string hash = hash_of(ws);
  Csv table({"episode", "seed", "sum_rate", "five_percentile_rate", "r_score"});
  for (int e = 0; e < count; ++e) {
    const EpisodeMetrics& m = result.episodes[e];
    table.row({std::to_string(e), std::to_string(test_episode_seed(spec.test_seed, e)),
               num(m.sum_rate), num(m.five_percentile_rate), num(m.r_score)},
              hash);
  }
  table.row({"mean", "", num(result.mean.sum_rate), num(result.mean.five_percentile_rate),
             num(result.mean.r_score)},
            hash);
  const fs::path out = artifacts::evaluation(ws, policy.label());
  table.write(out);
  std::vector<fs::path> outputs{out};

  if (trace) {
    std::vector<std::string> header{"episode", "t", "flat_action", "reward"};
    for (int m = 1; m <= spec.network.num_ues; ++m) header.push_back("rate_" + std::to_string(m));
    Csv rows(header);
    Environment env(spec.network);
    auto p = factory();
    for (int e = 0; e < count; ++e) {
      run_episode(env, *p, test_episode_seed(spec.test_seed, e),
                  [&](int slot, int action, const SlotOutcome& out) {
                    std::vector<std::string> cells{std::to_string(e), std::to_string(slot),
                                                   std::to_string(action), num(out.reward)};
                    for (double r : out.rates) cells.push_back(num(r));
                    rows.row(std::move(cells), hash);
                  });
    }
    rows.write(*trace);
    if (fs::absolute(*trace).string().starts_with(fs::absolute(ws.root).string())) {
      outputs.push_back(*trace);
    }
  }
  Manifest(ws).record("evaluate:" + policy.label(), inputs, outputs);
  say(ws, "evaluate " + policy.label() + ": Rscore " + num(result.mean.r_score) + " (sum " +
              num(result.mean.sum_rate) + ", 5% " + num(result.mean.five_percentile_rate) +
              ") over " + std::to_string(count) + " episodes");
  return result;
}

std::vector<BaselineScore> stage_baselines(const Workspace& ws) {
  std::vector<BaselineScore> scores;
  for (auto kind : kBaselines) {
    PolicySource p;
    p.kind = PolicySource::Kind::Baseline;
    p.baseline = kind;
    scores.push_back({kind, stage_evaluate(ws, p)});
  }
  Csv summary({"policy", "sum_rate", "five_percentile_rate", "r_score"});
  const std::string hash = hash_of(ws);
  for (const auto& s : scores) {
    summary.row({baseline_name(s.kind), num(s.result.mean.sum_rate),
                 num(s.result.mean.five_percentile_rate), num(s.result.mean.r_score)},
                hash);
  }
  summary.write(artifacts::baselines_summary(ws));
  Manifest(ws).record("baselines", {}, {artifacts::baselines_summary(ws)});
  return scores;
}

void stage_export_fig_data(const Workspace& ws, const std::vector<double>& fractions) {
  const std::string hash = hash_of(ws);
  std::vector<std::string> missing;
  auto need = [&](const fs::path& p, const std::string& stage) {
    if (!fs::exists(p)) missing.push_back(rel(ws, p) + " (" + stage + ")");
  };
  need(artifacts::online_curve(ws), "train-online");
  need(artifacts::baselines_summary(ws), "baselines");
  need(artifacts::evaluation(ws, "online"), "evaluate --policy online");
  for (double f : fractions) {
    for (auto algo : kAlgorithms) {
      const std::string args = " --algo " + algorithm_name(algo) + " --fraction " + num(f);
      need(artifacts::offline_curve(ws, algo, f), "train-offline" + args);
      need(artifacts::evaluation(ws, algorithm_name(algo) + "_" + fraction_tag(f)),
           "evaluate --policy" + args.substr(7));
    }
  }
  if (!missing.empty()) {
    std::string msg = "export-fig-data: missing stage outputs:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw ArtifactError(msg);
  }

  // Baseline horizontals.
  const fs::path bpath = artifacts::baselines_summary(ws);
  const Table baselines = read_table(bpath, hash);
  std::map<std::string, std::string> baseline_score;
  for (const auto& r : baselines.rows) {
    baseline_score[r[baselines.column("policy", bpath)]] = r[baselines.column("r_score", bpath)];
  }
  std::vector<std::string> baseline_cols;
  for (auto kind : kBaselines) {
    if (!baseline_score.count(baseline_name(kind))) {
      throw ArtifactError(bpath.string() + ": no row for " + baseline_name(kind));
    }
    baseline_cols.push_back(baseline_score[baseline_name(kind)]);
  }
  auto mean_row = [&](const fs::path& p) {
    const Table t = read_table(p, hash);
    for (const auto& r : t.rows)
      if (r[t.column("episode", p)] == "mean") return std::make_pair(t, r);
    throw ArtifactError(p.string() + ": no summary row");
  };

  {
    const fs::path p = artifacts::online_curve(ws);
    const Table curve = read_table(p, hash);
    Csv fig({"episode", "dqn", "random", "full-reuse", "tdm", "itlinq"});
    for (const auto& r : curve.rows) {
      const std::string& score = r[curve.column("greedy_r_score", p)];
      if (score.empty()) continue;
      std::vector<std::string> cells{r[curve.column("episode", p)], score};
      cells.insert(cells.end(), baseline_cols.begin(), baseline_cols.end());
      fig.row(cells, hash);
    }
    fig.write(artifacts::figure(ws, 3));
  }

  const auto [online_table, online_mean] = mean_row(artifacts::evaluation(ws, "online"));
  const std::string online_score =
      online_mean[online_table.column("r_score", artifacts::evaluation(ws, "online"))];
  {
    std::vector<std::string> header{"fraction", "epoch"};
    for (auto algo : kAlgorithms) header.push_back(algorithm_name(algo));
    header.insert(header.end(), {"online", "random", "full-reuse", "tdm", "itlinq"});
    Csv fig(header);
    for (double f : fractions) {
      std::vector<Table> curves;
      for (auto algo : kAlgorithms) {
        curves.push_back(read_table(artifacts::offline_curve(ws, algo, f), hash));
      }
      const std::size_t epochs = curves.front().rows.size();
      for (std::size_t e = 0; e < epochs; ++e) {
        std::vector<std::string> cells{num(f), curves.front().rows[e][0]};
        bool evaluated = true;
        for (std::size_t a = 0; a < kAlgorithms.size(); ++a) {
          const fs::path p = artifacts::offline_curve(ws, kAlgorithms[a], f);
          if (curves[a].rows.size() != epochs) throw ArtifactError(p.string() + ": epoch count differs");
          const std::string& s = curves[a].rows[e][curves[a].column("r_score", p)];
          evaluated = evaluated && !s.empty();
          cells.push_back(s);
        }
        if (!evaluated) continue;
        cells.push_back(online_score);
        cells.insert(cells.end(), baseline_cols.begin(), baseline_cols.end());
        fig.row(cells, hash);
      }
    }
    fig.write(artifacts::figure(ws, 4));
  }

  {
    Csv fig({"algorithm", "fraction", "metric", "value"});
    for (double f : fractions) {
      for (auto algo : kAlgorithms) {
        const fs::path p = artifacts::evaluation(ws, algorithm_name(algo) + "_" + fraction_tag(f));
        const auto [t, r] = mean_row(p);
        for (const char* metric : {"sum_rate", "five_percentile_rate", "r_score"}) {
          const std::string& v = r[t.column(metric, p)];
          cell_number(v, p);
          fig.row({algorithm_name(algo), num(f), metric, v}, hash);
        }
      }
    }
    fig.write(artifacts::figure(ws, 5));
  }
  Manifest(ws).record("export-fig-data", {},
                      {artifacts::figure(ws, 3), artifacts::figure(ws, 4), artifacts::figure(ws, 5)});
  say(ws, "export-fig-data: wrote " + rel(ws, ws.root / "figs"));
}

void stage_pipeline(const Workspace& ws, const std::vector<double>& fractions) {
  stage_train_online(ws);
  PolicySource online;
  online.kind = PolicySource::Kind::Online;
  stage_evaluate(ws, online);
  stage_baselines(ws);
  for (double f : fractions) {
    stage_collect_dataset(ws, f);
    for (auto algo : kAlgorithms) {
      stage_train_offline(ws, algo, f);
      PolicySource p;
      p.kind = PolicySource::Kind::Offline;
      p.algo = algo;
      p.fraction = f;
      stage_evaluate(ws, p);
    }
  }
  stage_export_fig_data(ws, fractions);
}

std::string describe_dataset(const OfflineDataset& dataset) {
  const DatasetMetadata& m = dataset.meta;
  const DatasetSummary s = summarize(dataset);
  std::ostringstream out;
  out << "N=" << m.num_aps << " M=" << m.num_ues << " K=" << m.top_k << " obs_dim=" << m.obs_dim
      << " actions=" << m.num_actions << "\n"
      << "config_hash=" << hash_hex(m.config_hash) << " source=" << m.source_policy
      << " fraction=" << num(m.fraction) << " seed=" << m.seed << " created=" << m.created_unix
      << "\n"
      << "obs scaling: sinr clip [" << num(m.obs_scaling.sinr_min_db) << ", "
      << num(m.obs_scaling.sinr_max_db) << "] dB, offset " << num(m.obs_scaling.sinr_offset_db)
      << ", scale " << num(m.obs_scaling.sinr_scale_db) << "; log w offset "
      << num(m.obs_scaling.logw_offset) << ", scale " << num(m.obs_scaling.logw_scale) << "\n"
      << "transitions=" << s.count << " terminal=" << s.terminal_count
      << " reward mean=" << num(s.reward_mean) << " std=" << num(s.reward_std) << "\n";
  std::size_t used = 0;
  for (auto c : s.action_histogram) used += c > 0;
  out << "actions used: " << used << " of " << s.action_histogram.size() << "\n";
  std::vector<std::pair<std::size_t, int>> top;
  for (std::size_t a = 0; a < s.action_histogram.size(); ++a) {
    if (s.action_histogram[a] > 0) top.emplace_back(s.action_histogram[a], static_cast<int>(a));
  }
  std::sort(top.begin(), top.end(), [](const auto& x, const auto& y) {
    return x.first != y.first ? x.first > y.first : x.second < y.second;
  });
  out << "most frequent actions:";
  for (std::size_t i = 0; i < std::min<std::size_t>(10, top.size()); ++i) {
    out << " " << top[i].second << "(" << top[i].first << ")";
  }
  out << "\n";
  return out.str();
}

}  // namespace rrm
