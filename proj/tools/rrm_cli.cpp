// Command-line front end for the simulation and learning pipeline.

#include <fstream>
#include <iostream>
#include <sstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rrm/harness.hpp"
#include "rrm/io.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitArtifact = 2;

struct Common {
  std::string profile = "desk";
  std::string config_file;
  std::vector<std::string> sets;
  std::string out = "results";
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--profile", c.profile, "desk (N=4 M=24 K=3 T=200) or full (T=2000)")
      ->check(CLI::IsMember({"desk", "full"}));
  cmd->add_option("--config", c.config_file, "flat key = value file applied over the profile");
  cmd->add_option("--set", c.sets, "key=value override, applied after --config")
      ->allow_extra_args(false);
  cmd->add_option("--out", c.out, "results directory");
  cmd->add_flag("--quiet", c.quiet, "suppress progress lines");
}

rrm::Workspace make_workspace(const Common& c) {
  rrm::ExperimentSpec spec = rrm::profile_by_name(c.profile);
  rrm::KeyValues kv;
  if (!c.config_file.empty()) {
    std::ifstream in(c.config_file);
    if (!in) throw std::invalid_argument("cannot open config file '" + c.config_file + "'");
    std::stringstream text;
    text << in.rdbuf();
    kv = rrm::parse_key_values(text.str());
  }
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw std::invalid_argument("--set expects key=value, got '" + s + "'");
    }
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  rrm::Workspace ws;
  ws.spec = rrm::apply_experiment_overrides(spec, kv);
  ws.root = c.out;
  ws.log = c.quiet ? nullptr : &std::cerr;
  return ws;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-AP downlink scheduling: simulator, baselines, online and offline RL"};
  app.require_subcommand(1);

  Common common;
  double fraction = 0.2;
  std::vector<double> fractions{0.2, 0.1};
  std::string algo = "cqr";
  std::string policy = "itlinq";
  std::string checkpoint;
  std::string trace;
  int episodes = 0;
  std::string dataset_path;

  auto* online = app.add_subcommand("train-online", "train the online DQN behaviour policy");
  add_common(online, common);

  auto* collect = app.add_subcommand("collect-dataset", "slice the last fraction of the online log");
  add_common(collect, common);
  collect->add_option("--fraction", fraction, "fraction of transitions kept")
      ->check(CLI::Range(1e-9, 1.0));

  auto* offline = app.add_subcommand("train-offline", "train an offline learner on a dataset");
  add_common(offline, common);
  offline->add_option("--algo", algo, "dqn, cql, qrdqn or cqr")
      ->check(CLI::IsMember({"dqn", "cql", "qrdqn", "cqr"}));
  offline->add_option("--fraction", fraction, "dataset to train on")->check(CLI::Range(1e-9, 1.0));

  auto* eval = app.add_subcommand("evaluate", "score a policy on held-out test episodes");
  add_common(eval, common);
  eval->add_option("--policy", policy,
                   "online, random, full-reuse, tdm, itlinq, dqn, cql, qrdqn or cqr");
  eval->add_option("--fraction", fraction, "dataset fraction of an offline policy")
      ->check(CLI::Range(1e-9, 1.0));
  eval->add_option("--checkpoint", checkpoint, "evaluate this checkpoint instead of --policy");
  eval->add_option("--episodes", episodes, "test episodes (default: test_episodes)")
      ->check(CLI::PositiveNumber);
  eval->add_option("--trace", trace, "also write a per-slot trace CSV here");

  auto* baselines = app.add_subcommand("baselines", "evaluate the four heuristic schedulers");
  add_common(baselines, common);

  auto* fig = app.add_subcommand("export-fig-data", "write fig3/fig4/fig5 CSV tables");
  add_common(fig, common);
  fig->add_option("--fractions", fractions, "dataset fractions to include")->delimiter(',');

  auto* pipeline = app.add_subcommand("pipeline", "run every stage in order");
  add_common(pipeline, common);
  pipeline->add_option("--fractions", fractions, "dataset fractions")->delimiter(',');

  auto* full = app.add_subcommand(
      "full-scale", "the whole pipeline on the full profile (multi-hour)");
  add_common(full, common);

  auto* dataset = app.add_subcommand("dataset", "dataset utilities");
  dataset->require_subcommand(1);
  auto* inspect = dataset->add_subcommand("inspect", "print metadata and summary statistics");
  inspect->add_option("path", dataset_path, "dataset file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (inspect->parsed()) {
      std::cout << rrm::describe_dataset(rrm::load_dataset(dataset_path));
      return 0;
    }
    if (full->parsed()) common.profile = "full";
    const rrm::Workspace ws = make_workspace(common);

    if (online->parsed()) {
      const auto r = rrm::stage_train_online(ws);
      std::cout << "transitions " << r.transitions << ", gradient steps " << r.gradient_steps
                << ", final greedy Rscore " << r.final_greedy_r_score << "\n";
    } else if (collect->parsed()) {
      const auto d = rrm::stage_collect_dataset(ws, fraction);
      std::cout << rrm::artifacts::dataset(ws, fraction).string() << ": "
                << d.transitions.size() << " transitions\n";
    } else if (offline->parsed()) {
      rrm::stage_train_offline(ws, rrm::parse_algorithm(algo), fraction);
    } else if (eval->parsed()) {
      rrm::PolicySource source;
      if (!checkpoint.empty()) {
        source.kind = rrm::PolicySource::Kind::Checkpoint;
        source.checkpoint = checkpoint;
      } else {
        source = rrm::parse_policy(policy, fraction);
      }
      const auto r = rrm::stage_evaluate(
          ws, source, episodes,
          trace.empty() ? std::nullopt : std::optional<std::filesystem::path>(trace));
      std::cout << source.label() << " sum_rate " << r.mean.sum_rate << " five_percentile "
                << r.mean.five_percentile_rate << " r_score " << r.mean.r_score << "\n";
    } else if (baselines->parsed()) {
      for (const auto& s : rrm::stage_baselines(ws)) {
        std::cout << rrm::baseline_name(s.kind) << " r_score " << s.result.mean.r_score << "\n";
      }
    } else if (fig->parsed()) {
      rrm::stage_export_fig_data(ws, fractions);
    } else if (pipeline->parsed() || full->parsed()) {
      rrm::stage_pipeline(ws, full->parsed() ? std::vector<double>{0.2, 0.1} : fractions);
    }
    return 0;
  } catch (const rrm::ArtifactError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitArtifact;
  } catch (const rrm::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitArtifact;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitArtifact;
  }
}
