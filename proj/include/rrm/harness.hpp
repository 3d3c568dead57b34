#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rrm/baselines.hpp"
#include "rrm/dataset.hpp"
#include "rrm/experiment.hpp"
#include "rrm/rl.hpp"

namespace rrm {

/// Missing, stale or mismatched pipeline artifacts.
class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A results directory plus the experiment its artifacts belong to.
struct Workspace {
  std::filesystem::path root;
  ExperimentSpec spec;
  std::ostream* log = nullptr;
};

/// "20" for 0.2; used in artifact names.
std::string fraction_tag(double fraction);

namespace artifacts {
std::filesystem::path manifest(const Workspace& ws);
std::filesystem::path online_checkpoint(const Workspace& ws);
std::filesystem::path online_log(const Workspace& ws);
std::filesystem::path online_curve(const Workspace& ws);
std::filesystem::path dataset(const Workspace& ws, double fraction);
std::filesystem::path offline_checkpoint(const Workspace& ws, Algorithm algo, double fraction);
std::filesystem::path offline_curve(const Workspace& ws, Algorithm algo, double fraction);
std::filesystem::path evaluation(const Workspace& ws, const std::string& label);
std::filesystem::path baselines_summary(const Workspace& ws);
std::filesystem::path figure(const Workspace& ws, int number);
}  // namespace artifacts

/// Which policy `evaluate` runs.
struct PolicySource {
  enum class Kind { Baseline, Online, Offline, Checkpoint };
  Kind kind = Kind::Baseline;
  BaselineKind baseline = BaselineKind::ItLinQ;
  Algorithm algo = Algorithm::Cqr;
  double fraction = 0.2;
  std::filesystem::path checkpoint;

  /// Names used for output files: "itlinq", "online", "cqr_20", or the
  /// checkpoint stem.
  [[nodiscard]] std::string label() const;
};

/// "online", a baseline name, or an offline algorithm (with `fraction`).
PolicySource parse_policy(const std::string& name, double fraction);

struct OnlineStageResult {
  std::size_t transitions = 0;
  std::int64_t gradient_steps = 0;
  double final_greedy_r_score = 0.0;  // on the curve evaluation episodes
};

OnlineStageResult stage_train_online(const Workspace& ws);
OfflineDataset stage_collect_dataset(const Workspace& ws, double fraction);
OfflineResult stage_train_offline(const Workspace& ws, Algorithm algo, double fraction);

/// `episodes` of 0 means spec.test_episodes. With `trace`, every slot of
/// every episode is also written there.
EvaluationResult stage_evaluate(const Workspace& ws, const PolicySource& policy, int episodes = 0,
                                const std::optional<std::filesystem::path>& trace = {});

struct BaselineScore {
  BaselineKind kind;
  EvaluationResult result;
};
std::vector<BaselineScore> stage_baselines(const Workspace& ws);

/// Reshapes recorded CSVs into fig3.csv, fig4.csv and fig5.csv.
void stage_export_fig_data(const Workspace& ws, const std::vector<double>& fractions);

/// Every stage in order: online training, datasets, baselines, offline
/// training and evaluation of each algorithm per fraction, figure data.
void stage_pipeline(const Workspace& ws, const std::vector<double>& fractions);

/// Metadata and summary statistics, as printed by `dataset inspect`.
std::string describe_dataset(const OfflineDataset& dataset);

}  // namespace rrm
