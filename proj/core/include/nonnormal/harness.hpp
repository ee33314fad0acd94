#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nonnormal/init.hpp"
#include "nonnormal/rnn.hpp"
#include "nonnormal/tasks.hpp"

namespace nonnormal {

/// Fully resolved settings of a single training run. Everything a run does
/// is derived from these fields, so replaying a RunConfig reproduces the
/// run's validation losses bit for bit.
struct RunConfig {
  TaskKind task = TaskKind::kCopy;
  int t_len = 100;
  int hidden = 100;
  Nonlinearity nonlinearity = Nonlinearity::kElu;
  InitSpec init;
  double learning_rate = 1e-4;
  int batch_size = 16;
  long steps = 1000;        ///< optimizer steps (copy, addition)
  long eval_every = 100;    ///< steps between validation passes (copy, addition)
  int validation_size = 256;
  int test_size = 0;        ///< psMNIST test images scored at the end; 0 = none
  int epochs = 1;           ///< psMNIST
  int train_subset = 0;     ///< psMNIST training images per epoch; 0 = all
  bool stop_at_success = false;
  double rmsprop_decay = 0.9;
  double rmsprop_epsilon = 1e-8;
  std::string data_dir;
  std::uint64_t permutation_seed = 1;

  /// Stable identifier, e.g. "copy-T100-chain-p1.02-lr0.0003-s1".
  std::string run_id() const;
  int input_size() const;
  int output_size() const;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

struct RunRecord {
  RunConfig config;
  std::vector<long> eval_steps;  ///< optimizer step of each validation pass
  std::vector<double> validation_losses;
  std::optional<double> test_loss;
  double baseline = 0.0;
  double min_validation_loss = 0.0;
  bool success = false;  ///< min validation loss < 0.5 · baseline
  bool diverged = false;
  long divergence_step = -1;
  double wall_seconds = 0.0;
  std::string checkpoint;  ///< final-parameter checkpoint, if saved (relative to runs.jsonl on disk)

  double final_validation_loss() const;
};

void to_json(nlohmann::json& j, const RunRecord& r);
void from_json(const nlohmann::json& j, RunRecord& r);

/// A grid of runs. Each init kind is crossed with its own parameter list
/// (lambdas for identity/orthogonal, alphas for chain, betas for
/// feedback_chain), then with the learning rates and seeds.
struct ExperimentConfig {
  TaskKind task = TaskKind::kCopy;
  int t_len = 100;
  int hidden = 100;
  Nonlinearity nonlinearity = Nonlinearity::kElu;
  std::vector<InitKind> inits;
  std::vector<double> lambdas;
  std::vector<double> alphas;
  std::vector<double> betas;
  std::vector<double> learning_rates;
  std::vector<std::uint64_t> seeds;
  int batch_size = 16;
  long steps = 1000;
  long eval_every = 100;
  int validation_size = 256;
  int test_size = 0;
  int epochs = 1;
  int train_subset = 0;
  bool stop_at_success = false;
  double rmsprop_decay = 0.9;
  double rmsprop_epsilon = 1e-8;
  std::string data_dir;
  std::uint64_t permutation_seed = 1;
  std::string output_dir = "runs";
  int workers = 1;
  bool save_checkpoints = true;
};

/// Parses the key = value format documented in docs/config-format.md.
ExperimentConfig parse_experiment_config(std::istream& is);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
/// Canonical text form; parsing it yields the same configuration.
std::string format_experiment_config(const ExperimentConfig& cfg);

/// Exact cross product in grid order (init, model parameter, learning rate, seed).
std::vector<RunConfig> expand_grid(const ExperimentConfig& cfg);

struct TrainOptions {
  std::optional<std::filesystem::path> checkpoint_path;
  const PsMnist* mnist = nullptr;  ///< preloaded data for psMNIST runs
  std::function<void(long step, double validation_loss)> on_eval;
};

/// Trains one network. Divergence ends the run early and is recorded, not thrown.
RunRecord train_run(const RunConfig& cfg, const TrainOptions& options = {});

/// Loads every record in a JSON-lines file; a truncated final line is ignored.
/// Relative checkpoint paths are resolved against the file's directory.
std::vector<RunRecord> read_records(const std::filesystem::path& path);

using ProgressCallback = std::function<void(std::size_t done, std::size_t total, const RunRecord&)>;

/// Runs the whole grid with up to cfg.workers threads, appending each record
/// to <output_dir>/runs.jsonl as soon as it finishes. Runs already present
/// in that file are not repeated. Returns records in grid order.
std::vector<RunRecord> run_grid(const ExperimentConfig& cfg, const ProgressCallback& progress = {});

struct SuccessCount {
  InitKind init;
  int successes = 0;
  int runs = 0;
};

/// Successful runs per init kind, in the order kinds first appear.
std::vector<SuccessCount> success_summary(const std::vector<RunRecord>& records);

struct BetaRow {
  double beta = 0.0;
  double mean_loss = 0.0;
  double sem = 0.0;
  int runs = 0;
};

struct BetaSweep {
  std::vector<BetaRow> rows;  ///< ascending beta
  std::string notice;         ///< set when no run beat the baseline
};

/// Final validation loss against beta over feedback-chain runs that finished
/// below the task baseline.
BetaSweep beta_sweep(const std::vector<RunRecord>& records);

/// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace nonnormal
