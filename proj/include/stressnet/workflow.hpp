#pragma once

// Run-level operations shared by the command-line tool and the Python module.
//
// Layout under run_dir (default <data_dir>/run):
//   split.json                         fixed train-pool / test partition and the dataset hash
//   <model>_<channel>.ckpt             e.g. stressnet_dynamic_loss_yy.ckpt
//   <model>_<channel>_history.csv
//   <model>_<channel>_train_config.json
//   results_table.csv, results_table.txt
//   <model>/<channel>/rollout_<sim>.csv
//   <channel>/plot_<sim>.svg

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "stressnet/baselines.hpp"
#include "stressnet/evaluate.hpp"
#include "stressnet/model.hpp"
#include "stressnet/pipeline.hpp"
#include "stressnet/trainer.hpp"

namespace stressnet {

enum class Profile { desk, paper };
Profile parse_profile(const std::string& name);

enum class ModelKind { stressnet, lstm, bilstm };
ModelKind parse_model_kind(const std::string& name);

/// Table row name, e.g. "StressNet(Dynamic Loss)" or "LSTM".
std::string model_name(ModelKind kind, LossKind loss);

struct RunOptions {
  std::filesystem::path data_dir = "data";
  std::filesystem::path run_dir;  // empty: data_dir / "run"
  std::uint64_t seed = 0;
  Profile profile = Profile::desk;
  bool paper_faithful_norm = false;  // fit min/max over every sim instead of the training pool
  int n_sims = 8;                    // sims written by generate
  std::size_t n_train = 0;           // 0: all but round(6/61 of the sims), at least one held out
  int n_val = -1;                    // per-epoch validation sims; -1: round(6/55 of the pool), at least one
  StressNetConfig stressnet = StressNetConfig::desk();
  BaselineConfig baseline = BaselineConfig::desk();
  TrainConfig train = TrainConfig::desk();
  SimConfig sim;

  std::filesystem::path resolved_run_dir() const;
  std::size_t resolved_n_train(std::size_t n_records) const;
  std::size_t resolved_n_val(std::size_t pool_size) const;

  /// Profile defaults: desk = 8 sims, D = H = 16, 60 epochs; paper = 61 sims,
  /// D = H = 32, 1800 epochs.
  static RunOptions for_profile(Profile profile);

  /// Overrides from a JSON object; unknown keys throw DomainError.
  void apply_json(const std::string& json_text);
};

void generate(const RunOptions& options, std::ostream& log);

struct RunSplit {
  std::uint64_t dataset_hash = 0;
  std::vector<std::size_t> train_pool;
  std::vector<std::size_t> test;
};

/// Reads split.json when it matches the dataset, otherwise draws and writes a new one.
RunSplit load_or_create_split(const RunOptions& options, const std::vector<PreparedSim>& sims);

NormalizationStats run_stats(const RunOptions& options, const std::vector<PreparedSim>& sims, const RunSplit& split,
                             Channel channel);

std::filesystem::path checkpoint_path(const RunOptions& options, const std::string& model, Channel channel);

/// Trains one model on one channel and writes checkpoint, history and config echo.
TrainHistory train_model(const RunOptions& options, ModelKind kind, LossKind loss, Channel channel,
                         std::ostream& log);

/// Rolls out every checkpoint found in run_dir plus the historical average on
/// the test sims; writes the results table, rollout CSVs and plots.
ResultsTable evaluate_run(const RunOptions& options, std::ostream& log);

/// Rolls out one checkpoint on one sim (by directory name) and writes rollout_<sim>.csv into out_dir.
RolloutResult rollout_checkpoint(const RunOptions& options, const std::filesystem::path& checkpoint,
                                 const std::string& sim_name, const std::filesystem::path& out_dir);

/// Plots the truth and every rollout CSV already in run_dir for one sim and channel.
std::filesystem::path plot_sim(const RunOptions& options, const std::string& sim_name, Channel channel);

}  // namespace stressnet
