#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "stressnet/baselines.hpp"
#include "stressnet/normalization.hpp"
#include "stressnet/pipeline.hpp"
#include "stressnet/rollout.hpp"

namespace stressnet {

/// Row names in table order.
inline const std::vector<std::string> kModelOrder = {
    "Historical Average", "LSTM", "Bi-LSTM", "StressNet(MSE)", "StressNet(MAPE)", "StressNet(Dynamic Loss)"};

/// Directory-safe name: "StressNet(Dynamic Loss)" -> "stressnet_dynamic_loss".
std::string model_slug(const std::string& model);

/// Historical-average forecast for steps dt .. T-1 of one sim, scored like a rollout.
/// `mean_norm` is the per-step mean of normalized training stress.
RolloutResult ha_rollout(const HistoricalAverage& mean_norm, const PreparedSim& sim, Channel channel,
                         const NormalizationStats& stats, std::size_t dt);

struct ResultRow {
  std::string model;
  Channel channel = Channel::yy;
  double mape = 0.0;             // mean over sims of per-sim raw MAPE
  double mape_normalized = 0.0;  // same on the normalized scale
  std::size_t n_sims = 0;
};

/// Per-model, per-channel mean of per-sim MAPEs.
ResultRow summarize(const std::string& model, Channel channel, std::span<const RolloutResult> results);

class ResultsTable {
 public:
  /// Throws DomainError if the model/channel pair is already present.
  void add(const ResultRow& row);
  const std::vector<ResultRow>& rows() const { return rows_; }
  const ResultRow* find(const std::string& model, Channel channel) const;

  /// Models as rows, channels xx and yy as columns; raw-scale MAPE with the
  /// normalized-scale value in brackets.
  std::string to_text() const;
  /// Header model,channel,mape (raw scale).
  void write_csv(const std::filesystem::path& path) const;

 private:
  std::vector<ResultRow> rows_;
};

/// Header t,truth,pred; t is the record step, values are raw Pa.
void write_rollout_csv(const std::filesystem::path& path, const RolloutResult& r);

struct RolloutCsv {
  std::vector<std::size_t> t;
  std::vector<double> truth;
  std::vector<double> pred;
};
RolloutCsv read_rollout_csv(const std::filesystem::path& path);

struct PlotSeries {
  std::string label;
  std::vector<double> values;
};

/// Standalone SVG with the truth and each series as polylines, axes and a
/// legend. `first_step` is the record step of values[0]. Non-finite values
/// are left out, so shorter forecasts can be padded with NaN. ShapeError if
/// the series lengths differ from the truth.
std::string render_plot(const std::string& title, std::size_t first_step, std::span<const double> truth,
                        std::span<const PlotSeries> series);
void write_plot(const std::filesystem::path& path, const std::string& title, std::size_t first_step,
                std::span<const double> truth, std::span<const PlotSeries> series);

}  // namespace stressnet
