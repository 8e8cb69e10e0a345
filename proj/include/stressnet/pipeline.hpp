#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stressnet/fracture_sim.hpp"
#include "stressnet/normalization.hpp"
#include "stressnet/rng.hpp"
#include "stressnet/tensor.hpp"

namespace stressnet {

inline constexpr int kRawRows = 192;
inline constexpr int kRawCols = 128;
inline constexpr int kDownsample = 8;
inline constexpr int kFrameRows = kRawRows / kDownsample;  // 24
inline constexpr int kFrameCols = kRawCols / kDownsample;  // 16

/// 192x128 -> 24x16 blockwise max over 8x8 blocks. ShapeError on any other input shape.
BinaryFrame downsample_frame(const BinaryFrame& frame);

/// One simulation ready for windowing: raw stresses and downsampled damage.
struct PreparedSim {
  std::string name;
  std::uint64_t seed = 0;
  std::optional<int> failure_step;
  std::vector<double> stress_xx;
  std::vector<double> stress_yy;
  std::vector<BinaryFrame> frames;  // 24x16 each

  std::size_t steps() const { return stress_yy.size(); }
  const std::vector<double>& stress(Channel c) const { return c == Channel::xx ? stress_xx : stress_yy; }
};

PreparedSim prepare(const SimulationRecord& record, std::string name);

/// Damage frames start .. start+dt-1 stacked as [rows, cols, dt] with values 0/1.
Tensor damage_window(std::span<const BinaryFrame> frames, std::size_t start, std::size_t dt);

struct WindowSample {
  std::vector<double> stress;  // dt normalized values
  Tensor damage;               // rows x cols x dt
  double target = 0.0;         // normalized stress at step start + dt
};

/// T - dt; DataError when T < dt + 1.
std::size_t window_count(std::size_t steps, std::size_t dt);

/// Sample k takes steps k .. k+dt-1 as input and step k+dt as target.
std::vector<WindowSample> make_training_windows(std::span<const double> normalized, std::span<const BinaryFrame> frames,
                                                std::size_t dt);
std::vector<WindowSample> make_training_windows(const PreparedSim& sim, Channel channel,
                                                const NormalizationStats& stats, std::size_t dt);

struct DatasetSplit {
  std::vector<std::size_t> train_pool;  // sorted
  std::vector<std::size_t> test;        // sorted
};

/// Random fixed partition of record indices into n_train and the rest.
DatasetSplit split_dataset(std::size_t n_records, std::size_t n_train, Rng& rng);

struct EpochSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;  // sorted
};

/// Draws n_val validation sims from the pool; the remaining sims keep pool order.
EpochSplit sample_validation(std::span<const std::size_t> pool, std::size_t n_val, Rng& rng);

/// Min/max of one channel over the given sims.
NormalizationStats fit_stats(std::span<const PreparedSim> sims, std::span<const std::size_t> indices, Channel channel);

/// FNV-1a over every sim's meta.json and stress.csv, in directory order.
std::uint64_t dataset_hash(std::span<const std::filesystem::path> sim_dirs);

inline constexpr char kFrameCacheMagic[] = "SNDS0001";

void write_frame_cache(const std::filesystem::path& path, std::span<const BinaryFrame> frames);
/// DataError on a bad magic or a size that is not a whole number of 24x16 frames.
std::vector<BinaryFrame> read_frame_cache(const std::filesystem::path& path);

/// Loads every sim under root, downsampling the PGM frames or reusing
/// root/.cache/<hash>/<sim>.snds when present.
std::vector<PreparedSim> load_prepared(const std::filesystem::path& root, bool use_cache = true);

}  // namespace stressnet
