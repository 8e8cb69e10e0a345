#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "stressnet/layers.hpp"
#include "stressnet/normalization.hpp"
#include "stressnet/params.hpp"
#include "stressnet/tensor.hpp"

namespace stressnet {

struct ConvBlock {
  std::size_t kernel = 3;
  std::size_t pool = 2;

  friend bool operator==(const ConvBlock&, const ConvBlock&) = default;
};

struct StressNetConfig {
  std::size_t delta_t = 10;
  std::size_t feature_dim = 32;
  std::size_t hidden_dim = 32;
  std::size_t frame_rows = 24;
  std::size_t frame_cols = 16;
  // 24x16 -> conv3 22x14 -> pool2 11x7 -> conv2 10x6 -> pool2 5x3
  std::vector<ConvBlock> conv_blocks{{3, 2}, {2, 2}};

  /// Throws ShapeError if a block leaves no spatial extent or a pool does not divide.
  void validate() const;

  /// Spatial extent of the TI-CNN output feeding the per-step FC layer.
  std::pair<std::size_t, std::size_t> feature_map_extent() const;

  /// Reduced width used by the desk-scale profile.
  static StressNetConfig desk();

  friend bool operator==(const StressNetConfig&, const StressNetConfig&) = default;
};

/// Two-branch surrogate. Left branch: Bi-LSTM over the stress window. Right
/// branch: TI-CNN blocks, per-step FC, Bi-LSTM over the damage window. Both
/// produce D x dt; they are stacked per step (2D x dt), passed through a fusion
/// Bi-LSTM, and the last step of the fusion output feeds a sigmoid head.
class StressNet {
 public:
  static constexpr bool kUsesDamage = true;

  explicit StressNet(StressNetConfig config, Channel channel = Channel::yy, std::uint64_t seed = 0);

  /// Predicted normalized stress at the step after the window, in (0, 1).
  double forward(std::span<const double> stress_window, const Tensor& damage_window);

  /// Accumulates parameter gradients for d loss / d prediction.
  void backward(double d_pred);

  ParamStore params();
  void zero_parameters();

  std::size_t window() const { return config_.delta_t; }
  const StressNetConfig& config() const { return config_; }

  Channel channel = Channel::yy;
  NormalizationStats stats;

  /// Intermediate results of the most recent forward pass.
  struct Activations {
    Tensor stress_features;   // D x dt, left branch output
    Tensor damage_features;   // D x dt, per-step FC output before the damage Bi-LSTM
    Tensor damage_encoded;    // D x dt, damage Bi-LSTM output
    Tensor fused_input;       // 2D x dt
    Tensor fusion_output;     // D x dt
  };
  const Activations& activations() const { return acts_; }

  BiLstm stress_branch;
  std::vector<TiConvLayer> convs;
  std::vector<PoolLayer> pools;
  FcLayer damage_fc;
  BiLstm damage_branch;
  BiLstm fusion;
  Dense head;

 private:
  StressNetConfig config_;
  Activations acts_;
  bool valid_ = false;
};

inline constexpr char kStressNetMagic[] = "SNCKPT01";

void save_checkpoint(StressNet& model, const std::filesystem::path& path);
StressNet load_checkpoint(const std::filesystem::path& path);
/// Loads into a model built from `runtime`; ShapeError if the stored config disagrees.
StressNet load_checkpoint(const std::filesystem::path& path, const StressNetConfig& runtime);

}  // namespace stressnet
