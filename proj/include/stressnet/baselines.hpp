#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "stressnet/layers.hpp"
#include "stressnet/normalization.hpp"
#include "stressnet/params.hpp"

namespace stressnet {

/// Per-step mean of the training series.
struct HistoricalAverage {
  std::vector<double> mean;

  /// DataError on an empty set or unequal lengths.
  static HistoricalAverage fit(std::span<const std::vector<double>> series);
  double predict(std::size_t t) const;
};

struct BaselineConfig {
  std::size_t delta_t = 50;
  std::size_t hidden_dim = 32;
  std::size_t feature_dim = 32;  // Bi-LSTM per-step output width

  static BaselineConfig desk();
  friend bool operator==(const BaselineConfig&, const BaselineConfig&) = default;
};

/// Stress-only unidirectional LSTM; the last hidden state feeds a sigmoid head.
class LstmBaseline {
 public:
  static constexpr bool kUsesDamage = false;
  static constexpr char kName[] = "LSTM";

  explicit LstmBaseline(BaselineConfig config, Channel channel = Channel::yy, std::uint64_t seed = 0);

  double forward(std::span<const double> stress_window);
  void backward(double d_pred);
  ParamStore params();

  std::size_t window() const { return config_.delta_t; }
  const BaselineConfig& config() const { return config_; }

  Channel channel = Channel::yy;
  NormalizationStats stats;
  Lstm lstm;
  Dense head;

 private:
  BaselineConfig config_;
  bool valid_ = false;
};

/// Stress-only Bi-LSTM; the last step of its output sequence feeds a sigmoid head.
class BiLstmBaseline {
 public:
  static constexpr bool kUsesDamage = false;
  static constexpr char kName[] = "Bi-LSTM";

  explicit BiLstmBaseline(BaselineConfig config, Channel channel = Channel::yy, std::uint64_t seed = 0);

  double forward(std::span<const double> stress_window);
  void backward(double d_pred);
  ParamStore params();

  std::size_t window() const { return config_.delta_t; }
  const BaselineConfig& config() const { return config_; }

  Channel channel = Channel::yy;
  NormalizationStats stats;
  BiLstm encoder;
  Dense head;

 private:
  BaselineConfig config_;
  bool valid_ = false;
};

inline constexpr char kLstmMagic[] = "SNCKPTL1";
inline constexpr char kBiLstmMagic[] = "SNCKPTB1";

void save_checkpoint(LstmBaseline& model, const std::filesystem::path& path);
void save_checkpoint(BiLstmBaseline& model, const std::filesystem::path& path);
LstmBaseline load_lstm_baseline(const std::filesystem::path& path);
BiLstmBaseline load_bilstm_baseline(const std::filesystem::path& path);

}  // namespace stressnet
