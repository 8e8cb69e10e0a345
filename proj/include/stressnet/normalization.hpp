#pragma once

#include <span>
#include <string>
#include <vector>

namespace stressnet {

enum class Channel { xx, yy };

std::string to_string(Channel c);
Channel parse_channel(const std::string& name);

/// Raw stress bounds (Pa) for min-max scaling of one channel.
struct NormalizationStats {
  double x_min = 0.0;
  double x_max = 1.0;

  /// Throws DomainError unless x_max > x_min.
  void validate() const;

  static NormalizationStats from_values(std::span<const double> values);
};

double normalize(double x_raw, const NormalizationStats& stats);
double denormalize(double x_norm, const NormalizationStats& stats);
std::vector<double> normalize(std::span<const double> raw, const NormalizationStats& stats);
std::vector<double> denormalize(std::span<const double> norm, const NormalizationStats& stats);

}  // namespace stressnet
