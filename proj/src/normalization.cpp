#include "stressnet/normalization.hpp"

#include <algorithm>
#include <cmath>

#include "stressnet/errors.hpp"

namespace stressnet {

std::string to_string(Channel c) { return c == Channel::xx ? "xx" : "yy"; }

Channel parse_channel(const std::string& name) {
  if (name == "xx") return Channel::xx;
  if (name == "yy") return Channel::yy;
  throw DomainError("unknown channel '" + name + "' (expected xx or yy)");
}

void NormalizationStats::validate() const {
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_max > x_min))
    throw DomainError("degenerate normalization stats: x_max must exceed x_min");
}

NormalizationStats NormalizationStats::from_values(std::span<const double> values) {
  if (values.empty()) throw DomainError("normalization stats from an empty set");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  NormalizationStats s{*lo, *hi};
  s.validate();
  return s;
}

double normalize(double x_raw, const NormalizationStats& stats) {
  stats.validate();
  return (x_raw - stats.x_min) / (stats.x_max - stats.x_min);
}

double denormalize(double x_norm, const NormalizationStats& stats) {
  stats.validate();
  return x_norm * (stats.x_max - stats.x_min) + stats.x_min;
}

std::vector<double> normalize(std::span<const double> raw, const NormalizationStats& stats) {
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = normalize(raw[i], stats);
  return out;
}

std::vector<double> denormalize(std::span<const double> norm, const NormalizationStats& stats) {
  std::vector<double> out(norm.size());
  for (std::size_t i = 0; i < norm.size(); ++i) out[i] = denormalize(norm[i], stats);
  return out;
}

}  // namespace stressnet
