#include "stressnet/rollout.hpp"

#include <cmath>
#include <limits>

namespace stressnet {

double mape_normalized_positive(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw ShapeError("MAPE series differ in length");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (truth[i] > 0.0) {
      sum += std::abs(pred[i] - truth[i]) / truth[i];
      ++n;
    }
  return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

void score_rollout(RolloutResult& r, std::span<const double> raw, const NormalizationStats& stats) {
  if (r.delta_t + r.pred_norm.size() != raw.size()) throw ShapeError("rollout length does not match the series");
  r.truth.assign(raw.begin() + static_cast<std::ptrdiff_t>(r.delta_t), raw.end());
  r.pred = denormalize(r.pred_norm, stats);
  r.mape = mape(r.pred, r.truth);
  const auto truth_norm = normalize(r.truth, stats);
  r.mape_normalized = mape_normalized_positive(r.pred_norm, truth_norm);
}

}  // namespace stressnet
