#pragma once

#include <chrono>
#include <span>
#include <string>
#include <vector>

#include "stressnet/errors.hpp"
#include "stressnet/losses.hpp"
#include "stressnet/normalization.hpp"
#include "stressnet/pipeline.hpp"

namespace stressnet {

struct RolloutResult {
  std::string sim;
  std::size_t delta_t = 0;
  std::vector<double> truth;      // raw, steps delta_t .. T-1 (0-based)
  std::vector<double> pred_norm;  // normalized predictions for the same steps
  std::vector<double> pred;       // raw predictions
  double mape = 0.0;              // raw scale
  double mape_normalized = 0.0;   // over steps whose normalized truth is positive
  double seconds = 0.0;
};

/// What went into the window that produced output index j (0-based, step delta_t + j).
struct WindowTrace {
  std::size_t output_index = 0;
  std::vector<std::size_t> steps;   // record steps covered by the window
  std::vector<char> predicted;      // 1 where the stress entry came from an earlier prediction
  std::vector<double> stress;       // the normalized values fed to the model
  std::size_t damage_start = 0;     // first frame of the damage window
  Tensor damage;                    // the damage window fed to the model (empty for stress-only models)
};

double mape_normalized_positive(std::span<const double> pred, std::span<const double> truth);

/// Fills truth, pred and both MAPEs from r.pred_norm and r.delta_t.
void score_rollout(RolloutResult& r, std::span<const double> raw_series, const NormalizationStats& stats);

/// Recursive multi-step prediction. The first window holds the true stresses
/// at steps 0 .. dt-1; each later window drops its oldest entry and appends
/// the newest prediction. Damage windows are always the recorded frames.
template <typename Model>
RolloutResult rollout(Model& model, const PreparedSim& sim, std::vector<WindowTrace>* trace = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t dt = model.window();
  const std::size_t n = window_count(sim.steps(), dt);
  if constexpr (Model::kUsesDamage)
    if (sim.frames.size() != sim.steps()) throw DataError(sim.name + ": missing damage frames");

  const auto truth_norm = normalize(sim.stress(model.channel), model.stats);
  std::vector<double> window(truth_norm.begin(), truth_norm.begin() + static_cast<std::ptrdiff_t>(dt));
  std::vector<char> from_pred(dt, 0);

  RolloutResult r;
  r.sim = sim.name;
  r.delta_t = dt;
  r.pred_norm.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    double p;
    if constexpr (Model::kUsesDamage) {
      Tensor dmg = damage_window(sim.frames, j, dt);
      p = model.forward(window, dmg);
      if (trace) trace->push_back({j, {}, from_pred, window, j, std::move(dmg)});
    } else {
      p = model.forward(window);
      if (trace) trace->push_back({j, {}, from_pred, window, j, Tensor()});
    }
    if (trace)
      for (std::size_t i = 0; i < dt; ++i) trace->back().steps.push_back(j + i);
    r.pred_norm.push_back(p);
    window.erase(window.begin());
    window.push_back(p);
    from_pred.erase(from_pred.begin());
    from_pred.push_back(1);
  }
  score_rollout(r, sim.stress(model.channel), model.stats);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace stressnet
