#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "stressnet/errors.hpp"
#include "stressnet/losses.hpp"
#include "stressnet/params.hpp"
#include "stressnet/pipeline.hpp"
#include "stressnet/rng.hpp"
#include "stressnet/rollout.hpp"

namespace stressnet {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamMoments {
  Tensor m;
  Tensor v;
};

/// One bias-corrected Adam update of p from p.grad; `step` counts from 1.
/// ShapeError if the moments do not match the parameter.
void adam_step(Param& p, AdamMoments& moments, long step, const AdamConfig& config);

/// Scales all gradients so their joint L2 norm is at most max_norm; returns the norm before clipping.
double clip_grad_norm(ParamStore& params, double max_norm);

class Adam {
 public:
  Adam(ParamStore params, AdamConfig config);
  void step();
  long steps_taken() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  ParamStore params_;
  AdamConfig config_;
  std::vector<AdamMoments> moments_;
  long t_ = 0;
};

struct TrainConfig {
  AdamConfig adam;
  std::size_t batch_size = 32;
  int epochs_per_shuffle = 30;
  int epochs = 60;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::dynamic;
  LossSchedule schedule = LossSchedule::scaled_to(60);
  double relative_floor = kRelativeFloor;
  /// Measure the relative loss term against the physical stress, x_raw / (x_max - x_min),
  /// instead of the min-max value, whose training minimum is exactly 0.
  bool relative_on_raw_scale = true;
  std::size_t n_val = 6;
  /// Rescale the batch-mean gradient to this global L2 norm when larger; 0 disables.
  double grad_clip_norm = 1.0;

  void validate() const;

  /// 60 epochs (2 shuffles of 30), lambda switch scaled to epoch 20.
  static TrainConfig desk();
  /// 1800 epochs (60 shuffles of 30), lambda switch at 600.
  static TrainConfig paper();

  std::string to_json() const;
};

struct EpochRecord {
  int epoch = 0;
  double lambda = 0.0;
  double train_loss = 0.0;
  double val_mape = std::numeric_limits<double>::quiet_NaN();  // NaN without validation sims
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;  // epoch whose parameters were kept
};

void write_history_csv(const std::filesystem::path& path, const TrainHistory& history);

using EpochCallback = std::function<void(const EpochRecord&)>;

namespace detail {

template <typename Model>
double predict_window(Model& model, const PreparedSim& sim, std::span<const double> norm, std::size_t k) {
  const std::size_t dt = model.window();
  const auto w = norm.subspan(k, dt);
  if constexpr (Model::kUsesDamage)
    return model.forward(w, damage_window(sim.frames, k, dt));
  else
    return model.forward(w);
}

}  // namespace detail

/// Teacher-forced one-step training over the sims in `pool`. Each epoch
/// holds out n_val sims for a rollout MAPE (raw scale) and updates on the
/// rest; the feed order of the pool is reshuffled every epochs_per_shuffle
/// epochs. With validation, the parameters of the best validation epoch are
/// restored at the end; otherwise the final parameters are kept.
/// model.stats must be set by the caller.
template <typename Model>
TrainHistory train(Model& model, std::span<const PreparedSim> sims, std::span<const std::size_t> pool,
                   const TrainConfig& config, const EpochCallback& on_epoch = {}) {
  config.validate();
  model.stats.validate();
  if (pool.empty()) throw DataError("training pool is empty");
  for (std::size_t i : pool)
    if (i >= sims.size()) throw DataError("training pool index out of range");

  Rng rng(config.seed);
  ParamStore params = model.params();
  params.zero_grad();
  Adam adam(params, config.adam);

  std::vector<std::vector<double>> norm(sims.size());
  for (std::size_t i : pool) norm[i] = normalize(sims[i].stress(model.channel), model.stats);

  const double offset =
      config.relative_on_raw_scale ? model.stats.x_min / (model.stats.x_max - model.stats.x_min) : 0.0;

  std::vector<std::size_t> order(pool.begin(), pool.end());
  TrainHistory history;
  double best = std::numeric_limits<double>::infinity();
  std::vector<Tensor> best_values;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    if ((epoch - 1) % config.epochs_per_shuffle == 0) rng.shuffle(std::span<std::size_t>(order));
    const EpochSplit split = sample_validation(order, config.n_val, rng);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lambda = config.loss == LossKind::dynamic ? lambda_at(epoch, config.schedule)
                                                  : (config.loss == LossKind::mse ? 1.0 : 0.0);
    double loss_sum = 0.0;
    std::size_t samples = 0, in_batch = 0;
    auto flush = [&]() {
      if (in_batch == 0) return;
      params.scale_grad(1.0 / static_cast<double>(in_batch));
      if (config.grad_clip_norm > 0.0) clip_grad_norm(params, config.grad_clip_norm);
      adam.step();
      params.zero_grad();
      in_batch = 0;
    };
    for (std::size_t s : split.train) {
      const auto& series = norm[s];
      const std::size_t n = window_count(series.size(), model.window());
      for (std::size_t k = 0; k < n; ++k) {
        const double pred = detail::predict_window(model, sims[s], series, k);
        const double truth = series[k + model.window()];
        // the shift leaves the squared-error term and the gradient w.r.t. pred unchanged
        const double p_shift = pred + offset, t_shift = truth + offset;
        const LossValue lv = training_loss(config.loss, std::span<const double>(&p_shift, 1),
                                           std::span<const double>(&t_shift, 1), epoch, config.schedule,
                                           config.relative_floor);
        if (!std::isfinite(lv.value) || !std::isfinite(lv.grad[0]))
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", sim " + sims[s].name +
                             ", window " + std::to_string(k) + " (pred " + std::to_string(pred) + ", target " +
                             std::to_string(truth) + ")");
        model.backward(lv.grad[0]);
        loss_sum += lv.value;
        ++samples;
        if (++in_batch == config.batch_size) flush();
      }
    }
    flush();
    rec.train_loss = loss_sum / static_cast<double>(samples);

    if (!split.validation.empty()) {
      double v = 0.0;
      for (std::size_t s : split.validation) v += rollout(model, sims[s]).mape;
      rec.val_mape = v / static_cast<double>(split.validation.size());
      if (!std::isfinite(rec.val_mape)) throw NumericError("non-finite validation MAPE at epoch " + std::to_string(epoch));
      if (rec.val_mape < best) {
        best = rec.val_mape;
        history.best_epoch = epoch;
        best_values.clear();
        for (const Param* p : params) best_values.push_back(p->value);
      }
    } else {
      history.best_epoch = epoch;
    }
    history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  if (!best_values.empty())
    for (std::size_t i = 0; i < params.size(); ++i) params[i].value = best_values[i];
  return history;
}

/// Mean one-step (teacher-forced) MAPE over every window of the given sims, raw scale.
template <typename Model>
double one_step_mape(Model& model, std::span<const PreparedSim> sims, std::span<const std::size_t> indices) {
  std::vector<double> pred, truth;
  for (std::size_t s : indices) {
    const auto& raw = sims[s].stress(model.channel);
    const auto series = normalize(raw, model.stats);
    const std::size_t n = window_count(series.size(), model.window());
    for (std::size_t k = 0; k < n; ++k) {
      pred.push_back(denormalize(detail::predict_window(model, sims[s], series, k), model.stats));
      truth.push_back(raw[k + model.window()]);
    }
  }
  return mape(pred, truth);
}

}  // namespace stressnet
