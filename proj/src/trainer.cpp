#include "stressnet/trainer.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>

namespace stressnet {

void adam_step(Param& p, AdamMoments& mo, long step, const AdamConfig& c) {
  if (mo.m.shape() != p.value.shape() || mo.v.shape() != p.value.shape() || p.grad.shape() != p.value.shape())
    throw ShapeError("Adam state for " + p.name + " does not match the parameter shape");
  if (step < 1) throw DomainError("Adam step counts from 1");
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(step));
  auto w = p.value.data();
  auto g = p.grad.data();
  auto m = mo.m.data();
  auto v = mo.v.data();
  for (std::size_t i = 0; i < w.size(); ++i) {
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
    const double mh = m[i] / bc1;
    const double vh = v[i] / bc2;
    w[i] -= c.learning_rate * mh / (std::sqrt(vh) + c.epsilon);
  }
}

double clip_grad_norm(ParamStore& params, double max_norm) {
  double sq = 0.0;
  for (const Param* p : params)
    for (double g : p->grad.data()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) params.scale_grad(max_norm / norm);
  return norm;
}

Adam::Adam(ParamStore params, AdamConfig config) : params_(std::move(params)), config_(config) {
  if (!(config_.learning_rate > 0.0)) throw DomainError("learning rate must be positive");
  for (const Param* p : params_) moments_.push_back({Tensor(p->value.shape()), Tensor(p->value.shape())});
}

void Adam::step() {
  ++t_;
  for (std::size_t i = 0; i < params_.size(); ++i) adam_step(params_[i], moments_[i], t_, config_);
}

void TrainConfig::validate() const {
  if (!(adam.learning_rate > 0.0)) throw DomainError("learning rate must be positive");
  if (batch_size < 1) throw DomainError("batch size must be at least 1");
  if (grad_clip_norm < 0.0) throw DomainError("gradient clip norm must be non-negative");
  if (epochs < 1 || epochs_per_shuffle < 1) throw DomainError("epoch counts must be positive");
  if (loss == LossKind::dynamic) {
    schedule.validate();
    if (schedule.total_epochs < epochs) throw DomainError("loss schedule is shorter than the training run");
  }
}

TrainConfig TrainConfig::desk() { return {}; }

TrainConfig TrainConfig::paper() {
  TrainConfig c;
  c.epochs = 1800;
  c.schedule = LossSchedule{};
  return c;
}

std::string TrainConfig::to_json() const {
  nlohmann::json j{{"learning_rate", adam.learning_rate},
                   {"beta1", adam.beta1},
                   {"beta2", adam.beta2},
                   {"epsilon", adam.epsilon},
                   {"batch_size", batch_size},
                   {"epochs_per_shuffle", epochs_per_shuffle},
                   {"epochs", epochs},
                   {"seed", seed},
                   {"loss", to_string(loss)},
                   {"lambda_high", schedule.lambda_high},
                   {"lambda_low", schedule.lambda_low},
                   {"switch_epoch", schedule.switch_epoch},
                   {"total_epochs", schedule.total_epochs},
                   {"relative_floor", relative_floor},
                   {"relative_on_raw_scale", relative_on_raw_scale},
                   {"n_val", n_val},
                   {"grad_clip_norm", grad_clip_norm}};
  return j.dump(2);
}

void write_history_csv(const std::filesystem::path& path, const TrainHistory& h) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,lambda,train_loss,val_mape\n";
  char buf[128];
  for (const auto& e : h.epochs) {
    if (std::isnan(e.val_mape))
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,\n", e.epoch, e.lambda, e.train_loss);
    else
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", e.epoch, e.lambda, e.train_loss, e.val_mape);
    out << buf;
  }
}

}  // namespace stressnet
