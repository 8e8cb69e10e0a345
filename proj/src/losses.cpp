#include "stressnet/losses.hpp"

#include <algorithm>
#include <cmath>

#include "stressnet/errors.hpp"

namespace stressnet {

namespace {

void check_pair(std::span<const double> pred, std::span<const double> truth, const char* what) {
  if (pred.empty()) throw ShapeError(std::string(what) + ": empty series");
  if (pred.size() != truth.size())
    throw ShapeError(std::string(what) + ": length mismatch " + std::to_string(pred.size()) + " vs " +
                     std::to_string(truth.size()));
}

double relative_denominator(double x, double floor) { return std::max(std::abs(x), floor); }

}  // namespace

void LossSchedule::validate() const {
  if (!(0.0 <= lambda_low && lambda_low <= lambda_high && lambda_high <= 1.0))
    throw DomainError("loss schedule requires 0 <= lambda_low <= lambda_high <= 1");
  if (switch_epoch < 1 || total_epochs < 1 || switch_epoch > total_epochs)
    throw DomainError("loss schedule requires 1 <= switch_epoch <= total_epochs");
}

LossSchedule LossSchedule::scaled_to(int epochs) {
  LossSchedule s;
  s.total_epochs = epochs;
  s.switch_epoch = std::max(1, static_cast<int>(std::lround(epochs * 600.0 / 1800.0)));
  return s;
}

double lambda_at(int epoch, const LossSchedule& schedule) {
  if (epoch < 1 || epoch > schedule.total_epochs)
    throw DomainError("epoch " + std::to_string(epoch) + " outside 1.." + std::to_string(schedule.total_epochs));
  return epoch <= schedule.switch_epoch ? schedule.lambda_high : schedule.lambda_low;
}

double mape(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth, "mape");
  double sum = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    if (!(truth[t] > 0.0)) throw DomainError("mape: truth value at " + std::to_string(t) + " is not positive");
    sum += std::abs(pred[t] - truth[t]) / truth[t];
  }
  return sum / static_cast<double>(pred.size());
}

double mse(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth, "mse");
  double sum = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const double e = pred[t] - truth[t];
    sum += e * e;
  }
  return sum / static_cast<double>(pred.size());
}

LossValue fused_loss(std::span<const double> pred, std::span<const double> truth, double lambda, double floor) {
  check_pair(pred, truth, "fused_loss");
  const double n = static_cast<double>(pred.size());
  LossValue out;
  out.grad.resize(pred.size());
  double sq = 0.0, rel = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    if (truth[t] < 0.0 || (truth[t] == 0.0 && floor <= 0.0))
      throw DomainError("fused_loss: truth value at " + std::to_string(t) + " is not positive");
    const double e = pred[t] - truth[t];
    const double den = relative_denominator(truth[t], floor);
    const double r = e / den;
    sq += e * e;
    rel += r * r;
    out.grad[t] = 2.0 / n * (lambda * e + (1.0 - lambda) * r / den);
  }
  // The two sums are kept apart so that lambda = 1 and lambda = 0 reproduce
  // mse and the mean squared relative error bit for bit.
  out.value = (lambda * sq + (1.0 - lambda) * rel) / n;
  return out;
}

LossValue dynamic_loss(std::span<const double> pred, std::span<const double> truth, int epoch,
                       const LossSchedule& schedule, double floor) {
  return fused_loss(pred, truth, lambda_at(epoch, schedule), floor);
}

LossKind parse_loss_kind(const std::string& name) {
  if (name == "dynamic") return LossKind::dynamic;
  if (name == "mse") return LossKind::mse;
  if (name == "mape") return LossKind::mape;
  throw DomainError("unknown loss '" + name + "' (expected dynamic, mse or mape)");
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::dynamic: return "dynamic";
    case LossKind::mse: return "mse";
    case LossKind::mape: return "mape";
  }
  return "?";
}

LossValue training_loss(LossKind kind, std::span<const double> pred, std::span<const double> truth, int epoch,
                        const LossSchedule& schedule, double floor) {
  switch (kind) {
    case LossKind::dynamic: return dynamic_loss(pred, truth, epoch, schedule, floor);
    case LossKind::mse: return fused_loss(pred, truth, 1.0, floor);
    case LossKind::mape: {
      check_pair(pred, truth, "mape loss");
      const double n = static_cast<double>(pred.size());
      LossValue out;
      out.grad.resize(pred.size());
      for (std::size_t t = 0; t < pred.size(); ++t) {
        const double e = pred[t] - truth[t];
        const double den = relative_denominator(truth[t], floor);
        out.value += std::abs(e) / den;
        out.grad[t] = (e > 0.0 ? 1.0 : (e < 0.0 ? -1.0 : 0.0)) / (den * n);
      }
      out.value /= n;
      return out;
    }
  }
  throw DomainError("unknown loss kind");
}

}  // namespace stressnet
