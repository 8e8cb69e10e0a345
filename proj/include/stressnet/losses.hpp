#pragma once

#include <span>
#include <string>
#include <vector>

namespace stressnet {

/// Epoch-indexed weight between the squared-error and squared-relative-error terms.
struct LossSchedule {
  double lambda_high = 0.9;
  double lambda_low = 0.1;
  int switch_epoch = 600;
  int total_epochs = 1800;

  /// Throws DomainError when the invariants do not hold.
  void validate() const;

  /// Same switch point as a fraction of training, rescaled to `epochs` total.
  static LossSchedule scaled_to(int epochs);
};

/// lambda_high for epochs 1..switch_epoch (inclusive), lambda_low afterwards.
double lambda_at(int epoch, const LossSchedule& schedule);

/// Mean absolute percentage error. truth must be strictly positive.
double mape(std::span<const double> pred, std::span<const double> truth);

double mse(std::span<const double> pred, std::span<const double> truth);

struct LossValue {
  double value = 0.0;
  std::vector<double> grad;  // d value / d pred
};

/// Denominator floor of the relative term for near-zero normalized targets.
inline constexpr double kRelativeFloor = 1e-8;

/// (1/T) sum [ l (p - x)^2 + (1 - l) (p - x)^2 / x^2 ], with l = lambda.
LossValue fused_loss(std::span<const double> pred, std::span<const double> truth, double lambda,
                     double floor = kRelativeFloor);

/// fused_loss with lambda taken from the schedule at `epoch`.
LossValue dynamic_loss(std::span<const double> pred, std::span<const double> truth, int epoch,
                       const LossSchedule& schedule, double floor = kRelativeFloor);

enum class LossKind { dynamic, mse, mape };

LossKind parse_loss_kind(const std::string& name);
std::string to_string(LossKind kind);

/// Training objective for any variant. MAPE uses the sign subgradient and the
/// same denominator floor as the relative term.
LossValue training_loss(LossKind kind, std::span<const double> pred, std::span<const double> truth, int epoch,
                        const LossSchedule& schedule, double floor = kRelativeFloor);

}  // namespace stressnet
