#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "stressnet/rng.hpp"
#include "stressnet/tensor.hpp"

namespace stressnet {

/// A trainable array and its gradient buffer (always the same shape).
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;

  Param() = default;
  Param(std::string name, Shape shape);

  void zero_grad() { grad.fill(0.0); }
};

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Param& p, std::size_t fan_in, std::size_t fan_out, Rng& rng);

/// Ordered, named view over the parameters a model owns. Order is the
/// traversal order of the owning model and is what the checkpoint and the
/// optimizer state rely on.
class ParamStore {
 public:
  ParamStore() = default;
  explicit ParamStore(std::vector<Param*> params) : params_(std::move(params)) {}

  void append(Param& p) { params_.push_back(&p); }
  void append(const ParamStore& other);

  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;
  Param& operator[](std::size_t i) { return *params_[i]; }
  const Param& operator[](std::size_t i) const { return *params_[i]; }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  /// Throws ShapeError when absent.
  Param& find(const std::string& name);

  void zero_grad();
  void scale_grad(double s);

 private:
  std::vector<Param*> params_;
};

/// Copies values (not gradients) between stores with identical layouts.
void copy_values(const ParamStore& from, ParamStore& to);

}  // namespace stressnet
