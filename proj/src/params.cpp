#include "stressnet/params.hpp"

#include <cmath>

#include "stressnet/errors.hpp"

namespace stressnet {

Param::Param(std::string n, Shape shape) : name(std::move(n)), value(shape), grad(shape) {}

void glorot_uniform(Param& p, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : p.value.data()) v = rng.uniform(-limit, limit);
}

void ParamStore::append(const ParamStore& other) {
  params_.insert(params_.end(), other.params_.begin(), other.params_.end());
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const Param* p : params_) n += p->value.size();
  return n;
}

Param& ParamStore::find(const std::string& name) {
  for (Param* p : params_)
    if (p->name == name) return *p;
  throw ShapeError("no parameter named '" + name + "'");
}

void ParamStore::zero_grad() {
  for (Param* p : params_) p->zero_grad();
}

void ParamStore::scale_grad(double s) {
  for (Param* p : params_)
    for (auto& g : p->grad.data()) g *= s;
}

void copy_values(const ParamStore& from, ParamStore& to) {
  if (from.size() != to.size()) throw ShapeError("parameter count mismatch");
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (from[i].value.shape() != to[i].value.shape())
      throw ShapeError("parameter '" + from[i].name + "' shape mismatch");
    to[i].value = from[i].value;
  }
}

}  // namespace stressnet
