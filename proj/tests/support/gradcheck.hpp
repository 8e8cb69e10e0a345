#pragma once
// Central finite-difference checks shared by the unit and acceptance suites.
// Every check builds the scalar L = sum(w * output) with random weights w, so
// d L / d output = w is the upstream gradient fed to backward.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "stressnet/layers.hpp"
#include "stressnet/model.hpp"
#include "stressnet/rng.hpp"
#include "stressnet/tensor.hpp"

namespace stressnet::testing {

inline constexpr double kFdStep = 1e-5;

inline double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

struct GradReport {
  double max_rel = 0.0;
  std::string worst;
  std::size_t checked = 0;

  void note(double analytic, double numeric, const std::string& where) {
    ++checked;
    const double e = rel_err(analytic, numeric);
    if (e > max_rel || !std::isfinite(e)) {
      max_rel = std::isfinite(e) ? e : INFINITY;
      worst = where;
    }
  }
  void merge(const GradReport& o) {
    checked += o.checked;
    if (o.max_rel > max_rel) {
      max_rel = o.max_rel;
      worst = o.worst;
    }
  }
};

/// Perturbs each entry of x in place and compares (f(x+h) - f(x-h)) / 2h with analytic.
inline void check_entries(std::span<double> x, std::span<const double> analytic, const std::function<double()>& f,
                          const std::string& label, GradReport& rep) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + kFdStep;
    const double up = f();
    x[i] = saved - kFdStep;
    const double down = f();
    x[i] = saved;
    rep.note(analytic[i], (up - down) / (2.0 * kFdStep), label + "[" + std::to_string(i) + "]");
  }
}

/// Five-point stencil with h = 1e-3, for checks tighter than the central step's roundoff allows.
inline void check_entries_5pt(std::span<double> x, std::span<const double> analytic, const std::function<double()>& f,
                              const std::string& label, GradReport& rep) {
  constexpr double h = 1e-3;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    double v[4];
    const double offsets[4] = {2 * h, h, -h, -2 * h};
    for (int k = 0; k < 4; ++k) {
      x[i] = saved + offsets[k];
      v[k] = f();
    }
    x[i] = saved;
    rep.note(analytic[i], (-v[0] + 8 * v[1] - 8 * v[2] + v[3]) / (12 * h), label + "[" + std::to_string(i) + "]");
  }
}

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

inline double weighted_sum(const Tensor& y, const Tensor& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * w[i];
  return s;
}

/// Pool inputs whose values are well separated so no max is within the FD step of a tie.
inline Tensor separated_tensor(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  std::vector<double> ranks(t.size());
  for (std::size_t i = 0; i < ranks.size(); ++i) ranks[i] = static_cast<double>(i);
  rng.shuffle(std::span<double>(ranks));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.01 * ranks[i] - 0.005 * static_cast<double>(t.size());
  return t;
}

inline GradReport gradcheck_ti_conv(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t h = 6 + rng.below(3), w = 5 + rng.below(3), t = 1 + rng.below(4), d = 2 + rng.below(2);
  Tensor x = random_tensor({h, w, t}, rng);
  Tensor k = random_tensor({d, d, t}, rng);
  TiConvCache cache;
  const Tensor y = ti_conv_forward(x, k, cache);
  const Tensor wts = random_tensor(y.shape(), rng);
  const TiConvGrads g = ti_conv_backward(cache, wts);
  auto f = [&] {
    TiConvCache c;
    return weighted_sum(ti_conv_forward(x, k, c), wts);
  };
  GradReport rep;
  check_entries(x.data(), g.input.data(), f, "ti_conv.input", rep);
  check_entries(k.data(), g.kernel.data(), f, "ti_conv.kernel", rep);
  return rep;
}

inline GradReport gradcheck_pool(std::uint64_t seed, PoolKind kind) {
  Rng rng(seed);
  const std::size_t d = 2 + rng.below(2);
  const std::size_t h = d * (2 + rng.below(2)), w = d * (1 + rng.below(3)), t = 1 + rng.below(3);
  Tensor x = separated_tensor({h, w, t}, rng);
  PoolCache cache;
  auto fwd = [&](PoolCache& c) { return kind == PoolKind::max ? max_pool_forward(x, d, c) : avg_pool_forward(x, d, c); };
  const Tensor y = fwd(cache);
  const Tensor wts = random_tensor(y.shape(), rng);
  const Tensor gx = pool_backward(cache, wts);
  auto f = [&] {
    PoolCache c;
    return weighted_sum(fwd(c), wts);
  };
  GradReport rep;
  check_entries(x.data(), gx.data(), f, kind == PoolKind::max ? "max_pool.input" : "avg_pool.input", rep);
  return rep;
}

inline GradReport gradcheck_fc(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t h = 2 + rng.below(3), w = 2 + rng.below(3), t = 1 + rng.below(4), out = 1 + rng.below(4);
  Tensor x = random_tensor({h, w, t}, rng);
  Tensor wt = random_tensor({out, h * w}, rng);
  FcCache cache;
  const Tensor y = fc_forward(x, wt, cache);
  const Tensor wts = random_tensor(y.shape(), rng);
  const FcGrads g = fc_backward(cache, wts);
  auto f = [&] {
    FcCache c;
    return weighted_sum(fc_forward(x, wt, c), wts);
  };
  GradReport rep;
  check_entries(x.data(), g.input.data(), f, "fc.input", rep);
  check_entries(wt.data(), g.weight.data(), f, "fc.weight", rep);
  return rep;
}

inline void check_params(ParamStore params, const std::function<double()>& f, GradReport& rep,
                         bool five_point = false) {
  for (Param* p : params) {
    const Tensor analytic = p->grad;
    if (five_point)
      check_entries_5pt(p->value.data(), analytic.data(), f, p->name, rep);
    else
      check_entries(p->value.data(), analytic.data(), f, p->name, rep);
  }
}

inline GradReport gradcheck_lstm_cell(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t in = 1 + rng.below(4), hid = 1 + rng.below(4);
  LstmCell cell("cell", in, hid);
  cell.init(rng);
  for (auto& v : cell.bias.value.data()) v = rng.uniform(-0.5, 0.5);
  std::vector<double> x(in);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  LstmState prev = LstmState::zeros(hid);
  for (auto& v : prev.h) v = rng.uniform(-1.0, 1.0);
  for (auto& v : prev.c) v = rng.uniform(-1.0, 1.0);
  std::vector<double> wh(hid), wc(hid);
  for (auto& v : wh) v = rng.uniform(-1.0, 1.0);
  for (auto& v : wc) v = rng.uniform(-1.0, 1.0);
  auto f = [&] {
    const LstmState s = lstm_cell_step(cell, x, prev);
    double l = 0.0;
    for (std::size_t i = 0; i < hid; ++i) l += wh[i] * s.h[i] + wc[i] * s.c[i];
    return l;
  };
  cell.params().zero_grad();
  LstmStepCache cache;
  lstm_cell_step(cell, x, prev, &cache);
  const LstmStepGrads g = lstm_cell_backward(cell, cache, wh, wc);
  GradReport rep;
  check_entries(x, g.x, f, "lstm_cell.x", rep);
  check_entries(prev.h, g.h_prev, f, "lstm_cell.h_prev", rep);
  check_entries(prev.c, g.c_prev, f, "lstm_cell.c_prev", rep);
  check_params(cell.params(), f, rep);
  return rep;
}

inline GradReport gradcheck_lstm_sequence(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t in = 1 + rng.below(3), hid = 1 + rng.below(4), t = 2 + rng.below(4);
  Lstm lstm("lstm", in, hid);
  lstm.init(rng);
  Tensor x = random_tensor({in, t}, rng);
  const Tensor wts = random_tensor({hid, t}, rng);
  auto f = [&] { return weighted_sum(lstm.forward(x), wts); };
  lstm.params().zero_grad();
  lstm.forward(x);
  const Tensor gx = lstm.backward(wts);
  GradReport rep;
  check_entries(x.data(), gx.data(), f, "lstm.x", rep);
  check_params(lstm.params(), f, rep);
  return rep;
}

inline GradReport gradcheck_bilstm(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t in = 1 + rng.below(3), hid = 1 + rng.below(4), out = 1 + rng.below(3), t = 2 + rng.below(4);
  BiLstm layer("bilstm", in, hid, out, rng.bernoulli(0.5) ? Activation::sigmoid : Activation::identity);
  layer.init(rng);
  Tensor x = random_tensor({in, t}, rng);
  const Tensor wts = random_tensor({out, t}, rng);
  auto f = [&] { return weighted_sum(layer.forward(x), wts); };
  layer.params().zero_grad();
  layer.forward(x);
  const Tensor gx = layer.backward(wts);
  GradReport rep;
  check_entries(x.data(), gx.data(), f, "bilstm.x", rep);
  check_params(layer.params(), f, rep);
  return rep;
}

inline GradReport gradcheck_dense(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t in = 1 + rng.below(5), out = 1 + rng.below(3);
  Dense dense("dense", in, out, rng.bernoulli(0.5) ? Activation::sigmoid : Activation::identity);
  dense.init(rng);
  std::vector<double> x(in), wts(out);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  for (auto& v : wts) v = rng.uniform(-1.0, 1.0);
  auto f = [&] {
    const auto y = dense.forward(x);
    double l = 0.0;
    for (std::size_t i = 0; i < out; ++i) l += wts[i] * y[i];
    return l;
  };
  dense.params().zero_grad();
  dense.forward(x);
  const auto gx = dense.backward(wts);
  GradReport rep;
  check_entries(x, gx, f, "dense.x", rep);
  check_params(dense.params(), f, rep);
  return rep;
}

/// 6 x 4 frames, dt = 3, D = H = 4, one conv block: 6x4 -> 4x2 -> 2x1. L = prediction.
inline StressNetConfig toy_stressnet_config() {
  StressNetConfig c;
  c.delta_t = 3;
  c.feature_dim = 4;
  c.hidden_dim = 4;
  c.frame_rows = 6;
  c.frame_cols = 4;
  c.conv_blocks = {{3, 2}};
  return c;
}

inline GradReport gradcheck_stressnet(std::uint64_t seed) {
  Rng rng(seed);
  StressNet model(toy_stressnet_config(), Channel::yy, seed);
  const auto& cfg = model.config();
  std::vector<double> stress(cfg.delta_t);
  for (auto& v : stress) v = rng.uniform(0.0, 1.0);
  Tensor damage({cfg.frame_rows, cfg.frame_cols, cfg.delta_t});
  for (auto& v : damage.data()) v = rng.bernoulli(0.3) ? 1.0 : 0.0;
  auto f = [&] { return model.forward(stress, damage); };
  model.params().zero_grad();
  model.forward(stress, damage);
  model.backward(1.0);
  GradReport rep;
  check_params(model.params(), f, rep);
  return rep;
}

}  // namespace stressnet::testing
