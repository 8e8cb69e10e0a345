#include "stressnet/layers.hpp"

#include <cmath>
#include <limits>

#include "stressnet/errors.hpp"

namespace stressnet {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

void consume(bool& valid, const char* what) {
  if (!valid) throw StaleCacheError(std::string(what) + ": backward without a matching forward");
  valid = false;
}

double activate(Activation a, double x) { return a == Activation::sigmoid ? sigmoid(x) : x; }

// Derivative expressed through the activated value y.
double activate_grad(Activation a, double y) { return a == Activation::sigmoid ? y * (1.0 - y) : 1.0; }

void require_rank3(const Tensor& x, const char* what) {
  if (x.rank() != 3) throw ShapeError(std::string(what) + " expects an H x W x T tensor, got " + shape_string(x.shape()));
}

}  // namespace

// ---------------------------------------------------------------------------

Tensor ti_conv_forward(const Tensor& x, const Tensor& kernel, TiConvCache& cache) {
  require_rank3(x, "ti_conv");
  require_rank3(kernel, "ti_conv kernel");
  const std::size_t H = x.extent(0), W = x.extent(1), T = x.extent(2);
  const std::size_t d = kernel.extent(0);
  if (kernel.extent(1) != d) throw ShapeError("ti_conv kernel must be square");
  if (kernel.extent(2) != T)
    throw ShapeError("ti_conv kernel depth " + std::to_string(kernel.extent(2)) + " != input depth " +
                     std::to_string(T));
  if (d > H || d > W) throw ShapeError("ti_conv kernel larger than spatial extent");

  const std::size_t Ho = H - d + 1, Wo = W - d + 1;
  Tensor out({Ho, Wo, T});
  for (std::size_t r = 0; r < Ho; ++r)
    for (std::size_t c = 0; c < Wo; ++c)
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
          const double* xin = &x.data()[((r + i) * W + (c + j)) * T];
          const double* k = &kernel.data()[(i * d + j) * T];
          double* o = &out.data()[(r * Wo + c) * T];
          for (std::size_t t = 0; t < T; ++t) o[t] += k[t] * xin[t];
        }
  cache.input = x;
  cache.kernel = kernel;
  cache.valid = true;
  return out;
}

TiConvGrads ti_conv_backward(TiConvCache& cache, const Tensor& grad_out) {
  consume(cache.valid, "ti_conv");
  const Tensor& x = cache.input;
  const Tensor& kernel = cache.kernel;
  const std::size_t W = x.extent(1), T = x.extent(2);
  const std::size_t d = kernel.extent(0);
  const std::size_t Ho = x.extent(0) - d + 1, Wo = W - d + 1;
  if (grad_out.shape() != Shape{Ho, Wo, T}) throw ShapeError("ti_conv grad_out shape mismatch");

  TiConvGrads g{Tensor(x.shape()), Tensor(kernel.shape())};
  for (std::size_t r = 0; r < Ho; ++r)
    for (std::size_t c = 0; c < Wo; ++c) {
      const double* go = &grad_out.data()[(r * Wo + c) * T];
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
          const std::size_t xoff = ((r + i) * W + (c + j)) * T;
          const std::size_t koff = (i * d + j) * T;
          for (std::size_t t = 0; t < T; ++t) {
            g.kernel[koff + t] += go[t] * x[xoff + t];
            g.input[xoff + t] += go[t] * kernel[koff + t];
          }
        }
    }
  return g;
}

// ---------------------------------------------------------------------------

namespace {

Tensor pool_forward(const Tensor& x, std::size_t d, PoolKind kind, PoolCache& cache) {
  require_rank3(x, "pool");
  const std::size_t H = x.extent(0), W = x.extent(1), T = x.extent(2);
  if (d == 0 || H % d != 0 || W % d != 0)
    throw ShapeError("pool size " + std::to_string(d) + " does not divide " + shape_string(x.shape()));
  const std::size_t Ho = H / d, Wo = W / d;
  Tensor out({Ho, Wo, T});
  cache.winners.assign(kind == PoolKind::max ? out.size() : 0, 0);
  const double inv = 1.0 / static_cast<double>(d * d);

  for (std::size_t r = 0; r < Ho; ++r)
    for (std::size_t c = 0; c < Wo; ++c)
      for (std::size_t t = 0; t < T; ++t) {
        const std::size_t o = (r * Wo + c) * T + t;
        if (kind == PoolKind::max) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t arg = 0;
          // Row-major scan with strict '>' keeps the first maximum on ties.
          for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) {
              const std::size_t idx = ((r * d + i) * W + (c * d + j)) * T + t;
              if (x[idx] > best) {
                best = x[idx];
                arg = idx;
              }
            }
          out[o] = best;
          cache.winners[o] = arg;
        } else {
          double sum = 0.0;
          for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) sum += x[((r * d + i) * W + (c * d + j)) * T + t];
          out[o] = sum * inv;
        }
      }
  cache.kind = kind;
  cache.size = d;
  cache.input_shape = x.shape();
  cache.valid = true;
  return out;
}

}  // namespace

Tensor max_pool_forward(const Tensor& x, std::size_t d, PoolCache& cache) {
  return pool_forward(x, d, PoolKind::max, cache);
}

Tensor avg_pool_forward(const Tensor& x, std::size_t d, PoolCache& cache) {
  return pool_forward(x, d, PoolKind::average, cache);
}

Tensor pool_backward(PoolCache& cache, const Tensor& grad_out) {
  consume(cache.valid, "pool");
  const std::size_t d = cache.size;
  const std::size_t W = cache.input_shape[1], T = cache.input_shape[2];
  const std::size_t Ho = cache.input_shape[0] / d, Wo = W / d;
  if (grad_out.shape() != Shape{Ho, Wo, T}) throw ShapeError("pool grad_out shape mismatch");

  Tensor g(cache.input_shape);
  if (cache.kind == PoolKind::max) {
    for (std::size_t o = 0; o < grad_out.size(); ++o) g[cache.winners[o]] += grad_out[o];
    return g;
  }
  const double inv = 1.0 / static_cast<double>(d * d);
  for (std::size_t r = 0; r < Ho; ++r)
    for (std::size_t c = 0; c < Wo; ++c)
      for (std::size_t t = 0; t < T; ++t) {
        const double go = grad_out[(r * Wo + c) * T + t] * inv;
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t j = 0; j < d; ++j) g[((r * d + i) * W + (c * d + j)) * T + t] += go;
      }
  return g;
}

// ---------------------------------------------------------------------------

Tensor fc_forward(const Tensor& x, const Tensor& weight, FcCache& cache) {
  if (x.rank() < 2) throw ShapeError("fc expects at least a features x T tensor");
  const std::size_t T = x.extent(x.rank() - 1);
  const std::size_t F = x.size() / T;
  if (weight.rank() != 2 || weight.extent(1) != F)
    throw ShapeError("fc weight " + shape_string(weight.shape()) + " incompatible with input " +
                     shape_string(x.shape()));
  cache.flat_input = reshape(x, {F, T});
  cache.weight = weight;
  cache.input_shape = x.shape();
  cache.valid = true;
  return matmul(weight, cache.flat_input);
}

FcGrads fc_backward(FcCache& cache, const Tensor& grad_out) {
  consume(cache.valid, "fc");
  const Tensor& X = cache.flat_input;
  const Tensor& Wt = cache.weight;
  const std::size_t D = Wt.extent(0), F = Wt.extent(1), T = X.extent(1);
  if (grad_out.shape() != Shape{D, T}) throw ShapeError("fc grad_out shape mismatch");

  Tensor gw({D, F});
  Tensor gx({F, T});
  for (std::size_t dd = 0; dd < D; ++dd)
    for (std::size_t f = 0; f < F; ++f) {
      double acc = 0.0;
      const double w = Wt(dd, f);
      for (std::size_t t = 0; t < T; ++t) {
        acc += grad_out(dd, t) * X(f, t);
        gx(f, t) += w * grad_out(dd, t);
      }
      gw(dd, f) = acc;
    }
  return {reshape(gx, cache.input_shape), std::move(gw)};
}

// ---------------------------------------------------------------------------

LstmCell::LstmCell(const std::string& name, std::size_t input_dim, std::size_t hidden_dim)
    : input_weights(name + ".w_input", {4 * hidden_dim, input_dim}),
      recurrent_weights(name + ".w_recurrent", {4 * hidden_dim, hidden_dim}),
      bias(name + ".bias", {4 * hidden_dim}),
      input_dim_(input_dim),
      hidden_dim_(hidden_dim) {}

void LstmCell::init(Rng& rng) {
  glorot_uniform(input_weights, input_dim_, 4 * hidden_dim_, rng);
  glorot_uniform(recurrent_weights, hidden_dim_, 4 * hidden_dim_, rng);
  bias.value.fill(0.0);
}

ParamStore LstmCell::params() { return ParamStore({&input_weights, &recurrent_weights, &bias}); }

LstmState lstm_cell_step(const LstmCell& cell, std::span<const double> x, const LstmState& prev,
                         LstmStepCache* cache) {
  const std::size_t H = cell.hidden_dim(), I = cell.input_dim();
  if (x.size() != I || prev.h.size() != H || prev.c.size() != H)
    throw ShapeError("lstm_cell_step dimension mismatch");

  std::vector<double> z(cell.bias.value.values());
  const double* wx = cell.input_weights.value.data().data();
  const double* wh = cell.recurrent_weights.value.data().data();
  for (std::size_t r = 0; r < 4 * H; ++r) {
    double acc = 0.0;
    for (std::size_t k = 0; k < I; ++k) acc += wx[r * I + k] * x[k];
    for (std::size_t k = 0; k < H; ++k) acc += wh[r * H + k] * prev.h[k];
    z[r] += acc;
  }
  for (std::size_t k = 0; k < H; ++k) {
    z[k] = sigmoid(z[k]);
    z[H + k] = sigmoid(z[H + k]);
    z[2 * H + k] = std::tanh(z[2 * H + k]);
    z[3 * H + k] = sigmoid(z[3 * H + k]);
  }

  LstmState next{std::vector<double>(H), std::vector<double>(H)};
  std::vector<double> tanh_c(H);
  for (std::size_t k = 0; k < H; ++k) {
    next.c[k] = z[H + k] * prev.c[k] + z[k] * z[2 * H + k];
    tanh_c[k] = std::tanh(next.c[k]);
    next.h[k] = z[3 * H + k] * tanh_c[k];
  }
  if (cache) {
    cache->x.assign(x.begin(), x.end());
    cache->prev = prev;
    cache->gates = std::move(z);
    cache->c = next.c;
    cache->tanh_c = std::move(tanh_c);
  }
  return next;
}

LstmStepGrads lstm_cell_backward(LstmCell& cell, const LstmStepCache& cache, std::span<const double> dh,
                                 std::span<const double> dc) {
  const std::size_t H = cell.hidden_dim(), I = cell.input_dim();
  const auto& a = cache.gates;
  std::vector<double> dz(4 * H);
  LstmStepGrads g{std::vector<double>(I), std::vector<double>(H), std::vector<double>(H)};

  for (std::size_t k = 0; k < H; ++k) {
    const double i = a[k], f = a[H + k], cand = a[2 * H + k], o = a[3 * H + k];
    const double tc = cache.tanh_c[k];
    const double dct = dc[k] + dh[k] * o * (1.0 - tc * tc);
    dz[k] = dct * cand * i * (1.0 - i);
    dz[H + k] = dct * cache.prev.c[k] * f * (1.0 - f);
    dz[2 * H + k] = dct * i * (1.0 - cand * cand);
    dz[3 * H + k] = dh[k] * tc * o * (1.0 - o);
    g.c_prev[k] = dct * f;
  }

  double* gwx = cell.input_weights.grad.data().data();
  double* gwh = cell.recurrent_weights.grad.data().data();
  double* gb = cell.bias.grad.data().data();
  const double* wx = cell.input_weights.value.data().data();
  const double* wh = cell.recurrent_weights.value.data().data();
  for (std::size_t r = 0; r < 4 * H; ++r) {
    const double d = dz[r];
    gb[r] += d;
    for (std::size_t k = 0; k < I; ++k) {
      gwx[r * I + k] += d * cache.x[k];
      g.x[k] += wx[r * I + k] * d;
    }
    for (std::size_t k = 0; k < H; ++k) {
      gwh[r * H + k] += d * cache.prev.h[k];
      g.h_prev[k] += wh[r * H + k] * d;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------

Lstm::Lstm(const std::string& name, std::size_t input_dim, std::size_t hidden_dim)
    : cell(name, input_dim, hidden_dim) {}

Tensor Lstm::forward(const Tensor& x_seq) {
  if (x_seq.rank() != 2 || x_seq.extent(0) != cell.input_dim())
    throw ShapeError("lstm input must be " + std::to_string(cell.input_dim()) + " x T");
  const std::size_t T = x_seq.extent(1), H = cell.hidden_dim(), I = cell.input_dim();
  steps_.assign(T, {});
  Tensor hs({H, T});
  LstmState state = LstmState::zeros(H);
  std::vector<double> xt(I);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < I; ++k) xt[k] = x_seq(k, t);
    state = lstm_cell_step(cell, xt, state, &steps_[t]);
    for (std::size_t k = 0; k < H; ++k) hs(k, t) = state.h[k];
  }
  valid_ = true;
  return hs;
}

Tensor Lstm::backward(const Tensor& grad_hidden) {
  consume(valid_, "lstm");
  const std::size_t T = steps_.size(), H = cell.hidden_dim(), I = cell.input_dim();
  if (grad_hidden.shape() != Shape{H, T}) throw ShapeError("lstm grad shape mismatch");
  Tensor gx({I, T});
  std::vector<double> dh(H), dc(H, 0.0), carry_h(H, 0.0);
  for (std::size_t t = T; t-- > 0;) {
    for (std::size_t k = 0; k < H; ++k) dh[k] = grad_hidden(k, t) + carry_h[k];
    auto g = lstm_cell_backward(cell, steps_[t], dh, dc);
    for (std::size_t k = 0; k < I; ++k) gx(k, t) = g.x[k];
    carry_h = std::move(g.h_prev);
    dc = std::move(g.c_prev);
  }
  return gx;
}

// ---------------------------------------------------------------------------

BiLstm::BiLstm(const std::string& name, std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
               Activation act)
    : forward_cell(name + ".fwd", input_dim, hidden_dim),
      backward_cell(name + ".bwd", input_dim, hidden_dim),
      out_forward(name + ".out_fwd", {output_dim, hidden_dim}),
      out_backward(name + ".out_bwd", {output_dim, hidden_dim}),
      out_bias(name + ".out_bias", {output_dim}),
      activation(act) {}

void BiLstm::init(Rng& rng) {
  forward_cell.init(rng);
  backward_cell.init(rng);
  glorot_uniform(out_forward, hidden_dim(), output_dim(), rng);
  glorot_uniform(out_backward, hidden_dim(), output_dim(), rng);
  out_bias.value.fill(0.0);
}

ParamStore BiLstm::params() {
  ParamStore s = forward_cell.params();
  s.append(backward_cell.params());
  s.append(out_forward);
  s.append(out_backward);
  s.append(out_bias);
  return s;
}

Tensor BiLstm::forward(const Tensor& x_seq) {
  const std::size_t I = input_dim(), H = hidden_dim(), O = output_dim();
  if (x_seq.rank() != 2 || x_seq.extent(0) != I)
    throw ShapeError("bilstm input must be " + std::to_string(I) + " x T, got " + shape_string(x_seq.shape()));
  const std::size_t T = x_seq.extent(1);

  fwd_steps_.assign(T, {});
  bwd_steps_.assign(T, {});
  h_fwd_ = Tensor({H, T});
  h_bwd_ = Tensor({H, T});
  std::vector<double> xt(I);

  LstmState s = LstmState::zeros(H);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < I; ++k) xt[k] = x_seq(k, t);
    s = lstm_cell_step(forward_cell, xt, s, &fwd_steps_[t]);
    for (std::size_t k = 0; k < H; ++k) h_fwd_(k, t) = s.h[k];
  }
  s = LstmState::zeros(H);
  for (std::size_t t = T; t-- > 0;) {
    for (std::size_t k = 0; k < I; ++k) xt[k] = x_seq(k, t);
    s = lstm_cell_step(backward_cell, xt, s, &bwd_steps_[t]);
    for (std::size_t k = 0; k < H; ++k) h_bwd_(k, t) = s.h[k];
  }

  output_ = Tensor({O, T});
  for (std::size_t o = 0; o < O; ++o)
    for (std::size_t t = 0; t < T; ++t) {
      double acc = out_bias.value[o];
      for (std::size_t k = 0; k < H; ++k)
        acc += out_forward.value(o, k) * h_fwd_(k, t) + out_backward.value(o, k) * h_bwd_(k, t);
      output_(o, t) = activate(activation, acc);
    }
  valid_ = true;
  return output_;
}

Tensor BiLstm::backward(const Tensor& grad_out) {
  consume(valid_, "bilstm");
  const std::size_t I = input_dim(), H = hidden_dim(), O = output_dim();
  const std::size_t T = output_.extent(1);
  if (grad_out.shape() != Shape{O, T}) throw ShapeError("bilstm grad_out shape mismatch");

  Tensor d_hf({H, T}), d_hb({H, T});
  for (std::size_t o = 0; o < O; ++o)
    for (std::size_t t = 0; t < T; ++t) {
      const double gp = grad_out(o, t) * activate_grad(activation, output_(o, t));
      if (gp == 0.0) continue;
      out_bias.grad[o] += gp;
      for (std::size_t k = 0; k < H; ++k) {
        out_forward.grad(o, k) += gp * h_fwd_(k, t);
        out_backward.grad(o, k) += gp * h_bwd_(k, t);
        d_hf(k, t) += out_forward.value(o, k) * gp;
        d_hb(k, t) += out_backward.value(o, k) * gp;
      }
    }

  Tensor gx({I, T});
  std::vector<double> dh(H), dc(H, 0.0), carry(H, 0.0);
  for (std::size_t t = T; t-- > 0;) {
    for (std::size_t k = 0; k < H; ++k) dh[k] = d_hf(k, t) + carry[k];
    auto g = lstm_cell_backward(forward_cell, fwd_steps_[t], dh, dc);
    for (std::size_t k = 0; k < I; ++k) gx(k, t) += g.x[k];
    carry = std::move(g.h_prev);
    dc = std::move(g.c_prev);
  }
  std::fill(carry.begin(), carry.end(), 0.0);
  std::fill(dc.begin(), dc.end(), 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < H; ++k) dh[k] = d_hb(k, t) + carry[k];
    auto g = lstm_cell_backward(backward_cell, bwd_steps_[t], dh, dc);
    for (std::size_t k = 0; k < I; ++k) gx(k, t) += g.x[k];
    carry = std::move(g.h_prev);
    dc = std::move(g.c_prev);
  }
  return gx;
}

Tensor bilstm_forward(BiLstm& layer, const Tensor& x_seq) { return layer.forward(x_seq); }

// ---------------------------------------------------------------------------

TiConvLayer::TiConvLayer(const std::string& name, std::size_t kernel_size, std::size_t depth)
    : kernel(name + ".kernel", {kernel_size, kernel_size, depth}) {}

void TiConvLayer::init(Rng& rng) {
  const std::size_t d = kernel.value.extent(0);
  glorot_uniform(kernel, d * d, d * d, rng);
}

Tensor TiConvLayer::backward(const Tensor& grad_out) {
  auto g = ti_conv_backward(cache_, grad_out);
  axpy(kernel.grad, 1.0, g.kernel);
  return std::move(g.input);
}

Tensor PoolLayer::forward(const Tensor& x) {
  return kind_ == PoolKind::max ? max_pool_forward(x, size_, cache_) : avg_pool_forward(x, size_, cache_);
}

FcLayer::FcLayer(const std::string& name, std::size_t output_dim, std::size_t input_dim)
    : weight(name + ".weight", {output_dim, input_dim}) {}

void FcLayer::init(Rng& rng) { glorot_uniform(weight, weight.value.extent(1), weight.value.extent(0), rng); }

Tensor FcLayer::backward(const Tensor& grad_out) {
  auto g = fc_backward(cache_, grad_out);
  axpy(weight.grad, 1.0, g.weight);
  return std::move(g.input);
}

Dense::Dense(const std::string& name, std::size_t input_dim, std::size_t output_dim, Activation act)
    : weight(name + ".weight", {output_dim, input_dim}), bias(name + ".bias", {output_dim}), activation(act) {}

void Dense::init(Rng& rng) {
  glorot_uniform(weight, weight.value.extent(1), weight.value.extent(0), rng);
  bias.value.fill(0.0);
}

ParamStore Dense::params() { return ParamStore({&weight, &bias}); }

std::vector<double> Dense::forward(std::span<const double> x) {
  const std::size_t O = weight.value.extent(0), I = weight.value.extent(1);
  if (x.size() != I) throw ShapeError("dense input dimension mismatch");
  input_.assign(x.begin(), x.end());
  output_.assign(O, 0.0);
  for (std::size_t o = 0; o < O; ++o) {
    double acc = bias.value[o];
    for (std::size_t k = 0; k < I; ++k) acc += weight.value(o, k) * x[k];
    output_[o] = activate(activation, acc);
  }
  valid_ = true;
  return output_;
}

std::vector<double> Dense::backward(std::span<const double> grad_out) {
  consume(valid_, "dense");
  const std::size_t O = weight.value.extent(0), I = weight.value.extent(1);
  if (grad_out.size() != O) throw ShapeError("dense grad_out dimension mismatch");
  std::vector<double> gx(I, 0.0);
  for (std::size_t o = 0; o < O; ++o) {
    const double gp = grad_out[o] * activate_grad(activation, output_[o]);
    bias.grad[o] += gp;
    for (std::size_t k = 0; k < I; ++k) {
      weight.grad(o, k) += gp * input_[k];
      gx[k] += weight.value(o, k) * gp;
    }
  }
  return gx;
}

}  // namespace stressnet
