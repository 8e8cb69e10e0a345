#pragma once

// Differentiable building blocks. Each op comes as a free forward/backward
// pair operating on an explicit cache, plus a small layer class that owns its
// parameters and cache. A cache is armed by forward and consumed by exactly
// one backward; a second backward throws StaleCacheError.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "stressnet/params.hpp"
#include "stressnet/rng.hpp"
#include "stressnet/tensor.hpp"

namespace stressnet {

enum class Activation { identity, sigmoid };

double sigmoid(double x);

// ---------------------------------------------------------------------------
// Temporal-independent convolution: input H x W x T, kernel d x d x T.
// Output channel t depends only on input channel t and kernel slice t; valid
// correlation, so the output is (H-d+1) x (W-d+1) x T.

struct TiConvCache {
  Tensor input;
  Tensor kernel;
  bool valid = false;
};

struct TiConvGrads {
  Tensor input;
  Tensor kernel;
};

Tensor ti_conv_forward(const Tensor& x, const Tensor& kernel, TiConvCache& cache);
TiConvGrads ti_conv_backward(TiConvCache& cache, const Tensor& grad_out);

// ---------------------------------------------------------------------------
// Non-overlapping d x d pooling per channel: H x W x T -> H/d x W/d x T.

enum class PoolKind { max, average };

struct PoolCache {
  PoolKind kind = PoolKind::max;
  std::size_t size = 0;
  Shape input_shape;
  std::vector<std::size_t> winners;  // flat input index per output cell (max only)
  bool valid = false;
};

Tensor max_pool_forward(const Tensor& x, std::size_t d, PoolCache& cache);
Tensor avg_pool_forward(const Tensor& x, std::size_t d, PoolCache& cache);
Tensor pool_backward(PoolCache& cache, const Tensor& grad_out);

// ---------------------------------------------------------------------------
// Per-step fully connected map without bias: H x W x T (or F x T) input is
// flattened to (H*W) x T and multiplied by W (D x H*W), giving D x T.

struct FcCache {
  Tensor flat_input;
  Tensor weight;
  Shape input_shape;
  bool valid = false;
};

struct FcGrads {
  Tensor input;
  Tensor weight;
};

Tensor fc_forward(const Tensor& x, const Tensor& weight, FcCache& cache);
FcGrads fc_backward(FcCache& cache, const Tensor& grad_out);

// ---------------------------------------------------------------------------
// LSTM cell. Gate rows are stacked [input | forget | candidate | output].

class LstmCell {
 public:
  LstmCell() = default;
  /// Weights zero; call init() for random weights.
  LstmCell(const std::string& name, std::size_t input_dim, std::size_t hidden_dim);

  void init(Rng& rng);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden_dim() const { return hidden_dim_; }

  Param input_weights;      // 4H x in
  Param recurrent_weights;  // 4H x H
  Param bias;               // 4H

  ParamStore params();

 private:
  std::size_t input_dim_ = 0;
  std::size_t hidden_dim_ = 0;
};

struct LstmState {
  std::vector<double> h;
  std::vector<double> c;

  static LstmState zeros(std::size_t hidden) { return {std::vector<double>(hidden), std::vector<double>(hidden)}; }
};

struct LstmStepCache {
  std::vector<double> x;
  LstmState prev;
  std::vector<double> gates;  // activated i, f, g, o
  std::vector<double> c;
  std::vector<double> tanh_c;
};

struct LstmStepGrads {
  std::vector<double> x;
  std::vector<double> h_prev;
  std::vector<double> c_prev;
};

LstmState lstm_cell_step(const LstmCell& cell, std::span<const double> x, const LstmState& prev,
                         LstmStepCache* cache = nullptr);

/// Accumulates weight gradients into `cell` and returns input/state gradients.
LstmStepGrads lstm_cell_backward(LstmCell& cell, const LstmStepCache& cache, std::span<const double> dh,
                                 std::span<const double> dc);

// ---------------------------------------------------------------------------
// Unidirectional LSTM over a sequence: in x T -> hidden states H x T.

class Lstm {
 public:
  Lstm() = default;
  Lstm(const std::string& name, std::size_t input_dim, std::size_t hidden_dim);

  void init(Rng& rng) { cell.init(rng); }

  Tensor forward(const Tensor& x_seq);
  Tensor backward(const Tensor& grad_hidden);

  ParamStore params() { return cell.params(); }

  LstmCell cell;

 private:
  std::vector<LstmStepCache> steps_;
  bool valid_ = false;
};

// ---------------------------------------------------------------------------
// Bidirectional LSTM with the per-step output head
//   y_t = act(W_fwd h_fwd_t + W_bwd h_bwd_t + b)
// The forward cell runs left to right, the backward cell right to left.

class BiLstm {
 public:
  BiLstm() = default;
  BiLstm(const std::string& name, std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
         Activation activation);

  void init(Rng& rng);

  /// in x T -> out x T
  Tensor forward(const Tensor& x_seq);
  /// out x T -> in x T, accumulating parameter gradients.
  Tensor backward(const Tensor& grad_out);

  ParamStore params();

  std::size_t input_dim() const { return forward_cell.input_dim(); }
  std::size_t hidden_dim() const { return forward_cell.hidden_dim(); }
  std::size_t output_dim() const { return out_forward.value.extent(0); }

  /// Hidden states of the last forward pass, H x T each.
  const Tensor& forward_hidden() const { return h_fwd_; }
  const Tensor& backward_hidden() const { return h_bwd_; }

  LstmCell forward_cell;
  LstmCell backward_cell;
  Param out_forward;   // out x H
  Param out_backward;  // out x H
  Param out_bias;      // out
  Activation activation = Activation::identity;

 private:
  std::vector<LstmStepCache> fwd_steps_;
  std::vector<LstmStepCache> bwd_steps_;
  Tensor h_fwd_;
  Tensor h_bwd_;
  Tensor output_;
  bool valid_ = false;
};

Tensor bilstm_forward(BiLstm& layer, const Tensor& x_seq);

// ---------------------------------------------------------------------------
// Layer wrappers owning parameters for the damage branch, plus a dense head.

class TiConvLayer {
 public:
  TiConvLayer() = default;
  TiConvLayer(const std::string& name, std::size_t kernel_size, std::size_t depth);
  void init(Rng& rng);
  Tensor forward(const Tensor& x) { return ti_conv_forward(x, kernel.value, cache_); }
  Tensor backward(const Tensor& grad_out);
  Param kernel;

 private:
  TiConvCache cache_;
};

class PoolLayer {
 public:
  PoolLayer() = default;
  PoolLayer(std::size_t size, PoolKind kind) : size_(size), kind_(kind) {}
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out) { return pool_backward(cache_, grad_out); }

 private:
  std::size_t size_ = 2;
  PoolKind kind_ = PoolKind::max;
  PoolCache cache_;
};

class FcLayer {
 public:
  FcLayer() = default;
  FcLayer(const std::string& name, std::size_t output_dim, std::size_t input_dim);
  void init(Rng& rng);
  Tensor forward(const Tensor& x) { return fc_forward(x, weight.value, cache_); }
  Tensor backward(const Tensor& grad_out);
  Param weight;

 private:
  FcCache cache_;
};

/// y = act(W x + b) on a single vector.
class Dense {
 public:
  Dense() = default;
  Dense(const std::string& name, std::size_t input_dim, std::size_t output_dim, Activation activation);
  void init(Rng& rng);
  std::vector<double> forward(std::span<const double> x);
  std::vector<double> backward(std::span<const double> grad_out);
  ParamStore params();

  Param weight;
  Param bias;
  Activation activation = Activation::identity;

 private:
  std::vector<double> input_;
  std::vector<double> output_;
  bool valid_ = false;
};

}  // namespace stressnet
