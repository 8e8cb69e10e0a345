#include <doctest.h>

#include <cmath>

#include "../support/gradcheck.hpp"
#include "stressnet/errors.hpp"
#include "stressnet/layers.hpp"
#include "stressnet/tensor.hpp"

using namespace stressnet;
using namespace stressnet::testing;

TEST_CASE("reshape keeps data and checks the element count") {
  const Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor r = reshape(t, {3, 2});
  CHECK(r.shape() == Shape{3, 2});
  CHECK(r.values() == t.values());
  CHECK(reshape(Tensor({24, 16, 10}), {384, 10}).shape() == Shape{384, 10});
  CHECK_THROWS_AS(reshape(Tensor({2, 2}), {3, 1}), ShapeError);
}

TEST_CASE("slice_channel") {
  CHECK(slice_channel(Tensor({2, 2, 2}), 2, 1) == Tensor({2, 2}));
  const Tensor t({1, 1, 3}, {4.0, 5.0, 6.0});
  CHECK(slice_channel(t, 2, 0) == Tensor({1, 1}, {4.0}));
  CHECK(slice_channel(t, 2, 2) == Tensor({1, 1}, {6.0}));
  CHECK_THROWS_AS(slice_channel(t, 2, 5), ShapeError);
}

TEST_CASE("matmul, reduce_max and elementwise ops") {
  const Tensor eye({2, 2}, {1, 0, 0, 1});
  const Tensor m({2, 2}, {1, 2, 3, 4});
  CHECK(matmul(eye, m) == m);
  CHECK(matmul(Tensor({1, 2}, {1, 2}), Tensor({2, 1}, {3, 4})) == Tensor({1, 1}, {11}));
  CHECK(reduce_max(Tensor({2, 2}, {-1, 0, 3, 2})) == 3.0);
  CHECK(transpose(m) == Tensor({2, 2}, {1, 3, 2, 4}));
  CHECK_THROWS_AS(add(m, Tensor({1, 4})), ShapeError);
  CHECK_THROWS_AS(matmul(m, Tensor({3, 1})), ShapeError);
}

TEST_CASE("ti_conv forward examples") {
  TiConvCache c;
  CHECK(reduce_max(ti_conv_forward(Tensor({5, 5, 2}), Tensor({3, 3, 2}, 0.7), c)) == 0.0);
  const Tensor y = ti_conv_forward(Tensor({3, 3, 1}, 1.0), Tensor({3, 3, 1}, 1.0), c);
  CHECK(y.shape() == Shape{1, 1, 1});
  CHECK(y[0] == 9.0);
}

TEST_CASE("ti_conv: perturbing one input channel leaves the others bit-identical") {
  Rng rng(11);
  const Tensor x = random_tensor({4, 4, 2}, rng);
  const Tensor k = random_tensor({3, 3, 2}, rng);
  TiConvCache c;
  const Tensor y0 = ti_conv_forward(x, k, c);
  Tensor x1 = x;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) x1(i, j, 0) += rng.uniform(-1.0, 1.0);
  const Tensor y1 = ti_conv_forward(x1, k, c);
  CHECK(slice_channel(y0, 2, 1) == slice_channel(y1, 2, 1));
  CHECK_FALSE(slice_channel(y0, 2, 0) == slice_channel(y1, 2, 0));
}

TEST_CASE("ti_conv backward examples") {
  Rng rng(3);
  const Tensor x = random_tensor({3, 3, 2}, rng);
  const Tensor k = random_tensor({3, 3, 2}, rng);
  TiConvCache c;
  ti_conv_forward(x, k, c);
  const auto zero = ti_conv_backward(c, Tensor({1, 1, 2}));
  CHECK(reduce_max(zero.input) == 0.0);
  CHECK(reduce_max(zero.kernel) == 0.0);
  CHECK(std::abs(reduce_sum(zero.kernel)) == 0.0);

  ti_conv_forward(x, k, c);
  const auto g = ti_conv_backward(c, Tensor({1, 1, 2}, {2.0, -0.5}));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(g.kernel(i, j, 0) == doctest::Approx(2.0 * x(i, j, 0)).epsilon(1e-15));
      CHECK(g.kernel(i, j, 1) == doctest::Approx(-0.5 * x(i, j, 1)).epsilon(1e-15));
    }
  CHECK_THROWS_AS(ti_conv_backward(c, Tensor({1, 1, 2})), StaleCacheError);
}

TEST_CASE("ti_conv 5x5x3, d=2 matches central differences to 1e-6") {
  Rng rng(5);
  Tensor x = random_tensor({5, 5, 3}, rng);
  Tensor k = random_tensor({2, 2, 3}, rng);
  TiConvCache c;
  const Tensor w = random_tensor({4, 4, 3}, rng);
  ti_conv_forward(x, k, c);
  const auto g = ti_conv_backward(c, w);
  auto f = [&] {
    TiConvCache cc;
    return weighted_sum(ti_conv_forward(x, k, cc), w);
  };
  GradReport rep;
  check_entries(x.data(), g.input.data(), f, "x", rep);
  check_entries(k.data(), g.kernel.data(), f, "k", rep);
  CHECK_MESSAGE(rep.max_rel < 1e-6, rep.worst);
}

TEST_CASE("pooling examples") {
  PoolCache c;
  const Tensor block({2, 2, 1}, {0, 0, 0, 1});
  CHECK(max_pool_forward(block, 2, c)[0] == 1.0);
  CHECK(avg_pool_forward(block, 2, c)[0] == 0.25);
  const Tensor konst({4, 6, 2}, 0.37);
  CHECK(max_pool_forward(konst, 2, c) == Tensor({2, 3, 2}, 0.37));
  const Tensor avg = avg_pool_forward(konst, 2, c);
  for (double v : avg.values()) CHECK(v == doctest::Approx(0.37).epsilon(1e-15));
  Tensor sparse({8, 8, 1});
  sparse(5, 2, 0) = 1.0;
  CHECK(max_pool_forward(sparse, 8, c)[0] == 1.0);
  CHECK_THROWS_AS(max_pool_forward(Tensor({5, 4, 1}), 2, c), ShapeError);
}

TEST_CASE("fc examples") {
  FcCache c;
  Rng rng(2);
  const Tensor x = random_tensor({2, 2, 3}, rng);
  const Tensor eye({4, 4}, {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1});
  CHECK(fc_forward(x, eye, c) == reshape(x, {4, 3}));
  CHECK(reduce_max(fc_forward(Tensor({2, 2, 3}), random_tensor({5, 4}, rng), c)) == 0.0);
  const Tensor y = fc_forward(Tensor({2, 1, 1}, {1.5, -4.0}), Tensor({1, 2}, {1.0, 1.0}), c);
  CHECK(y == Tensor({1, 1}, {-2.5}));
}

TEST_CASE("lstm cell examples") {
  LstmCell cell("c", 3, 4);
  const LstmState s = lstm_cell_step(cell, std::vector<double>{0.3, -2.0, 5.0}, LstmState::zeros(4));
  for (double v : s.h) CHECK(v == 0.0);

  LstmCell sat("s", 2, 3);
  for (std::size_t r = 3; r < 6; ++r) sat.bias.value[r] = 50.0;  // forget gate rows
  LstmState prev = LstmState::zeros(3);
  prev.c = {0.4, -1.2, 2.5};
  const LstmState next = lstm_cell_step(sat, std::vector<double>{0.7, -0.1}, prev);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(next.c[i] - prev.c[i]) < 1e-9);
}

TEST_CASE("random 4-dim lstm cell matches central differences to 1e-6") {
  Rng rng(17);
  LstmCell cell("c", 4, 4);
  cell.init(rng);
  std::vector<double> x(4), dh(4), dc(4);
  LstmState prev = LstmState::zeros(4);
  for (std::size_t i = 0; i < 4; ++i) {
    x[i] = rng.uniform(-1, 1);
    prev.h[i] = rng.uniform(-1, 1);
    prev.c[i] = rng.uniform(-1, 1);
    dh[i] = rng.uniform(-1, 1);
    dc[i] = rng.uniform(-1, 1);
  }
  auto f = [&] {
    const auto s = lstm_cell_step(cell, x, prev);
    double l = 0;
    for (std::size_t i = 0; i < 4; ++i) l += dh[i] * s.h[i] + dc[i] * s.c[i];
    return l;
  };
  cell.params().zero_grad();
  LstmStepCache cache;
  lstm_cell_step(cell, x, prev, &cache);
  const auto g = lstm_cell_backward(cell, cache, dh, dc);
  GradReport rep;
  check_entries_5pt(x, g.x, f, "x", rep);
  check_entries_5pt(prev.h, g.h_prev, f, "h", rep);
  check_entries_5pt(prev.c, g.c_prev, f, "c", rep);
  check_params(cell.params(), f, rep, true);
  CHECK_MESSAGE(rep.max_rel < 1e-6, rep.worst);
}

TEST_CASE("bilstm examples") {
  Rng rng(8);
  BiLstm one("b", 2, 3, 2, Activation::identity);
  one.init(rng);
  const Tensor y1 = one.forward(random_tensor({2, 1}, rng));
  CHECK(y1.shape() == Shape{2, 1});
  CHECK(all_finite(y1));

  BiLstm zero("z", 2, 3, 2, Activation::sigmoid);
  zero.out_bias.value = Tensor({2}, {0.4, -1.0});
  const Tensor yz = zero.forward(Tensor({2, 5}));
  for (std::size_t t = 0; t < 5; ++t) {
    CHECK(yz(0, t) == sigmoid(0.4));
    CHECK(yz(1, t) == sigmoid(-1.0));
  }
  CHECK(reduce_max(zero.forward_hidden()) == 0.0);
  CHECK(reduce_max(zero.backward_hidden()) == 0.0);
}

TEST_CASE("bilstm time reversal with swapped directions reverses the output") {
  Rng rng(21);
  BiLstm a("a", 3, 4, 2, Activation::sigmoid);
  a.init(rng);
  for (auto& v : a.out_bias.value.data()) v = rng.uniform(-1, 1);
  BiLstm b = a;
  std::swap(b.forward_cell, b.backward_cell);
  std::swap(b.out_forward, b.out_backward);
  const std::size_t T = 6;
  const Tensor x = random_tensor({3, T}, rng);
  Tensor xr({3, T});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t t = 0; t < T; ++t) xr(i, t) = x(i, T - 1 - t);
  const Tensor ya = a.forward(x);
  const Tensor yb = b.forward(xr);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t t = 0; t < T; ++t) CHECK(yb(i, t) == doctest::Approx(ya(i, T - 1 - t)).epsilon(1e-14));
}

TEST_CASE("layer gradients match central differences over seeds") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    CAPTURE(seed);
    for (const auto& rep : {gradcheck_ti_conv(seed), gradcheck_pool(seed, PoolKind::max),
                            gradcheck_pool(seed, PoolKind::average), gradcheck_fc(seed), gradcheck_lstm_cell(seed),
                            gradcheck_lstm_sequence(seed), gradcheck_bilstm(seed), gradcheck_dense(seed)}) {
      CHECK(rep.checked > 0);
      CHECK_MESSAGE(rep.max_rel < 1e-4, rep.worst);
    }
  }
}

TEST_CASE("stale caches throw") {
  Rng rng(1);
  BiLstm b("b", 1, 2, 1, Activation::identity);
  b.init(rng);
  CHECK_THROWS_AS(b.backward(Tensor({1, 3})), StaleCacheError);
  b.forward(Tensor({1, 3}, 0.5));
  b.backward(Tensor({1, 3}, 1.0));
  CHECK_THROWS_AS(b.backward(Tensor({1, 3}, 1.0)), StaleCacheError);
}
