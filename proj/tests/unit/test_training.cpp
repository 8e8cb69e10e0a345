#include <doctest.h>

#include <cmath>
#include <fstream>

#include "../support/gradcheck.hpp"
#include "../support/tempdir.hpp"
#include "stressnet/baselines.hpp"
#include "stressnet/dataset_io.hpp"
#include "stressnet/errors.hpp"
#include "stressnet/model.hpp"
#include "stressnet/trainer.hpp"

using namespace stressnet;
using namespace stressnet::testing;

namespace {

std::vector<PreparedSim> tiny_sims(int n, std::uint64_t base = 0) {
  std::vector<PreparedSim> sims;
  for (int i = 0; i < n; ++i) sims.push_back(prepare(simulate({}, base + i), "sim" + std::to_string(i)));
  return sims;
}

StressNetConfig small_config() {
  StressNetConfig c = StressNetConfig::desk();
  c.feature_dim = 4;
  c.hidden_dim = 4;
  return c;
}

}  // namespace

TEST_CASE("adam: zero gradient leaves fresh parameters and decays moments") {
  Param p("p", {3});
  p.value = Tensor({3}, {0.5, -1.0, 2.0});
  const AdamConfig cfg;
  p.zero_grad();
  const Tensor before = p.value;
  AdamMoments fresh{Tensor({3}), Tensor({3})};
  adam_step(p, fresh, 1, cfg);
  CHECK(p.value == before);

  AdamMoments m{Tensor({3}, 0.2), Tensor({3}, 0.4)};
  adam_step(p, m, 2, cfg);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(m.m[i] == doctest::Approx(0.9 * 0.2).epsilon(1e-15));
    CHECK(m.v[i] == doctest::Approx(0.999 * 0.4).epsilon(1e-15));
  }
}

TEST_CASE("adam: first step with unit gradient moves by about the learning rate") {
  Param p("p", {1});
  p.value[0] = 1.0;
  p.grad[0] = 1.0;
  AdamMoments m{Tensor({1}), Tensor({1})};
  const AdamConfig cfg;
  adam_step(p, m, 1, cfg);
  // m_hat = 1, v_hat = 1, so the step is lr / (1 + eps)
  CHECK(p.value[0] == doctest::Approx(1.0 - cfg.learning_rate / (1.0 + cfg.epsilon)).epsilon(1e-15));
  AdamMoments wrong{Tensor({2}), Tensor({2})};
  CHECK_THROWS_AS(adam_step(p, wrong, 2, cfg), ShapeError);
}

TEST_CASE("gradient clipping") {
  Param a("a", {2}), b("b", {1});
  a.grad = Tensor({2}, {3.0, 0.0});
  b.grad = Tensor({1}, {4.0});
  ParamStore s({&a, &b});
  CHECK(clip_grad_norm(s, 10.0) == doctest::Approx(5.0));
  CHECK(a.grad[0] == 3.0);
  CHECK(clip_grad_norm(s, 1.0) == doctest::Approx(5.0));
  CHECK(a.grad[0] == doctest::Approx(0.6));
  CHECK(b.grad[0] == doctest::Approx(0.8));
}

TEST_CASE("stressnet structure") {
  StressNet m(small_config(), Channel::yy, 3);
  const auto& cfg = m.config();
  CHECK(cfg.feature_map_extent() == std::pair<std::size_t, std::size_t>{5, 3});
  std::vector<double> stress(cfg.delta_t, 0.0);
  Tensor damage({24, 16, cfg.delta_t});
  m.zero_parameters();
  m.head.bias.value[0] = 0.3;
  CHECK(m.forward(stress, damage) == sigmoid(0.3));

  StressNetConfig bad = StressNetConfig::desk();
  bad.conv_blocks = {{3, 2}, {3, 2}};
  CHECK_THROWS_AS(bad.validate(), ShapeError);
  CHECK_THROWS_AS(m.forward(std::vector<double>(3), damage), ShapeError);
}

TEST_CASE("damage at one step only changes that step before fusion") {
  StressNet m(small_config(), Channel::yy, 4);
  const std::size_t dt = m.config().delta_t;
  Rng rng(1);
  std::vector<double> stress(dt);
  for (auto& v : stress) v = rng.uniform();
  Tensor damage({24, 16, dt});
  for (auto& v : damage.data()) v = rng.bernoulli(0.1) ? 1.0 : 0.0;
  m.forward(stress, damage);
  const Tensor feat0 = m.activations().damage_features;
  const Tensor stress0 = m.activations().stress_features;
  Tensor d2 = damage;
  for (std::size_t r = 0; r < 24; ++r)
    for (std::size_t c = 0; c < 16; ++c) d2(r, c, 3) = 1.0 - d2(r, c, 3);
  m.forward(stress, d2);
  const Tensor& feat1 = m.activations().damage_features;
  CHECK(m.activations().stress_features == stress0);
  for (std::size_t i = 0; i < feat0.extent(0); ++i)
    for (std::size_t t = 0; t < dt; ++t) {
      if (t == 3)
        continue;
      CHECK(feat0(i, t) == feat1(i, t));
    }
  bool changed = false;
  for (std::size_t i = 0; i < feat0.extent(0); ++i) changed |= feat0(i, 3) != feat1(i, 3);
  CHECK(changed);
}

TEST_CASE("stressnet backward: zero upstream, repeatability and finite differences") {
  StressNet m(small_config(), Channel::yy, 5);
  const std::size_t dt = m.config().delta_t;
  Rng rng(2);
  std::vector<double> stress(dt);
  for (auto& v : stress) v = rng.uniform();
  Tensor damage({24, 16, dt});
  for (auto& v : damage.data()) v = rng.bernoulli(0.2) ? 1.0 : 0.0;
  auto params = m.params();
  params.zero_grad();
  m.forward(stress, damage);
  m.backward(0.0);
  for (const Param* p : params) CHECK(reduce_max(p->grad) == 0.0);

  auto grads = [&] {
    params.zero_grad();
    m.forward(stress, damage);
    m.backward(1.0);
    std::vector<Tensor> g;
    for (const Param* p : params) g.push_back(p->grad);
    return g;
  };
  CHECK(grads() == grads());
  CHECK_THROWS_AS(m.backward(1.0), StaleCacheError);

  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto rep = gradcheck_stressnet(seed);
    CHECK_MESSAGE(rep.max_rel < 1e-4, rep.worst);
  }
}

TEST_CASE("checkpoint round trip and failures") {
  TempDir tmp("ckpt");
  StressNet m(small_config(), Channel::xx, 7);
  m.stats = {12.5, 9.0e6};
  Rng rng(3);
  std::vector<double> stress(10);
  for (auto& v : stress) v = rng.uniform();
  Tensor damage({24, 16, 10});
  for (auto& v : damage.data()) v = rng.bernoulli(0.2) ? 1.0 : 0.0;
  const auto path = tmp.path() / "m.ckpt";
  save_checkpoint(m, path);
  StressNet back = load_checkpoint(path);
  CHECK(back.forward(stress, damage) == m.forward(stress, damage));
  CHECK(back.channel == Channel::xx);
  CHECK(back.stats.x_min == 12.5);
  CHECK(back.config() == m.config());

  StressNetConfig five = small_config();
  five.delta_t = 5;
  CHECK_THROWS_AS(load_checkpoint(path, five), ShapeError);

  const std::string bytes = read_file_bytes(path);
  std::ofstream(tmp.path() / "cut.ckpt", std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  CHECK_THROWS_AS(load_checkpoint(tmp.path() / "cut.ckpt"), CheckpointError);
}

TEST_CASE("one epoch on two tiny sims finishes with a finite loss") {
  const auto sims = tiny_sims(2);
  StressNet m(small_config(), Channel::yy, 1);
  const std::vector<std::size_t> pool{0, 1};
  m.stats = fit_stats(sims, pool, Channel::yy);
  TrainConfig tc;
  tc.epochs = 1;
  tc.schedule = LossSchedule::scaled_to(1);
  tc.n_val = 1;
  const auto h = train(m, sims, pool, tc);
  REQUIRE(h.epochs.size() == 1);
  CHECK(std::isfinite(h.epochs[0].train_loss));
  CHECK(std::isfinite(h.epochs[0].val_mape));
}

TEST_CASE("lambda in the history switches at switch_epoch and training is deterministic") {
  const auto sims = tiny_sims(2, 10);
  const std::vector<std::size_t> pool{0, 1};
  TrainConfig tc;
  tc.epochs = 4;
  tc.schedule = LossSchedule::scaled_to(4);
  tc.schedule.switch_epoch = 2;
  tc.n_val = 0;
  tc.epochs_per_shuffle = 2;
  auto run = [&] {
    LstmBaseline m(BaselineConfig::desk(), Channel::yy, 9);
    m.stats = fit_stats(sims, pool, Channel::yy);
    const auto h = train(m, sims, pool, tc);
    std::vector<Tensor> values;
    for (const Param* p : m.params()) values.push_back(p->value);
    return std::make_pair(h, values);
  };
  const auto [h1, v1] = run();
  const auto [h2, v2] = run();
  CHECK(v1 == v2);
  REQUIRE(h1.epochs.size() == 4);
  CHECK(h1.epochs[0].lambda == 0.9);
  CHECK(h1.epochs[1].lambda == 0.9);
  CHECK(h1.epochs[2].lambda == 0.1);
  CHECK(h1.best_epoch == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(h1.epochs[i].train_loss == h2.epochs[i].train_loss);
}

TEST_CASE("training configuration validation") {
  TrainConfig tc;
  tc.batch_size = 0;
  CHECK_THROWS_AS(tc.validate(), DomainError);
  tc = TrainConfig::desk();
  tc.adam.learning_rate = 0.0;
  CHECK_THROWS_AS(tc.validate(), DomainError);
  CHECK(TrainConfig::paper().epochs == 1800);
  CHECK(TrainConfig::paper().schedule.switch_epoch == 600);
  CHECK(TrainConfig::desk().epochs == 60);
}

TEST_CASE("historical average") {
  const std::vector<std::vector<double>> one{{1.0, 2.0, 3.0}};
  const auto ha1 = HistoricalAverage::fit(one);
  for (std::size_t t = 0; t < 3; ++t) CHECK(ha1.predict(t) == one[0][t]);
  const std::vector<std::vector<double>> two{{1.0, 5.0}, {2.0, 8.0}};
  CHECK(HistoricalAverage::fit(two).predict(1) == 6.5);

  Rng rng(4);
  std::vector<std::vector<double>> many(55, std::vector<double>(228));
  for (auto& s : many)
    for (auto& v : s) v = rng.uniform(0.0, 1e7);
  const auto ha = HistoricalAverage::fit(many);
  for (std::size_t t = 0; t < 228; ++t) {
    long double sum = 0;
    for (const auto& s : many) sum += s[t];
    CHECK(std::abs(ha.predict(t) - static_cast<double>(sum / 55)) < 1e-12 * 1e7);
  }
}

TEST_CASE("stress-only baselines") {
  static_assert(!LstmBaseline::kUsesDamage);
  static_assert(!BiLstmBaseline::kUsesDamage);
  const auto sims = tiny_sims(1, 20);
  const std::vector<std::size_t> pool{0};
  LstmBaseline lstm(BaselineConfig::desk(), Channel::xx, 2);
  lstm.stats = fit_stats(sims, pool, Channel::xx);
  CHECK(lstm.window() == 50);
  const auto r = rollout(lstm, sims[0]);
  CHECK(r.pred.size() == 228 - 50);

  TempDir tmp("base");
  BiLstmBaseline bi(BaselineConfig::desk(), Channel::yy, 3);
  bi.stats = {1.0, 2.0};
  save_checkpoint(bi, tmp.path() / "b.ckpt");
  auto back = load_bilstm_baseline(tmp.path() / "b.ckpt");
  const std::vector<double> w(50, 0.25);
  CHECK(back.forward(w) == bi.forward(w));
  CHECK_THROWS_AS(load_lstm_baseline(tmp.path() / "b.ckpt"), CheckpointError);
}
