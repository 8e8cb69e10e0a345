#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "../support/sim_oracles.hpp"
#include "stressnet/errors.hpp"
#include "stressnet/fracture_sim.hpp"

using namespace stressnet;
using namespace stressnet::testing;

TEST_CASE("seeded cracks: 20 separate cracks of 12-14 px with allowed orientations") {
  const SimConfig cfg;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    CAPTURE(seed);
    Rng rng(seed);
    const InitialDamage d = seed_cracks(rng, cfg);
    CHECK(d.cracks.size() == 20);
    CHECK(count_components(d.frame) == 20);
    std::set<int> cells;
    for (const auto& c : d.cracks) {
      CHECK((c.orientation_deg == 0 || c.orientation_deg == 60 || c.orientation_deg == 120));
      CHECK(c.pixels.size() >= 12);
      CHECK(c.pixels.size() <= 14);
      cells.insert(c.cell);
    }
    CHECK(cells.size() == 20);
  }
  Rng a(5), b(5);
  CHECK(seed_cracks(a, cfg).frame == seed_cracks(b, cfg).frame);
}

TEST_CASE("simulation record contract") {
  const SimConfig cfg;
  const auto rec = simulate(cfg, 3);
  CHECK(rec.steps() == 228);
  CHECK(rec.stress_xx.size() == 228);
  CHECK(rec.rows == 192);
  CHECK(rec.cols == 128);
  for (int t = 0; t < rec.steps(); ++t) {
    CHECK(rec.stress_yy[t] > 0.0);
    CHECK(rec.stress_xx[t] > 0.0);
  }
  CHECK(count_components(rec.frame(0)) <= 20);
  const auto again = simulate(cfg, 3);
  CHECK(again.onset == rec.onset);
  CHECK(again.stress_yy == rec.stress_yy);
  CHECK(again.failure_step == rec.failure_step);
}

TEST_CASE("damage is monotone and the failure flag matches the spanning oracle") {
  for (std::uint64_t seed : {0u, 7u, 13u}) {
    CAPTURE(seed);
    const auto rec = simulate({}, seed);
    BinaryFrame prev = rec.frame(0);
    for (int t = 0; t < rec.steps(); ++t) {
      const BinaryFrame f = rec.frame(t);
      CHECK(monotone(prev, f));
      const bool failed = rec.failure_step && t >= *rec.failure_step;
      CHECK(spans_oracle(f) == failed);
      CHECK(spans_horizontally(f) == failed);
      prev = f;
    }
  }
}

TEST_CASE("infinite toughness freezes damage and the stress ramp is monotone") {
  SimConfig cfg;
  cfg.toughness = std::numeric_limits<double>::infinity();
  cfg.fluctuation = 0.0;
  const auto rec = simulate(cfg, 2);
  CHECK_FALSE(rec.failure_step.has_value());
  const BinaryFrame f0 = rec.frame(0);
  CHECK(rec.frame(rec.steps() - 1) == f0);
  for (int t = 1; t < rec.steps(); ++t) CHECK(rec.stress_yy[t] > rec.stress_yy[t - 1]);
  const double ratio = rec.stress_yy[0] / 1.0;
  for (int t = 0; t < rec.steps(); ++t) CHECK(rec.stress_yy[t] == doctest::Approx(ratio * (t + 1)).epsilon(1e-12));
}

TEST_CASE("zero toughness fails within 128 steps") {
  SimConfig cfg;
  cfg.toughness = 0.0;
  cfg.toughness_spread = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto rec = simulate(cfg, seed);
    REQUIRE(rec.failure_step.has_value());
    CHECK(*rec.failure_step <= 128);
  }
}

TEST_CASE("dataset generation") {
  const auto one = generate_dataset(1, 0);
  CHECK(one.size() == 1);
  std::set<int> fails;
  for (const auto& r : generate_dataset(20, 100)) fails.insert(r.failure_step.value_or(-1));
  CHECK(fails.size() >= 2);
  SimConfig bad;
  bad.drop_min = 0.95;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("stress fluctuates after the ramp") {
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) ok += post_ramp_maxima(simulate({}, seed).stress_yy) >= 5;
  CHECK(ok >= 18);
}
