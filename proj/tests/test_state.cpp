#include <doctest.h>

#include "alignlab/state.hpp"
#include "support/random_triples.hpp"

using namespace alignlab;

namespace {
const SpectrumD kSpecA(Eigen::Vector2d(2, 1), 1);
const NoiseProfileD kNoiseA = isotropic_noise<double>(2, 1.0);
const StateD kStateA(Eigen::Vector2d(1, 1));
}  // namespace

TEST_CASE("alignment") {
  CHECK(alignment(kStateA, kSpecA) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(alignment(StateD(Eigen::Vector2d(1, 0)), kSpecA) == 1.0);
  CHECK(alignment(StateD(Eigen::Vector2d::Zero()), kSpecA) == 0.0);
  CHECK_THROWS_AS(alignment(StateD(Eigen::Vector3d(1, 1, 1)), kSpecA), ParameterError);
}

TEST_CASE("block_stats on the two-mode fixture") {
  const auto st = block_stats(kStateA, kSpecA, kNoiseA);
  CHECK(st.sD == 4.0);
  CHECK(st.sB == 1.0);
  CHECK(st.s == 5.0);
  CHECK(st.tauD == 8.0);
  CHECK(st.tauB == 1.0);
  CHECK(st.uD == 16.0);
  CHECK(st.uB == 1.0);
  CHECK(st.eD == 4.0);
  CHECK(st.eB == 1.0);
  CHECK(st.nLossD == 2.0);
  CHECK(st.nLossB == 1.0);
  CHECK(st.theta == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(st.mean_curvature(Block::dominant) == 2.0);

  const auto zero = block_stats(StateD(Eigen::Vector2d::Zero()), kSpecA, kNoiseA);
  CHECK(zero.s == 0.0);
  CHECK(zero.theta == 0.0);
  CHECK(zero.eD == 4.0);
  CHECK(zero.nLossB == 1.0);
  CHECK_THROWS_AS(zero.mean_curvature(Block::bulk), DegenerateStateError);

  const auto twice = block_stats(StateD(Eigen::Vector2d(2, 2)), kSpecA, kNoiseA);
  CHECK(twice.sD == 16.0);
  CHECK(twice.tauB == 4.0);
  CHECK(twice.uD == 64.0);
  CHECK(twice.theta == st.theta);
}

TEST_CASE("loss") {
  CHECK(loss(kStateA, kSpecA) == 1.5);
  CHECK(loss(StateD(Eigen::Vector2d::Zero()), kSpecA) == 0.0);
  CHECK(loss(StateD(Eigen::Vector2d(0, 1)), kSpecA) == 0.5);
}

TEST_CASE("random_init") {
  const auto a = random_init<double>(500, 1.0, 42);
  const auto b = random_init<double>(500, 1.0, 42);
  CHECK(a == b);
  CHECK(a.t == 0);
  const double ms = a.c.squaredNorm() / 500.0;
  CHECK(ms >= 0.8);
  CHECK(ms <= 1.2);
  CHECK_THROWS_AS(random_init<double>(5, 0.0, 1), ParameterError);
  CHECK_THROWS_AS(random_init<double>(5, -1.0, 1), ParameterError);
}

TEST_CASE("state properties on random triples") {
  for (std::uint64_t i = 0; i < 300; ++i) {
    const auto t = testing::random_triple(21, i);
    const auto& spec = t.spec;
    const auto st = block_stats(t.state, spec, t.noise);
    const double theta = alignment(t.state, spec);
    CHECK(st.theta == theta);
    for (double a : {0.5, 3.0, 10.0})
      CHECK(alignment(StateD(a * t.state.c), spec) == doctest::Approx(theta).epsilon(1e-13));

    const double n2 = t.state.norm2();
    const double l1 = spec.lambda_max(), ld = spec.lambda_min();
    CHECK(st.s >= ld * ld * n2 * (1 - 1e-12));
    CHECK(st.s <= l1 * l1 * n2 * (1 + 1e-12));

    CHECK(st.tauD >= spec.lambda_k() * st.sD * (1 - 1e-12));
    CHECK(st.tauD <= l1 * st.sD * (1 + 1e-12));
    CHECK(st.tauB >= ld * st.sB * (1 - 1e-12));
    CHECK(st.tauB <= spec.lambda_k1() * st.sB * (1 + 1e-12));

    const double lk = spec.lambda_k();
    const double pd = t.state.c.head(spec.k()).squaredNorm();
    CHECK(theta > lk * lk * pd / (l1 * l1 * n2));
  }
}

TEST_CASE("rescaling helpers") {
  const auto t = testing::random_triple(5, 1);
  for (double target : {0.1, 0.5, 0.99}) {
    CHECK(alignment(rescale_dominant_to_alignment(t.state, t.spec, target), t.spec) ==
          doctest::Approx(target).epsilon(1e-12));
    CHECK(alignment(rescale_bulk_to_alignment(t.state, t.spec, target), t.spec) ==
          doctest::Approx(target).epsilon(1e-12));
  }
  const auto r = rescale_to_energy(t.state, t.spec, 1.0);
  CHECK(block_stats(r, t.spec, t.noise).s == doctest::Approx(1.0).epsilon(1e-13));
  CHECK_THROWS_AS(rescale_dominant_to_alignment(t.state, t.spec, 1.0), ParameterError);
  StateD bulk_only = t.state;
  bulk_only.c.head(t.spec.k()).setZero();
  CHECK_THROWS_AS(rescale_dominant_to_alignment(bulk_only, t.spec, 0.5), DegenerateStateError);
}
