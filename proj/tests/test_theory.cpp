#include <doctest.h>

#include <cmath>
#include <utility>
#include <vector>

#include "alignlab/theory.hpp"
#include "support/random_triples.hpp"

using namespace alignlab;

// Reference values below come from tests/oracle/fixa_oracle.py (40-digit
// arithmetic) for lambda = (2, 1), k = 1, kappa^2 = (1, 1), c = (1, 1).
namespace {
const SpectrumD kSpec(Eigen::Vector2d(2, 1), 1);
const NoiseProfileD kNoise = isotropic_noise<double>(2, 1.0);
const StateD kState(Eigen::Vector2d(1, 1));
const BlockStatsD kStats = block_stats(kState, kSpec, kNoise);

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }
}  // namespace

TEST_CASE("drift quadratic on the fixture") {
  const auto dq = drift_quadratic(kStats);
  CHECK(dq.q == -8.0);
  CHECK(dq.p == 12.0);
  REQUIRE(dq.eta_star);
  CHECK(close(*dq.eta_star, 2.0 / 3.0, 1e-15));
  CHECK(close(expected_drift(dq, 0.1), -0.68, 1e-14));
  CHECK(std::abs(expected_drift(dq, *dq.eta_star)) < 1e-14);
  CHECK(expected_drift(dq, 1e-6) < 0);
  CHECK(drift_sign(dq, 0.1) == -1);
  CHECK(drift_sign(dq, 1.0) == 1);
  CHECK(drift_sign(dq, *dq.eta_star) == 0);
  CHECK_THROWS_AS(drift_quadratic(block_stats(StateD(Eigen::Vector2d::Zero()), kSpec, kNoise)),
                  DegenerateStateError);
}

TEST_CASE("drift quadratic collapses on a dominant-only state") {
  const auto st = block_stats(StateD(Eigen::Vector2d(1, 0)), kSpec, kNoise);
  const auto dq = drift_quadratic(st);
  CHECK(dq.q == 0.0);
  CHECK(dq.p == -st.sD * st.eB);
  CHECK(dq.p <= 0);
  CHECK(drift_sign(dq, 0.3) == -1);
}

TEST_CASE("g_gap") {
  CHECK(close(g_gap(kSpec, kNoise), 0.8, 1e-15));
  double prev = 0;
  for (double m : {5.0, 50.0, 500.0}) {
    const auto spec = build_spectrum<double>(100, 10, m, {0.5, 1.0}, 0.2, 4);
    const double g = g_gap(spec, isotropic_noise<double>(100, 1.0));
    CHECK(g > prev);
    CHECK(g < 1.0);
    prev = g;
  }
  const SpectrumD flat(Eigen::Vector2d(1.0 + 1e-9, 1.0), 1);
  CHECK(close(g_gap(flat, kNoise), 0.5, 1e-8));
  const NoiseProfileD degenerate(Eigen::Vector2d(0, 1));
  CHECK_THROWS_AS(g_gap(kSpec, degenerate), UnsupportedNoiseError);
}

TEST_CASE("theta_star on the fixture") {
  const auto rt = theta_star(kStats, kSpec, kNoise);
  CHECK(rt.a_aux == 1.0);
  CHECK(rt.h_aux == 4.0);
  CHECK(rt.m_aux == 15.0);
  CHECK(close(rt.r0, 18.21954445729288731, 1e-14));
  CHECK(close(rt.theta_star, 0.94796963048619248733, 1e-14));
  CHECK(std::abs(rt.residual(rt.r0)) <= 1e-9 * 18.0);
  CHECK(rt.g_gap < rt.theta_star);
  CHECK(classify_regime(0.5, rt) == Regime::low);
  CHECK(classify_regime(0.9, rt) == Regime::stable);
  CHECK(classify_regime(0.99, rt) == Regime::high);
}

TEST_CASE("theta_star approaches 1 as the dominant block grows") {
  double prev = 0;
  for (double scale : {1.0, 4.0, 16.0, 64.0}) {
    Eigen::VectorXd lam(6);
    lam << 2 * scale, 2 * scale, 1, 0.9, 0.8, 0.7;
    const SpectrumD spec(lam, 2);
    const auto noise = isotropic_noise<double>(6, 1.0);
    const StateD x(Eigen::VectorXd::Ones(6));
    const double ts = theta_star(block_stats(x, spec, noise), spec, noise).theta_star;
    CHECK(ts > prev);
    prev = ts;
  }
  CHECK(prev > 0.99);
}

TEST_CASE("theta_star_rate_fit") {
  std::vector<std::pair<double, double>> exact;
  for (double m : {5.0, 10.0, 20.0, 50.0, 100.0}) exact.emplace_back(m, 1.0 - 3.0 / (m * m));
  const auto f = theta_star_rate_fit(exact);
  CHECK(close(f.slope, -2.0, 1e-9));
  CHECK(close(f.intercept, std::log(3.0), 1e-9));
  CHECK(f.conforming);

  std::vector<std::pair<double, double>> flat{{5, 0.9}, {10, 0.9}, {20, 0.9}, {50, 0.9}};
  const auto g = theta_star_rate_fit(flat);
  CHECK(std::abs(g.slope) < 1e-12);
  CHECK_FALSE(g.conforming);
  flat.pop_back();
  CHECK_THROWS_AS(theta_star_rate_fit(flat), InsufficientDataError);
}

TEST_CASE("eta* bounds on the fixture") {
  CHECK(close(eta_star_lower_bound(kStats, kSpec, kNoise, kState.norm2()), 2.0 / 5.5, 1e-15));
  CHECK(upper_bound_gate(kStats) == 0.2);
  const auto ub = eta_star_upper_bound(kStats, kSpec);
  REQUIRE(ub);
  CHECK(close(*ub, 2.0 / 3.0, 1e-15));
  CHECK(eta_star_within_gd_limit(drift_quadratic(kStats), kSpec).value());
  CHECK_THROWS_AS(eta_star_lower_bound(block_stats(StateD(Eigen::Vector2d(0, 1)), kSpec, kNoise),
                                       kSpec, kNoise, 1.0),
                  DegenerateStateError);
}

TEST_CASE("loss thresholds and projected loss change") {
  CHECK(close(loss_threshold(kStats, Block::dominant), 0.8, 1e-15));
  CHECK(close(loss_threshold(kStats, Block::bulk), 1.0, 1e-15));
  CHECK(std::abs(expected_projected_loss_change(kStats, 0.8, Block::dominant)) < 1e-15);
  CHECK(close(expected_projected_loss_change(kStats, 0.8, Block::bulk), -0.16, 1e-14));
  CHECK(close(expected_projected_loss_change(kStats, 0.9, Block::dominant), 0.45, 1e-14));
  CHECK(close(expected_projected_loss_change(kStats, 0.9, Block::bulk), -0.09, 1e-14));

  const SpectrumD one(Eigen::Vector2d(3, 1), 1);
  const NoiseProfileD silent(Eigen::Vector2d::Zero());
  const auto st = block_stats(StateD(Eigen::Vector2d(1, 1)), one, silent);
  CHECK(close(loss_threshold(st, Block::dominant), 2.0 / 3.0, 1e-15));
  const auto bulk_only = block_stats(StateD(Eigen::Vector2d(0, 1)), kSpec, kNoise);
  CHECK(loss_threshold(bulk_only, Block::dominant) == 0.0);
  CHECK_THROWS_AS(loss_threshold(block_stats(StateD(Eigen::Vector2d(0, 1)), kSpec, silent),
                                 Block::dominant),
                  DegenerateStateError);
}

TEST_CASE("crossover on the fixture") {
  const auto h = crossover(kStats);
  CHECK(h.alpha == 5.0);
  CHECK(h.beta == -2.0);
  CHECK(h.gamma == -2.0);
  CHECK(close(h.theta_crit, 0.86332495807107996982, 1e-14));
  CHECK(close(h.one_minus_theta_crit, 1 - 0.86332495807107996982, 1e-14));
  CHECK(std::abs(h(h.theta_crit)) <= 1e-9 * 5.0);
  CHECK(h(0.0) < 0);
  CHECK(close(h(1.0), kStats.nLossB, 1e-15));
  CHECK(kStats.theta < h.theta_crit);
  CHECK(loss_threshold(kStats, Block::dominant) < loss_threshold(kStats, Block::bulk));
  const auto rb = crossover_rate_bounds(kStats, kSpec);
  CHECK(close(rb.lower, 0.125, 1e-15));
  CHECK(close(rb.upper, 0.2, 1e-15));
  CHECK(rb.lower <= 1 - h.theta_crit);
  CHECK(1 - h.theta_crit <= rb.upper);
  CHECK_THROWS_AS(crossover(block_stats(StateD(Eigen::Vector2d(1, 0)), kSpec, kNoise)),
                  DegenerateStateError);
}

TEST_CASE("csgd plan on the fixture") {
  const auto plan = csgd_plan(kSpec, kNoise, kState, 0.1);
  CHECK(close(plan.beta_coeffs[0], 1.0 / 36.0, 1e-15));
  CHECK(close(plan.beta_coeffs[1], 1.0 / 19.0, 1e-15));
  CHECK(close(plan.varrho_D, 35.0 / 36.0, 1e-15));
  REQUIRE(plan.delta);
  CHECK(close(*plan.delta, 0.23529411764705882, 1e-14));
  CHECK(plan.step_size_ok);
  CHECK(plan.dominant_above_beta);
  CHECK(plan.energy_above_delta);
  REQUIRE(plan.t_star);
  CHECK(*plan.t_star == 3);
  REQUIRE(plan.theta_inf);
  CHECK(close(*plan.theta_inf, 0.67857142857142857, 1e-14));

  CHECK_THROWS_AS(csgd_plan(kSpec, kNoise, kState, 1.0), StepSizeError);
  CHECK_THROWS_AS(csgd_plan(kSpec, kNoise, kState, 0.0), StepSizeError);

  const auto low = csgd_plan(kSpec, kNoise, StateD(Eigen::Vector2d(0.2, 1)), 0.1);
  CHECK_FALSE(low.energy_above_delta);
  CHECK_FALSE(low.t_star);
}

TEST_CASE("theta_inf in the small-step limit and along a gap sweep") {
  const auto spec = build_spectrum<double>(40, 4, 10.0, {0.5, 1.0}, 0.2, 9);
  const auto noise = isotropic_noise<double>(40, 1.0);
  const StateD x(Eigen::VectorXd::Ones(40));
  const auto plan = csgd_plan(spec, noise, x, 1e-7);
  const auto lam = spec.lambdas();
  CHECK(close(*plan.theta_inf, lam.head(4).sum() / lam.sum(), 1e-6));

  double prev = 0;
  for (double m : {5.0, 10.0, 20.0, 50.0, 100.0}) {
    const auto s = build_spectrum<double>(40, 4, m, {0.5, 1.0}, 0.2, 9);
    const double ti = *csgd_plan(s, noise, x, 0.003).theta_inf;
    CHECK(ti > prev);
    CHECK(ti < 1.0);
    prev = ti;
  }
}

TEST_CASE("per-mode second moments") {
  CHECK(close(expected_second_moment(1.0, 2.0, 1.0, 0.1, 1), 0.65, 1e-15));
  CHECK(expected_second_moment(1.3, 2.0, 1.0, 0.1, 0) == doctest::Approx(1.69));
  CHECK(close(expected_second_moment(1.0, 2.0, 1.0, 0.1, 5000), 1.0 / 36.0, 1e-15));
  double prev = 2.0;
  for (int t = 0; t < 50; ++t) {
    const double v = expected_second_moment(1.0, 2.0, 1.0, 0.1, t);
    CHECK(v < prev);
    prev = v;
  }
  CHECK(second_moment_variance(1.0, 2.0, 1.0, 0.1, 0) == 0.0);
  CHECK(close(second_moment_variance(0.0, 2.0, 1.0, 0.1, 5000), 0.0015432098765432, 1e-12));
  CHECK_THROWS_AS(expected_second_moment(1.0, 2.0, 1.0, 1.0, 1), StepSizeError);
  CHECK_THROWS_AS(second_moment_variance(1.0, 2.0, 1.0, -0.1, 1), StepSizeError);
}

TEST_CASE("expected next block energy") {
  CHECK(close(expected_next_block_energy(kStats, 0.1, Block::dominant), 2.6, 1e-15));
  CHECK(close(expected_next_block_energy(kStats, 0.1, Block::bulk), 0.82, 1e-15));
  CHECK(expected_next_block_energy(kStats, 0.0, Block::dominant) == kStats.sD);
  const double lhs = kStats.sB * expected_next_block_energy(kStats, 0.1, Block::dominant) -
                     kStats.sD * expected_next_block_energy(kStats, 0.1, Block::bulk);
  CHECK(close(lhs, -0.68, 1e-14));
}

TEST_CASE("theory properties on random triples") {
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const auto t = testing::random_triple(31, i);
    const auto st = block_stats(t.state, t.spec, t.noise);
    const auto dq = drift_quadratic(st);
    CHECK(dq.q < 0);

    const auto rt = theta_star(st, t.spec, t.noise);
    CHECK(rt.g_gap < rt.theta_star);
    const double terms = rt.a_aux * rt.r0 * rt.r0 +
                         std::abs(rt.a_aux - rt.m_aux - rt.h_aux) * rt.r0 + rt.h_aux;
    CHECK(std::abs(rt.residual(rt.r0)) <= 1e-12 * terms);

    if (dq.p > 0) CHECK(eta_star_lower_bound(st, t.spec, t.noise, t.state.norm2()) <= *dq.eta_star);

    const auto h = crossover(st);
    CHECK(h.alpha > 0);
    CHECK(h.theta_crit > 0);
    CHECK(h.theta_crit < 1);
    const double dl = loss_threshold(st, Block::dominant) - loss_threshold(st, Block::bulk);
    const int s1 = dl < 0 ? -1 : (dl > 0 ? 1 : 0);
    const double dt = st.theta - h.theta_crit;
    const int s2 = dt < 0 ? -1 : (dt > 0 ? 1 : 0);
    CHECK(s1 == s2);
    // 1 - theta_crit = nB / (alpha theta_crit + nB + nD), the identity behind
    // the rate bounds.
    CHECK(close(1 - h.theta_crit, st.nLossB / (h.alpha * h.theta_crit + st.nLossB + st.nLossD),
                1e-9));
    CHECK(1 - h.theta_crit <= crossover_rate_bounds(st, t.spec).upper * (1 + 1e-12));

    for (double eta : {0.01, 0.1, 1.0}) {
      const double lhs = st.sB * expected_next_block_energy(st, eta, Block::dominant) -
                         st.sD * expected_next_block_energy(st, eta, Block::bulk);
      const double rhs = expected_drift(dq, eta);
      const double scale =
          st.sB * (st.sD + 2 * eta * st.tauD + eta * eta * (st.uD + st.eD)) +
          st.sD * (st.sB + 2 * eta * st.tauB + eta * eta * (st.uB + st.eB));
      CHECK(std::abs(lhs - rhs) <= 1e-12 * scale);
    }
  }
}

TEST_CASE("regime consistency on states at prescribed alignment") {
  for (std::uint64_t i = 0; i < 300; ++i) {
    const auto t = testing::random_triple(41, i);
    const double gg = g_gap(t.spec, t.noise);
    for (double frac : {0.3, 0.9, 1.0}) {
      const auto x = rescale_dominant_to_alignment(t.state, t.spec, frac * gg);
      const auto st = block_stats(x, t.spec, t.noise);
      if (st.theta <= gg) CHECK(drift_quadratic(st).p > 0);
    }
    for (double target : {0.9, 0.99, 0.999, 0.99999}) {
      const auto x = rescale_bulk_to_alignment(t.state, t.spec, target);
      const auto st = block_stats(x, t.spec, t.noise);
      if (st.theta >= theta_star(st, t.spec, t.noise).theta_star) CHECK(drift_quadratic(st).p <= 0);
    }
  }
}
