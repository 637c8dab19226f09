#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "alignlab/montecarlo.hpp"
#include "alignlab/theory.hpp"
#include "support/random_triples.hpp"

using namespace alignlab;

namespace {
const SpectrumD kSpec(Eigen::Vector2d(2, 1), 1);
const NoiseProfileD kNoise = isotropic_noise<double>(2, 1.0);
const StateD kState(Eigen::Vector2d(1, 1));

// Gauss-Hermite quadrature, tests/oracle/conditional_alignment_oracle.py.
constexpr double kConditionalAlignment = 0.7537200014006202;

struct ThreadsGuard {
  explicit ThreadsGuard(const char* v) { setenv("ALIGNLAB_THREADS", v, 1); }
  ~ThreadsGuard() { unsetenv("ALIGNLAB_THREADS"); }
};
}  // namespace

TEST_CASE("accumulator merge matches a single pass") {
  McAccumulator all, a, b;
  NormalStream rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double x = 5 + rng();
    all.add(x);
    (i < 300 ? a : b).add(x);
  }
  a.merge(b);
  CHECK(a.count() == all.count());
  CHECK(a.mean() == doctest::Approx(all.mean()).epsilon(1e-13));
  CHECK(a.variance() == doctest::Approx(all.variance()).epsilon(1e-12));
  McAccumulator empty;
  empty.merge(a);
  CHECK(empty.mean() == a.mean());
}

TEST_CASE("noiseless one-step estimates are exact") {
  const NoiseProfileD silent(Eigen::Vector2d::Zero());
  const auto e = estimate_conditional_alignment(kSpec, silent, kState, 0.1, 1000, 1);
  CHECK(e.std_error == 0.0);
  const double next = alignment(sgd_step(kState, kSpec, Eigen::Vector2d::Zero(), 0.1), kSpec);
  CHECK(e.mean == doctest::Approx(next).epsilon(1e-14));
  const auto f = estimate_f_drift(kSpec, silent, kState, 0.01, 1000, 1);
  CHECK(f.std_error == 0.0);
  CHECK(f.mean < 0);
  CHECK_THROWS_AS(estimate_f_drift(kSpec, kNoise, kState, 0.1, 10, 1), ParameterError);
  CHECK_THROWS_AS(estimate_conditional_alignment(kSpec, kNoise, kState, 0.1, 10, 1),
                  ParameterError);
}

TEST_CASE("one-step estimates on the fixture") {
  const auto th = estimate_conditional_alignment(kSpec, kNoise, kState, 0.1, 100000, 7);
  CHECK(std::abs(th.mean - kConditionalAlignment) <= 4 * th.std_error);

  const auto f = estimate_f_drift(kSpec, kNoise, kState, 0.1, 100000, 8);
  CHECK(std::abs(f.mean + 0.68) <= 4 * f.std_error);
  const auto f0 = estimate_f_drift(kSpec, kNoise, kState, 2.0 / 3.0, 100000, 9);
  CHECK(std::abs(f0.mean) <= 4 * f0.std_error);

  const double etas[] = {0.1};
  const auto mc = sample_one_step(kSpec, kNoise, kState, etas, 100000, 10);
  const auto sd = mc[0].sD.estimate(), sb = mc[0].sB.estimate();
  CHECK(std::abs(sd.mean - 2.6) <= 5 * sd.std_error);
  CHECK(std::abs(sb.mean - 0.82) <= 5 * sb.std_error);
}

TEST_CASE("standard error shrinks like 1/sqrt(n)") {
  const auto a = estimate_f_drift(kSpec, kNoise, kState, 0.3, 20000, 3);
  const auto b = estimate_f_drift(kSpec, kNoise, kState, 0.3, 80000, 4);
  const auto c = estimate_f_drift(kSpec, kNoise, kState, 0.3, 40000, 5);
  CHECK(b.std_error / a.std_error == doctest::Approx(0.5).epsilon(0.2));
  CHECK(c.std_error / a.std_error == doctest::Approx(1 / std::sqrt(2.0)).epsilon(0.2));
}

TEST_CASE("estimates do not depend on the worker count") {
  const auto t = testing::random_triple(61, 2);
  const double etas[] = {0.001, 0.01};
  std::vector<OneStepMoments> one, three;
  {
    ThreadsGuard g("1");
    one = sample_one_step(t.spec, t.noise, t.state, etas, 50000, 11);
  }
  {
    ThreadsGuard g("3");
    three = sample_one_step(t.spec, t.noise, t.state, etas, 50000, 11);
  }
  for (std::size_t h = 0; h < 2; ++h) {
    CHECK(one[h].f.mean() == three[h].f.mean());
    CHECK(one[h].f.variance() == three[h].f.variance());
    CHECK(one[h].theta.mean() == three[h].theta.mean());
  }
}

TEST_CASE("verdict classification") {
  CHECK(classify(-1.0, 0.1, -1, 3.0) == Verdict::confirmed);
  CHECK(classify(1.0, 0.1, -1, 3.0) == Verdict::contradicted);
  CHECK(classify(0.2, 0.1, -1, 3.0) == Verdict::inconclusive);
  CHECK(classify(0.2, 0.01, -1, 3.0, 0.5) == Verdict::inconclusive);
  CHECK(classify(1.0, 0.1, 0, 3.0) == Verdict::contradicted);
}

TEST_CASE("drift sign tests") {
  const auto r = drift_sign_test(kSpec, kNoise, kState, 0.1, 100000, 3.0, 12);
  CHECK(r.f_drift.predicted_sign == -1);
  CHECK(r.f_drift.verdict == Verdict::confirmed);
  CHECK(r.theta_drift.asymptotic);
  CHECK(r.f_drift.target.value() == doctest::Approx(-0.68));

  const auto x = rescale_dominant_to_alignment(kState, kSpec, 0.5);
  const auto dq = drift_quadratic(block_stats(x, kSpec, kNoise));
  REQUIRE(dq.p > 0);
  const auto up = drift_sign_test(kSpec, kNoise, x, 2 * *dq.eta_star, 100000, 3.0, 13);
  CHECK(up.f_drift.predicted_sign == 1);
  CHECK(up.f_drift.verdict == Verdict::confirmed);

  const auto high = rescale_bulk_to_alignment(kState, kSpec, 0.99);
  const auto st = block_stats(high, kSpec, kNoise);
  REQUIRE(st.theta > theta_star(st, kSpec, kNoise).theta_star);
  for (double eta : {0.05, 0.2, 0.5, 0.9}) {
    const auto v = drift_sign_test(kSpec, kNoise, high, eta, 20000, 3.0, 14);
    CHECK(v.f_drift.predicted_sign == -1);
    CHECK(v.f_drift.verdict != Verdict::contradicted);
  }

  const auto again = drift_sign_test(kSpec, kNoise, kState, 0.1, 100000, 3.0, 12);
  CHECK(again.f_drift.estimate.mean == r.f_drift.estimate.mean);
  CHECK_THROWS_AS(drift_sign_test(kSpec, kNoise, kState, 0.1, 999, 3.0, 1), ParameterError);
}

TEST_CASE("projected loss tests") {
  const auto edge = projected_loss_test(kSpec, kNoise, kState, 0.8, Block::dominant, 100000, 3.0, 15);
  CHECK(edge.predicted_sign == 0);
  CHECK(edge.verdict == Verdict::inconclusive);
  CHECK(edge.target_ok.value());

  const auto d = projected_loss_test(kSpec, kNoise, kState, 0.9, Block::dominant, 100000, 3.0, 16);
  CHECK(d.predicted_sign == 1);
  CHECK(d.verdict == Verdict::confirmed);
  CHECK(d.target.value() == doctest::Approx(0.45));
  CHECK(d.target_ok.value());
  const auto b = projected_loss_test(kSpec, kNoise, kState, 0.9, Block::bulk, 100000, 3.0, 17);
  CHECK(b.predicted_sign == -1);
  CHECK(b.verdict == Verdict::confirmed);
  CHECK(b.target_ok.value());

  const auto small = projected_loss_test(kSpec, kNoise, kState, 1e-3, Block::dominant, 10000, 3.0, 18);
  CHECK(small.predicted_sign == -1);
}

TEST_CASE("per-mode second moments") {
  const auto spec = build_spectrum<double>(6, 2, 4.0, {0.5, 1.0}, 0.3, 3);
  const NoiseProfileD noise(Eigen::VectorXd::LinSpaced(6, 0.5, 2.0));
  const auto x0 = random_init<double>(6, 2.0, 5);
  const double eta = 0.5 / spec.lambda_max();
  const std::int64_t times[] = {1, 10, 100};
  const auto est = estimate_mode_second_moments(spec, noise, x0, eta, times, 20000, 19);
  for (std::size_t h = 0; h < 3; ++h)
    for (Eigen::Index i = 0; i < 6; ++i) {
      const double target =
          expected_second_moment(x0.c[i], spec.lambdas()[i], noise.kappa2()[i], eta, times[h]);
      CHECK(std::abs(est[h][i].mean - target) <= 5 * est[h][i].std_error);
      const double sd = std::sqrt(
          second_moment_variance(x0.c[i], spec.lambdas()[i], noise.kappa2()[i], eta, times[h]));
      CHECK(est[h][i].std_error == doctest::Approx(sd / std::sqrt(20000.0)).epsilon(0.1));
    }
}

TEST_CASE("trajectory statistics") {
  TrajectoryRecord flat;
  for (int t = 0; t <= 100; t += 10) {
    flat.times.push_back(t);
    flat.thetas.push_back(0.4);
    flat.losses.push_back(1.0);
  }
  const auto w = late_phase_statistic(flat, 50);
  CHECK(w.mean == doctest::Approx(0.4));
  CHECK(w.std == 0.0);
  CHECK(w.count == 6);
  CHECK_THROWS_AS(late_phase_statistic(flat, 101), ParameterError);

  TrajectoryRecord decay;
  for (int t = 0; t <= 64; ++t) {
    decay.times.push_back(t);
    decay.thetas.push_back(t == 0 ? 1.0 : std::pow(double(t), -0.5));
    decay.losses.push_back(1.0);
  }
  const auto fit = phase1_decay_fit(decay, 64);
  CHECK(fit.slope == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(fit.r2 == doctest::Approx(1.0));
  CHECK_THROWS_AS(phase1_decay_fit(decay, 3), InsufficientDataError);

  TrajectoryRecord dip;
  for (int t = 0; t < 100; ++t) {
    dip.times.push_back(t);
    dip.thetas.push_back(std::abs(t - 30) / 100.0 + 0.1);
    dip.losses.push_back(1.0);
  }
  CHECK(late_phase_start(dip, 5) == 30);
}
