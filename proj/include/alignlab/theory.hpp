#pragma once

// Closed-form thresholds and predictions for SGD on a quadratic loss with a
// dominant/bulk split Hessian spectrum. Everything here is a pure function of
// (spectrum, noise, state) and is exact at finite dimension unless a comment
// says otherwise.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "alignlab/errors.hpp"
#include "alignlab/spectrum.hpp"
#include "alignlab/state.hpp"
#include "alignlab/stats.hpp"

namespace alignlab {

/// E[f_t(eta) | x_t] = p eta^2 + q eta, where
/// f_t(eta) = s^B_t s^D_{t+1} - s^B_{t+1} s^D_t. A positive value means the
/// expected alignment moves up.
template <typename Scalar = double>
struct DriftQuadratic {
  Scalar p = 0;
  Scalar q = 0;
  /// -q/p, the adaptive critical step size; absent when p == 0.
  std::optional<Scalar> eta_star;

  Scalar operator()(Scalar eta) const { return p * eta * eta + q * eta; }
};

template <typename Scalar>
DriftQuadratic<Scalar> drift_quadratic(const BlockStats<Scalar>& st) {
  if (!(st.s > Scalar(0))) throw DegenerateStateError("drift quadratic undefined for the zero state");
  DriftQuadratic<Scalar> dq;
  dq.q = Scalar(2) * (st.sD * st.tauB - st.sB * st.tauD);
  dq.p = st.sB * (st.uD + st.eD) - st.sD * (st.uB + st.eB);
  if (dq.p != Scalar(0)) dq.eta_star = -dq.q / dq.p;
  return dq;
}

template <typename Scalar>
Scalar expected_drift(const DriftQuadratic<Scalar>& dq, Scalar eta) {
  return dq(eta);
}

/// Sign of the exact expected drift at `eta`: -1, 0 or +1. The root eta* is
/// reported as 0 when eta is within `rel_tol` of it.
template <typename Scalar>
int drift_sign(const DriftQuadratic<Scalar>& dq, Scalar eta, Scalar rel_tol = Scalar(1e-12)) {
  if (dq.p <= Scalar(0)) {
    const Scalar v = dq(eta);
    return v < Scalar(0) ? -1 : (v > Scalar(0) ? 1 : 0);
  }
  const Scalar es = *dq.eta_star;
  if (std::abs(eta - es) <= rel_tol * std::abs(es)) return 0;
  return eta < es ? -1 : 1;
}

/// Step-size-independent alignment level below which p > 0 is guaranteed.
template <typename Scalar>
Scalar g_gap(const Spectrum<Scalar>& spec, const NoiseProfile<Scalar>& noise) {
  noise.check_dim(spec);
  if (!(noise.s_min() > Scalar(0)))
    throw UnsupportedNoiseError("g_gap requires s_min > 0");
  const Scalar ratio = spec.lambda_k1() / spec.lambda_k();
  return Scalar(1) /
         (Scalar(1) + noise.s_max() / noise.s_min() / spec.block_ratio() * ratio * ratio);
}

template <typename Scalar = double>
struct RegimeThresholds {
  Scalar g_gap = 0;
  Scalar theta_star = 0;
  Scalar a_aux = 0;  // s_min psi_B
  Scalar h_aux = 0;  // s_max psi_D
  Scalar m_aux = 0;  // s_t (lambda_1^2 - lambda_d^2)
  Scalar r0 = 0;
  Scalar rho = 0;

  /// a r^2 + (a - m - h) r - h evaluated at r.
  Scalar residual(Scalar r) const {
    return a_aux * r * r + (a_aux - m_aux - h_aux) * r - h_aux;
  }
};

/// theta* = r0 / (1 + r0): alignment above which p <= 0, so the expected
/// alignment drift is negative for every step size.
template <typename Scalar>
RegimeThresholds<Scalar> theta_star(const BlockStats<Scalar>& st, const Spectrum<Scalar>& spec,
                                    const NoiseProfile<Scalar>& noise) {
  RegimeThresholds<Scalar> rt;
  rt.a_aux = noise.s_min() * spec.psi_bulk();
  if (!(rt.a_aux > Scalar(0))) throw UnsupportedNoiseError("theta* requires s_min psi_B > 0");
  rt.h_aux = noise.s_max() * spec.psi_dominant();
  rt.m_aux = st.s * spec.spread2();
  rt.r0 = positive_root(rt.a_aux, rt.a_aux - rt.m_aux - rt.h_aux, -rt.h_aux);
  rt.theta_star = rt.r0 / (Scalar(1) + rt.r0);
  rt.g_gap = g_gap(spec, noise);
  rt.rho = spec.block_ratio();
  return rt;
}

enum class Regime { low, stable, high };

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::low: return "low";
    case Regime::high: return "high";
    default: return "stable";
  }
}

template <typename Scalar>
Regime classify_regime(Scalar theta, const RegimeThresholds<Scalar>& rt) {
  if (theta <= rt.g_gap) return Regime::low;
  if (theta >= rt.theta_star) return Regime::high;
  return Regime::stable;
}

struct RateFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
  /// Slope within [-2.5, -1.5], the band around the inverse-square law.
  bool conforming = false;
};

/// Least-squares fit of log(1 - theta*) against log m.
inline RateFit theta_star_rate_fit(std::span<const std::pair<double, double>> sweep) {
  if (sweep.size() < 4) throw InsufficientDataError("rate fit needs at least 4 sweep points");
  std::vector<double> xs, ys;
  for (const auto& [m, ts] : sweep) {
    if (!(m > 0) || !(ts < 1)) throw ParameterError("rate fit needs m > 0 and theta* < 1");
    xs.push_back(std::log(m));
    ys.push_back(std::log1p(-ts));
  }
  const LineFit f = fit_line(xs, ys);
  return {f.slope, f.intercept, f.r2, f.slope >= -2.5 && f.slope <= -1.5};
}

/// Lower bound on eta* in terms of ||x_t||^2 and theta_t. Valid when p > 0.
template <typename Scalar>
Scalar eta_star_lower_bound(const BlockStats<Scalar>& st, const Spectrum<Scalar>& spec,
                            const NoiseProfile<Scalar>& noise, Scalar x_norm2) {
  if (!(st.theta > Scalar(0))) throw DegenerateStateError("eta* lower bound undefined at theta = 0");
  if (!(x_norm2 > Scalar(0))) throw DegenerateStateError("eta* lower bound needs ||x||^2 > 0");
  const Scalar lmin = spec.lambda_min();
  return Scalar(2) * spec.gap1() /
         (spec.spread2() +
          noise.s_max() * spec.psi_dominant() / (lmin * lmin * x_norm2 * st.theta));
}

/// Alignment gate e_B / (e_B + e_D) of the upper bound (0 when noiseless).
template <typename Scalar>
Scalar upper_bound_gate(const BlockStats<Scalar>& st) {
  const Scalar tot = st.eB + st.eD;
  return tot > Scalar(0) ? st.eB / tot : Scalar(0);
}

/// 2(lambda_1 - lambda_d) / (lambda_k lambda_1 - lambda_{k+1} lambda_d) when
/// theta >= e_B/(e_B+e_D), absent otherwise. This is the factor-2 form that
/// is consistent with q's factor 2.
template <typename Scalar>
std::optional<Scalar> eta_star_upper_bound(const BlockStats<Scalar>& st,
                                           const Spectrum<Scalar>& spec) {
  if (st.theta < upper_bound_gate(st)) return std::nullopt;
  const Scalar l1 = spec.lambda_max(), ld = spec.lambda_min();
  return Scalar(2) * (l1 - ld) / (spec.lambda_k() * l1 - spec.lambda_k1() * ld);
}

/// eta* <= 2 / lambda_1. Reported, never enforced: the inequality is not
/// implied for every spectrum.
template <typename Scalar>
std::optional<bool> eta_star_within_gd_limit(const DriftQuadratic<Scalar>& dq,
                                             const Spectrum<Scalar>& spec) {
  if (!dq.eta_star || *dq.eta_star <= Scalar(0)) return std::nullopt;
  return *dq.eta_star <= Scalar(2) / spec.lambda_max();
}

/// Largest step for which the block-projected update decreases the expected
/// loss: 2 s^S / (tau^S + n^loss_S).
template <typename Scalar>
Scalar loss_threshold(const BlockStats<Scalar>& st, Block b) {
  const Scalar den = st.tau(b) + st.loss_noise(b);
  if (!(den > Scalar(0)))
    throw DegenerateStateError(std::string("loss threshold undefined: block ") + block_name(b) +
                               " has neither signal nor noise");
  return Scalar(2) * st.signal(b) / den;
}

/// Exact E[L(x_{t+1}) - L(x_t) | x_t] under the block-S projected update.
template <typename Scalar>
Scalar expected_projected_loss_change(const BlockStats<Scalar>& st, Scalar eta, Block b) {
  return -eta * st.signal(b) + Scalar(0.5) * eta * eta * (st.tau(b) + st.loss_noise(b));
}

/// h(theta) = alpha theta^2 + beta theta + gamma whose root in (0,1)
/// separates eta^loss_D < eta^loss_B (below) from the reverse order (above).
template <typename Scalar = double>
struct CrossoverQuadratic {
  Scalar alpha = 0;
  Scalar beta = 0;
  Scalar gamma = 0;
  Scalar theta_crit = 0;
  /// 1 - theta_crit from n_B / (alpha theta_crit + n_B + n_D), accurate when
  /// theta_crit is close to 1.
  Scalar one_minus_theta_crit = 0;

  Scalar operator()(Scalar theta) const { return (alpha * theta + beta) * theta + gamma; }
};

template <typename Scalar>
CrossoverQuadratic<Scalar> crossover(const BlockStats<Scalar>& st) {
  if (!(st.sD > Scalar(0)) || !(st.sB > Scalar(0)))
    throw DegenerateStateError("crossover needs both blocks to carry gradient energy");
  CrossoverQuadratic<Scalar> h;
  h.alpha = st.s * (st.tauD / st.sD - st.tauB / st.sB);
  h.beta = -h.alpha + st.nLossB + st.nLossD;
  h.gamma = -st.nLossD;
  h.theta_crit = positive_root(h.alpha, h.beta, h.gamma);
  h.one_minus_theta_crit = st.nLossB / (h.alpha * h.theta_crit + st.nLossB + st.nLossD);
  return h;
}

/// Two-sided bound on 1 - theta_crit in terms of the gap ratio m.
template <typename Scalar = double>
struct CrossoverRateBounds {
  Scalar lower = 0;
  Scalar upper = 0;
};

template <typename Scalar>
CrossoverRateBounds<Scalar> crossover_rate_bounds(const BlockStats<Scalar>& st,
                                                  const Spectrum<Scalar>& spec) {
  const Scalar base = st.s * spec.lambda_k1() * (spec.gap_ratio() - Scalar(1));
  if (!(base > Scalar(0))) throw DegenerateStateError("crossover rate bounds need s_t > 0");
  return {st.nLossB / (base + st.nLossB + st.nLossD), st.nLossB / base};
}

/// Plan for constant-step SGD from a given initialization: stationary
/// per-mode moments, the initial-decrease length t* and the late-time limit.
template <typename Scalar = double>
struct CsgdPlan {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Scalar eta = 0;
  Vector beta_coeffs;
  Scalar varrho_D = 0;
  /// Absent when 2 gap1/eta <= lambda_1^2 - lambda_d^2.
  std::optional<Scalar> delta;
  std::optional<std::int64_t> t_star;
  /// Absent for a noiseless profile.
  std::optional<Scalar> theta_inf;

  bool step_size_ok = false;         // eta < min{2/lambda_1, 2 gap1/(lambda_1^2 - lambda_d^2)}
  bool dominant_above_beta = false;  // c_{i,0}^2 > beta_i for every i in D
  bool energy_above_delta = false;   // varrho_D > delta - sum_D beta_i

  bool assumptions_ok() const { return step_size_ok && dominant_above_beta && energy_above_delta; }
};

template <typename Scalar>
CsgdPlan<Scalar> csgd_plan(const Spectrum<Scalar>& spec, const NoiseProfile<Scalar>& noise,
                           const State<Scalar>& init, Scalar eta) {
  noise.check_dim(spec);
  detail::check_dims(init, spec);
  if (!(eta > Scalar(0))) throw StepSizeError("step size must be positive");
  if (!(eta < Scalar(2) / spec.lambda_max()))
    throw StepSizeError("step size too large: eta >= 2/lambda_1 makes some beta_i non-positive");

  const Eigen::Index k = spec.k();
  const auto lam = spec.lambdas().array();
  CsgdPlan<Scalar> plan;
  plan.eta = eta;
  plan.beta_coeffs = (eta * noise.kappa2().array() / (Scalar(2) * lam - eta * lam.square())).matrix();

  const auto c2 = init.c.array().square();
  const Scalar beta_D = plan.beta_coeffs.head(k).sum();
  plan.varrho_D = c2.head(k).sum() - beta_D;

  const Scalar l1 = spec.lambda_max(), ld = spec.lambda_min(), lk = spec.lambda_k();
  const Scalar slack = Scalar(2) * spec.gap1() / eta - spec.spread2();
  if (slack > Scalar(0))
    plan.delta = noise.s_max() * spec.psi_dominant() * l1 * l1 / (ld * ld * lk * lk * slack);

  plan.step_size_ok = slack > Scalar(0);
  plan.dominant_above_beta = (c2.head(k) > plan.beta_coeffs.array().head(k)).all();
  const std::optional<Scalar> threshold =
      plan.delta ? std::optional<Scalar>(*plan.delta - beta_D) : std::nullopt;
  plan.energy_above_delta = threshold && plan.varrho_D > *threshold;

  if (plan.assumptions_ok() && *threshold > Scalar(0)) {
    const Scalar arg = plan.varrho_D / *threshold;
    const Scalar rate = Scalar(-2) * std::log(Scalar(1) - eta * l1);
    plan.t_star = arg <= Scalar(1) ? 0 : std::int64_t(std::floor(std::log(arg) / rate));
  }

  const auto weighted = lam.square() * plan.beta_coeffs.array();
  const Scalar total = weighted.sum();
  if (total > Scalar(0)) plan.theta_inf = weighted.head(k).sum() / total;
  return plan;
}

namespace detail {
template <typename Scalar>
void check_mode_step(Scalar lambda, Scalar eta) {
  if (!(eta > Scalar(0) && eta < Scalar(2) / lambda))
    throw StepSizeError("closed-form moments need 0 < eta < 2/lambda");
}
}  // namespace detail

/// E[c_t^2] = (1 - eta lambda)^{2t} (c0^2 - beta) + beta for one mode.
template <typename Scalar>
Scalar expected_second_moment(Scalar c0, Scalar lambda, Scalar kappa2, Scalar eta,
                              std::int64_t t) {
  detail::check_mode_step(lambda, eta);
  const Scalar beta = eta * kappa2 / (Scalar(2) * lambda - eta * lambda * lambda);
  const Scalar decay = std::pow(Scalar(1) - eta * lambda, Scalar(2 * t));
  return decay * (c0 * c0 - beta) + beta;
}

/// Var(c_t^2) = 2 sigma^4 + 4 mu^2 sigma^2 for c_t ~ N(mu, sigma^2) with
/// mu = (1 - eta lambda)^t c0 and sigma^2 = beta (1 - (1 - eta lambda)^{2t}).
template <typename Scalar>
Scalar second_moment_variance(Scalar c0, Scalar lambda, Scalar kappa2, Scalar eta,
                              std::int64_t t) {
  detail::check_mode_step(lambda, eta);
  const Scalar beta = eta * kappa2 / (Scalar(2) * lambda - eta * lambda * lambda);
  const Scalar r = Scalar(1) - eta * lambda;
  const Scalar mu = std::pow(r, Scalar(t)) * c0;
  const Scalar var = beta * (Scalar(1) - std::pow(r, Scalar(2 * t)));
  return Scalar(2) * var * var + Scalar(4) * mu * mu * var;
}

/// E[s^S_{t+1} | x_t] = s^S - 2 eta tau^S + eta^2 (u^S + e^S).
template <typename Scalar>
Scalar expected_next_block_energy(const BlockStats<Scalar>& st, Scalar eta, Block b) {
  return st.signal(b) - Scalar(2) * eta * st.tau(b) + eta * eta * (st.u(b) + st.noise_energy(b));
}

}  // namespace alignlab
