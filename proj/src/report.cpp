#include "alignlab/report.hpp"

#include <cmath>

#include "alignlab/theory.hpp"

namespace alignlab {

namespace {

using nlohmann::json;

/// Runs fn; on a library error records the reason under `key` and leaves
/// the outputs untouched.
template <typename Fn>
void attempt(json& notes, const char* key, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    notes[key] = e.what();
  }
}

template <typename T>
json opt(const std::optional<T>& v) {
  if (!v) return nullptr;
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(*v)) return nullptr;
  }
  return *v;
}

}  // namespace

TheoryReport make_report(const SpectrumD& spec, const NoiseProfileD& noise, const StateD& x,
                         std::optional<double> eta) {
  const BlockStatsD st = block_stats(x, spec, noise);
  TheoryReport r;
  r.d = spec.dim();
  r.k = spec.k();
  r.m = spec.gap_ratio();
  r.theta = st.theta;
  r.loss = loss(x, spec);
  r.s = st.s;
  r.sD = st.sD;
  r.sB = st.sB;
  r.eD = st.eD;
  r.eB = st.eB;
  r.nLossD = st.nLossD;
  r.nLossB = st.nLossB;
  r.eta = eta;
  json& notes = r.notes;

  std::optional<DriftQuadratic<double>> dq;
  attempt(notes, "drift", [&] {
    dq = drift_quadratic(st);
    r.p = dq->p;
    r.q = dq->q;
    r.eta_star = dq->eta_star;
    r.eta_star_within_gd_limit = eta_star_within_gd_limit(*dq, spec);
  });
  attempt(notes, "g_gap", [&] { r.g_gap = g_gap(spec, noise); });
  if (st.s > 0) {
    attempt(notes, "theta_star", [&] {
      const auto rt = theta_star(st, spec, noise);
      r.theta_star = rt.theta_star;
      r.r0 = rt.r0;
      r.regime = regime_name(classify_regime(st.theta, rt));
    });
  } else {
    notes["theta_star"] = "undefined for the zero state";
  }
  if (dq && dq->p > 0) {
    attempt(notes, "eta_star_lower", [&] {
      r.eta_star_lower = eta_star_lower_bound(st, spec, noise, x.norm2());
    });
  } else {
    notes["eta_star_lower"] = "eta* undefined or p <= 0";
  }
  if (st.s > 0) {
    r.upper_gate = upper_bound_gate(st);
    r.eta_star_upper = eta_star_upper_bound(st, spec);
    if (!r.eta_star_upper) notes["eta_star_upper"] = "theta below e_B/(e_B+e_D)";
  }
  if (st.s > 0) {
    attempt(notes, "eta_loss_D", [&] { r.eta_loss_D = loss_threshold(st, Block::dominant); });
    attempt(notes, "eta_loss_B", [&] { r.eta_loss_B = loss_threshold(st, Block::bulk); });
  } else {
    notes["eta_loss"] = "undefined for the zero state";
  }
  attempt(notes, "crossover", [&] {
    const auto h = crossover(st);
    r.alpha = h.alpha;
    r.beta = h.beta;
    r.gamma = h.gamma;
    r.theta_crit = h.theta_crit;
    r.one_minus_theta_crit = h.one_minus_theta_crit;
    const auto b = crossover_rate_bounds(st, spec);
    r.crit_lower = b.lower;
    r.crit_upper = b.upper;
  });

  if (eta) {
    const double e = *eta;
    if (dq) r.drift = expected_drift(*dq, e);
    r.next_sD = expected_next_block_energy(st, e, Block::dominant);
    r.next_sB = expected_next_block_energy(st, e, Block::bulk);
    r.loss_change_D = expected_projected_loss_change(st, e, Block::dominant);
    r.loss_change_B = expected_projected_loss_change(st, e, Block::bulk);
    attempt(notes, "csgd", [&] {
      const auto plan = csgd_plan(spec, noise, x, e);
      r.varrho_D = plan.varrho_D;
      r.delta = plan.delta;
      r.t_star = plan.t_star;
      r.theta_inf = plan.theta_inf;
      r.step_size_ok = plan.step_size_ok;
      r.dominant_above_beta = plan.dominant_above_beta;
      r.energy_above_delta = plan.energy_above_delta;
    });
  }
  return r;
}

json to_json(const TheoryReport& r) {
  json j;
  j["d"] = r.d;
  j["k"] = r.k;
  j["m"] = r.m;
  j["theta"] = r.theta;
  j["loss"] = r.loss;
  j["s"] = r.s;
  j["sD"] = r.sD;
  j["sB"] = r.sB;
  j["eD"] = r.eD;
  j["eB"] = r.eB;
  j["nLossD"] = r.nLossD;
  j["nLossB"] = r.nLossB;
  j["p"] = opt(r.p);
  j["q"] = opt(r.q);
  j["eta_star"] = opt(r.eta_star);
  j["g_gap"] = opt(r.g_gap);
  j["theta_star"] = opt(r.theta_star);
  j["r0"] = opt(r.r0);
  j["regime"] = opt(r.regime);
  j["bounds"] = {{"eta_star_lower", opt(r.eta_star_lower)},
                 {"eta_star_upper", opt(r.eta_star_upper)},
                 {"upper_gate", opt(r.upper_gate)},
                 {"eta_star_within_gd_limit", opt(r.eta_star_within_gd_limit)},
                 {"one_minus_theta_crit_lower", opt(r.crit_lower)},
                 {"one_minus_theta_crit_upper", opt(r.crit_upper)}};
  j["eta_loss_D"] = opt(r.eta_loss_D);
  j["eta_loss_B"] = opt(r.eta_loss_B);
  j["crossover"] = {{"alpha", opt(r.alpha)}, {"beta", opt(r.beta)}, {"gamma", opt(r.gamma)}};
  j["theta_crit"] = opt(r.theta_crit);
  j["one_minus_theta_crit"] = opt(r.one_minus_theta_crit);
  j["eta"] = opt(r.eta);
  if (r.eta) {
    j["expected_drift"] = opt(r.drift);
    j["expected_next_sD"] = opt(r.next_sD);
    j["expected_next_sB"] = opt(r.next_sB);
    j["expected_loss_change_D"] = opt(r.loss_change_D);
    j["expected_loss_change_B"] = opt(r.loss_change_B);
    j["csgd"] = {{"varrho_D", opt(r.varrho_D)},
                 {"delta", opt(r.delta)},
                 {"t_star", opt(r.t_star)},
                 {"theta_inf", opt(r.theta_inf)},
                 {"step_size_ok", opt(r.step_size_ok)},
                 {"dominant_above_beta", opt(r.dominant_above_beta)},
                 {"energy_above_delta", opt(r.energy_above_delta)}};
  }
  j["notes"] = r.notes;
  return j;
}

}  // namespace alignlab
