#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "alignlab/spectrum.hpp"
#include "alignlab/state.hpp"

namespace alignlab {

/// Every closed-form quantity for one (spectrum, noise, state[, eta]).
/// A quantity that is undefined for the inputs is left empty and carries a
/// short reason in `notes`.
struct TheoryReport {
  std::int64_t d = 0, k = 0;
  double m = 0;
  double theta = 0;
  double loss = 0;
  double s = 0, sD = 0, sB = 0;
  double eD = 0, eB = 0, nLossD = 0, nLossB = 0;

  std::optional<double> p, q, eta_star;
  std::optional<double> g_gap, theta_star, r0;
  std::optional<std::string> regime;
  std::optional<double> eta_star_lower, eta_star_upper, upper_gate;
  std::optional<bool> eta_star_within_gd_limit;
  std::optional<double> eta_loss_D, eta_loss_B;
  std::optional<double> alpha, beta, gamma, theta_crit, one_minus_theta_crit;
  std::optional<double> crit_lower, crit_upper;

  // Step-size dependent; present only when eta was given.
  std::optional<double> eta;
  std::optional<double> drift;
  std::optional<double> next_sD, next_sB;
  std::optional<double> loss_change_D, loss_change_B;
  std::optional<double> varrho_D, delta, theta_inf;
  std::optional<std::int64_t> t_star;
  std::optional<bool> step_size_ok, dominant_above_beta, energy_above_delta;

  nlohmann::json notes = nlohmann::json::object();
};

TheoryReport make_report(const SpectrumD& spec, const NoiseProfileD& noise, const StateD& x,
                         std::optional<double> eta = std::nullopt);

/// Undefined quantities serialize as null.
nlohmann::json to_json(const TheoryReport& r);

}  // namespace alignlab
