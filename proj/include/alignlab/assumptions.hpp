#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "alignlab/spectrum.hpp"
#include "alignlab/state.hpp"

namespace alignlab {

struct AssumptionCheck {
  std::string name;
  double value = 0;
  bool ok = true;
};

/// Finite-d diagnostics for the high-dimensional standing assumptions.
/// Report only: nothing here throws on a violated condition.
struct AssumptionReport {
  static constexpr std::array<int, 5> kMomentOrders{2, 3, 4, 6, 8};

  double rho = 0;
  std::array<double, 5> dominant_moments{};
  std::array<double, 5> bulk_moments{};
  std::vector<double> mean_square;  // (1/d) sum c_i^2, one per state
  double noise_trace = 0;
  std::vector<AssumptionCheck> checks;

  bool all_ok() const {
    for (const auto& c : checks)
      if (!c.ok) return false;
    return true;
  }
};

template <typename Scalar>
AssumptionReport check_asymptotic_assumptions(const Spectrum<Scalar>& spec,
                                              const NoiseProfile<Scalar>& noise,
                                              std::span<const State<Scalar>> states) {
  if (states.empty()) throw ParameterError("assumption check needs at least one state");
  noise.check_dim(spec);
  AssumptionReport r;
  auto finite_pos = [](double v) { return std::isfinite(v) && v > 0; };

  r.rho = double(spec.block_ratio());
  r.checks.push_back({"rho = k/(d-k) in (0,inf)", r.rho, finite_pos(r.rho)});

  const auto lam = spec.lambdas().template cast<double>().array();
  for (std::size_t j = 0; j < AssumptionReport::kMomentOrders.size(); ++j) {
    const int p = AssumptionReport::kMomentOrders[j];
    const auto pw = lam.pow(double(p));
    r.dominant_moments[j] = pw.head(spec.k()).mean();
    r.bulk_moments[j] = pw.tail(spec.bulk_size()).mean();
    r.checks.push_back({"dominant moment p=" + std::to_string(p) + " in (0,inf)",
                        r.dominant_moments[j], finite_pos(r.dominant_moments[j])});
    r.checks.push_back({"bulk moment p=" + std::to_string(p) + " in [0,inf)", r.bulk_moments[j],
                        std::isfinite(r.bulk_moments[j]) && r.bulk_moments[j] >= 0});
  }

  for (const auto& x : states) {
    if (x.dim() != spec.dim()) throw ParameterError("state and spectrum dimensions differ");
    const double ms = double(x.c.squaredNorm()) / double(x.dim());
    r.mean_square.push_back(ms);
    r.checks.push_back({"(1/d) sum c^2 at t=" + std::to_string(x.t) + " finite", ms,
                        std::isfinite(ms)});
  }

  r.noise_trace = double(noise.trace());
  r.checks.push_back({"Tr(Sigma) in (0,+inf)", r.noise_trace, finite_pos(r.noise_trace)});
  return r;
}

}  // namespace alignlab
