#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

#include <Eigen/Core>

#include "alignlab/errors.hpp"
#include "alignlab/rng.hpp"
#include "alignlab/spectrum.hpp"

namespace alignlab {

/// Iterate expressed in the Hessian eigenbasis: c_i = <x_t, u_i>.
template <typename Scalar = double>
struct State {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector c;
  std::int64_t t = 0;

  State() = default;
  explicit State(Vector coords, std::int64_t time = 0) : c(std::move(coords)), t(time) {}

  Eigen::Index dim() const { return c.size(); }
  /// ||x_t||_2^2.
  Scalar norm2() const { return c.squaredNorm(); }
  bool operator==(const State& o) const { return t == o.t && c == o.c; }
};

/// Every block-wise sum derived from one state.
template <typename Scalar = double>
struct BlockStats {
  Scalar sD = 0, sB = 0, s = 0;        // sum lambda^2 c^2
  Scalar tauD = 0, tauB = 0;           // sum lambda^3 c^2
  Scalar uD = 0, uB = 0;               // sum lambda^4 c^2
  Scalar eD = 0, eB = 0;               // sum lambda^2 kappa^2
  Scalar nLossD = 0, nLossB = 0;       // sum lambda kappa^2
  Scalar theta = 0;

  Scalar signal(Block b) const { return b == Block::dominant ? sD : sB; }
  Scalar tau(Block b) const { return b == Block::dominant ? tauD : tauB; }
  Scalar u(Block b) const { return b == Block::dominant ? uD : uB; }
  Scalar noise_energy(Block b) const { return b == Block::dominant ? eD : eB; }
  Scalar loss_noise(Block b) const { return b == Block::dominant ? nLossD : nLossB; }

  /// mu^S(3,2) = tau^S / s^S, the lambda-weighted mean curvature of block S.
  Scalar mean_curvature(Block b) const {
    const Scalar s_b = signal(b);
    if (!(s_b > Scalar(0))) throw DegenerateStateError("block has zero gradient energy");
    return tau(b) / s_b;
  }
};

namespace detail {
template <typename Scalar>
void check_dims(const State<Scalar>& x, const Spectrum<Scalar>& spec) {
  if (x.dim() != spec.dim()) throw ParameterError("state and spectrum dimensions differ");
  for (Eigen::Index i = 0; i < x.dim(); ++i)
    if (!std::isfinite(double(x.c[i]))) throw ParameterError("state has non-finite coordinates");
}
}  // namespace detail

/// theta = sum_D lambda^2 c^2 / sum lambda^2 c^2, and 0 for the zero state.
template <typename Scalar>
Scalar alignment(const State<Scalar>& x, const Spectrum<Scalar>& spec) {
  detail::check_dims(x, spec);
  const auto g2 = spec.lambdas().array().square() * x.c.array().square();
  const Scalar dom = g2.head(spec.k()).sum();
  const Scalar total = dom + g2.tail(spec.bulk_size()).sum();
  return total > Scalar(0) ? dom / total : Scalar(0);
}

template <typename Scalar>
BlockStats<Scalar> block_stats(const State<Scalar>& x, const Spectrum<Scalar>& spec,
                               const NoiseProfile<Scalar>& noise) {
  detail::check_dims(x, spec);
  noise.check_dim(spec);
  const Eigen::Index k = spec.k(), nb = spec.bulk_size();
  const auto lam = spec.lambdas().array();
  const auto c2 = x.c.array().square();
  const auto w2 = lam.square() * c2;

  BlockStats<Scalar> st;
  st.sD = w2.head(k).sum();
  st.sB = w2.tail(nb).sum();
  st.s = st.sD + st.sB;
  st.tauD = (w2 * lam).head(k).sum();
  st.tauB = (w2 * lam).tail(nb).sum();
  st.uD = (w2 * lam.square()).head(k).sum();
  st.uB = (w2 * lam.square()).tail(nb).sum();
  st.eD = noise.energy(spec, Block::dominant);
  st.eB = noise.energy(spec, Block::bulk);
  st.nLossD = noise.loss_energy(spec, Block::dominant);
  st.nLossB = noise.loss_energy(spec, Block::bulk);
  st.theta = st.s > Scalar(0) ? st.sD / st.s : Scalar(0);
  return st;
}

/// L(x) = 1/2 sum lambda_i c_i^2.
template <typename Scalar>
Scalar loss(const State<Scalar>& x, const Spectrum<Scalar>& spec) {
  detail::check_dims(x, spec);
  return Scalar(0.5) * (spec.lambdas().array() * x.c.array().square()).sum();
}

/// i.i.d. N(0, scale^2) coordinates at t = 0.
template <typename Scalar = double>
State<Scalar> random_init(Eigen::Index d, Scalar scale, std::uint64_t seed) {
  if (!(scale > Scalar(0)) || !std::isfinite(double(scale)))
    throw ParameterError("initialization scale must be positive");
  if (d < 1) throw ParameterError("dimension must be positive");
  NormalStream rng(seed);
  typename State<Scalar>::Vector c(d);
  for (Eigen::Index i = 0; i < d; ++i) c[i] = scale * Scalar(rng());
  return State<Scalar>(std::move(c), 0);
}

/// Rescale the dominant coordinates so that the alignment equals `theta`.
/// Both blocks must carry gradient energy.
template <typename Scalar>
State<Scalar> rescale_dominant_to_alignment(const State<Scalar>& x, const Spectrum<Scalar>& spec,
                                            Scalar theta) {
  if (!(theta > Scalar(0) && theta < Scalar(1)))
    throw ParameterError("target alignment must lie in (0, 1)");
  detail::check_dims(x, spec);
  const auto g2 = spec.lambdas().array().square() * x.c.array().square();
  const Scalar sD = g2.head(spec.k()).sum(), sB = g2.tail(spec.bulk_size()).sum();
  if (!(sD > Scalar(0)) || !(sB > Scalar(0)))
    throw DegenerateStateError("alignment target unreachable: a block has zero energy");
  State<Scalar> y = x;
  y.c.head(spec.k()) *= std::sqrt(theta * sB / ((Scalar(1) - theta) * sD));
  return y;
}

/// Rescale the bulk coordinates so that the alignment equals `theta`.
template <typename Scalar>
State<Scalar> rescale_bulk_to_alignment(const State<Scalar>& x, const Spectrum<Scalar>& spec,
                                        Scalar theta) {
  if (!(theta > Scalar(0) && theta < Scalar(1)))
    throw ParameterError("target alignment must lie in (0, 1)");
  detail::check_dims(x, spec);
  const auto g2 = spec.lambdas().array().square() * x.c.array().square();
  const Scalar sD = g2.head(spec.k()).sum(), sB = g2.tail(spec.bulk_size()).sum();
  if (!(sD > Scalar(0)) || !(sB > Scalar(0)))
    throw DegenerateStateError("alignment target unreachable: a block has zero energy");
  State<Scalar> y = x;
  y.c.tail(spec.bulk_size()) *= std::sqrt((Scalar(1) - theta) * sD / (theta * sB));
  return y;
}

/// Rescale the whole state so that s_t equals `s_target`.
template <typename Scalar>
State<Scalar> rescale_to_energy(const State<Scalar>& x, const Spectrum<Scalar>& spec,
                                Scalar s_target) {
  detail::check_dims(x, spec);
  const Scalar s = (spec.lambdas().array().square() * x.c.array().square()).sum();
  if (!(s > Scalar(0))) throw DegenerateStateError("zero state cannot be rescaled");
  State<Scalar> y = x;
  y.c *= std::sqrt(s_target / s);
  return y;
}

using StateD = State<double>;
using BlockStatsD = BlockStats<double>;

}  // namespace alignlab
