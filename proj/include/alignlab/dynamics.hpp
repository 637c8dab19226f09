#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "alignlab/errors.hpp"
#include "alignlab/rng.hpp"
#include "alignlab/spectrum.hpp"
#include "alignlab/state.hpp"

namespace alignlab {

/// Full SGD, or SGD with the stochastic gradient projected onto the dominant
/// (DSGD) or bulk (BSGD) eigenspace.
enum class Algo { sgd, dsgd, bsgd };

inline const char* algo_name(Algo a) {
  switch (a) {
    case Algo::dsgd: return "DSGD";
    case Algo::bsgd: return "BSGD";
    default: return "SGD";
  }
}

/// Coordinates [begin, end) touched by one update of `algo`.
template <typename Scalar>
std::pair<Eigen::Index, Eigen::Index> update_range(const Spectrum<Scalar>& spec, Algo algo) {
  switch (algo) {
    case Algo::dsgd: return {0, spec.k()};
    case Algo::bsgd: return {spec.k(), spec.dim()};
    default: return {0, spec.dim()};
  }
}

/// c_{i,t+1} = (1 - eta lambda_i) c_{i,t} - eta zeta_i on every coordinate.
template <typename Scalar, typename Derived>
State<Scalar> sgd_step(const State<Scalar>& x, const Spectrum<Scalar>& spec,
                       const Eigen::MatrixBase<Derived>& noise_sample, Scalar eta) {
  detail::check_dims(x, spec);
  if (noise_sample.size() != spec.dim()) throw ParameterError("noise sample has the wrong dimension");
  State<Scalar> y(((Scalar(1) - eta * spec.lambdas().array()) * x.c.array() -
                   eta * noise_sample.array())
                      .matrix(),
                  x.t + 1);
  return y;
}

/// SGD recursion restricted to one block; the other block is left unchanged.
template <typename Scalar, typename Derived>
State<Scalar> projected_step(const State<Scalar>& x, const Spectrum<Scalar>& spec,
                             const Eigen::MatrixBase<Derived>& noise_sample, Scalar eta,
                             Block block) {
  detail::check_dims(x, spec);
  if (noise_sample.size() != spec.dim()) throw ParameterError("noise sample has the wrong dimension");
  const auto [b, e] = update_range(spec, block == Block::dominant ? Algo::dsgd : Algo::bsgd);
  State<Scalar> y(x.c, x.t + 1);
  const Eigen::Index n = e - b;
  y.c.segment(b, n) = ((Scalar(1) - eta * spec.lambdas().segment(b, n).array()) *
                           x.c.segment(b, n).array() -
                       eta * noise_sample.segment(b, n).array())
                          .matrix();
  return y;
}

/// zeta_i ~ N(0, kappa_i^2), independent across coordinates.
template <typename Scalar>
typename NoiseProfile<Scalar>::Vector sample_noise(const NoiseProfile<Scalar>& noise,
                                                   NormalStream& rng) {
  typename NoiseProfile<Scalar>::Vector z(noise.dim());
  for (Eigen::Index i = 0; i < z.size(); ++i)
    z[i] = std::sqrt(noise.kappa2()[i]) * Scalar(rng());
  return z;
}

/// Recorded series of one run: (t, theta_t, L(x_t)) and optionally the block
/// energies (s^D_t, s^B_t).
struct TrajectoryRecord {
  std::vector<std::int64_t> times;
  std::vector<double> thetas;
  std::vector<double> losses;
  std::vector<double> sD;
  std::vector<double> sB;

  std::size_t size() const { return times.size(); }
  bool has_block_energies() const { return !sD.empty(); }
};

struct TrajectoryOptions {
  double eta = 0;
  std::int64_t steps = 1;
  std::int64_t record_every = 10;
  Algo algo = Algo::sgd;
  bool record_block_energies = false;
};

inline constexpr double kDivergenceLimit = 1e150;

/// Runs `opt.steps` updates with fresh noise per step drawn from the stream
/// seeded by `seed`. Records t = 0, every `record_every` steps, and t = T.
template <typename Scalar>
TrajectoryRecord run_trajectory(const Spectrum<Scalar>& spec, const NoiseProfile<Scalar>& noise,
                                const State<Scalar>& init, const TrajectoryOptions& opt,
                                std::uint64_t seed) {
  detail::check_dims(init, spec);
  noise.check_dim(spec);
  if (opt.steps < 1) throw ParameterError("trajectory needs at least one step");
  if (opt.record_every < 1) throw ParameterError("record_every must be >= 1");
  if (!(opt.eta > 0)) throw ParameterError("step size must be positive");

  const Eigen::Index d = spec.dim(), k = spec.k();
  const auto [b, e] = update_range(spec, opt.algo);
  const Scalar eta = Scalar(opt.eta);
  const auto lam = spec.lambdas().array();
  const Eigen::Array<Scalar, Eigen::Dynamic, 1> contraction = Scalar(1) - eta * lam;
  const Eigen::Array<Scalar, Eigen::Dynamic, 1> noise_sd = noise.kappa2().array().sqrt();
  const Eigen::Array<Scalar, Eigen::Dynamic, 1> lam2 = lam.square();

  TrajectoryRecord rec;
  const std::size_t expected = std::size_t(opt.steps / opt.record_every) + 2;
  rec.times.reserve(expected);
  rec.thetas.reserve(expected);
  rec.losses.reserve(expected);

  Eigen::Array<Scalar, Eigen::Dynamic, 1> c = init.c.array();
  auto record = [&](std::int64_t t) {
    const auto g2 = lam2 * c.square();
    const Scalar dom = g2.head(k).sum();
    const Scalar bulk = g2.tail(d - k).sum();
    const Scalar tot = dom + bulk;
    rec.times.push_back(init.t + t);
    rec.thetas.push_back(double(tot > Scalar(0) ? dom / tot : Scalar(0)));
    rec.losses.push_back(double(Scalar(0.5) * (lam * c.square()).sum()));
    if (opt.record_block_energies) {
      rec.sD.push_back(double(dom));
      rec.sB.push_back(double(bulk));
    }
  };

  NormalStream rng(seed);
  record(0);
  for (std::int64_t t = 1; t <= opt.steps; ++t) {
    for (Eigen::Index i = b; i < e; ++i) {
      c[i] = contraction[i] * c[i] - eta * noise_sd[i] * Scalar(rng());
      if (!(std::abs(c[i]) <= Scalar(kDivergenceLimit)))
        throw DivergenceError("trajectory diverged at step " + std::to_string(init.t + t) +
                                  " (coordinate " + std::to_string(i) + ")",
                              init.t + t);
    }
    if (t % opt.record_every == 0 || t == opt.steps) record(t);
  }
  return rec;
}

}  // namespace alignlab
