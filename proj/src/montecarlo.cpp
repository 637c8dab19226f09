#include "alignlab/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "alignlab/parallel.hpp"
#include "alignlab/rng.hpp"
#include "alignlab/stats.hpp"
#include "alignlab/theory.hpp"

namespace alignlab {

McEstimate McAccumulator::estimate() const {
  return {mean_, n_ > 1 ? std::sqrt(variance() / double(n_)) : 0.0, n_};
}

namespace {

std::int64_t chunk_count(std::int64_t n) { return (n + kMcChunk - 1) / kMcChunk; }

std::int64_t chunk_size(std::int64_t n, std::int64_t j) {
  return std::min(kMcChunk, n - j * kMcChunk);
}

void require_samples(std::int64_t n, std::int64_t min, const char* what) {
  if (n < min)
    throw ParameterError(std::string(what) + " needs at least " + std::to_string(min) +
                         " samples");
}

int sign_of(double v) { return v < 0 ? -1 : (v > 0 ? 1 : 0); }

double z_score(const McEstimate& e) {
  return e.std_error > 0 ? e.mean / e.std_error : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

std::vector<OneStepMoments> sample_one_step(const SpectrumD& spec, const NoiseProfileD& noise,
                                            const StateD& x, std::span<const double> etas,
                                            std::int64_t n, std::uint64_t seed, Algo algo) {
  detail::check_dims(x, spec);
  noise.check_dim(spec);
  require_samples(n, 2, "one-step sampler");
  for (double eta : etas)
    if (!(eta >= 0) || !std::isfinite(eta)) throw ParameterError("step sizes must be finite and >= 0");

  const Eigen::Index d = spec.dim(), k = spec.k();
  const auto [b, e] = update_range(spec, algo);
  const Eigen::ArrayXd lam = spec.lambdas().array();
  const Eigen::ArrayXd lam2 = lam.square();
  const Eigen::ArrayXd sd = noise.kappa2().array().sqrt();
  const Eigen::ArrayXd c = x.c.array();

  const BlockStatsD st = block_stats(x, spec, noise);
  const double loss0 = loss(x, spec);
  const std::size_t ne = etas.size();

  // Outside the updated range coordinates are frozen, so their contributions
  // are constants.
  double frozen_D = 0, frozen_B = 0, frozen_L = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (i >= b && i < e) continue;
    (i < k ? frozen_D : frozen_B) += lam2[i] * c[i] * c[i];
    frozen_L += 0.5 * lam[i] * c[i] * c[i];
  }

  const std::int64_t chunks = chunk_count(n);
  std::vector<std::vector<OneStepMoments>> parts(static_cast<std::size_t>(chunks),
                                                 std::vector<OneStepMoments>(ne));
  parallel_for(std::size_t(chunks), [&](std::size_t j) {
    auto& acc = parts[j];
    NormalStream rng(derive_seed(seed, j));
    Eigen::ArrayXd z(d);
    std::vector<Eigen::ArrayXd> contraction;
    for (double eta : etas) contraction.push_back(1.0 - eta * lam);
    const std::int64_t m = chunk_size(n, std::int64_t(j));
    for (std::int64_t s = 0; s < m; ++s) {
      for (Eigen::Index i = b; i < e; ++i) z[i] = sd[i] * rng();
      for (std::size_t h = 0; h < ne; ++h) {
        const double eta = etas[h];
        const Eigen::ArrayXd& a = contraction[h];
        double sD = frozen_D, sB = frozen_B, L = frozen_L;
        for (Eigen::Index i = b; i < e; ++i) {
          const double ci = a[i] * c[i] - eta * z[i];
          const double c2 = ci * ci;
          (i < k ? sD : sB) += lam2[i] * c2;
          L += 0.5 * lam[i] * c2;
        }
        const double tot = sD + sB;
        const double th = tot > 0 ? sD / tot : 0.0;
        OneStepMoments& o = acc[h];
        o.f.add(st.sB * sD - sB * st.sD);
        o.sD.add(sD);
        o.sB.add(sB);
        o.theta.add(th);
        o.dtheta.add(th - st.theta);
        o.dloss.add(L - loss0);
      }
    }
  });

  std::vector<OneStepMoments> out(ne);
  for (std::size_t h = 0; h < ne; ++h) {
    out[h].eta = etas[h];
    for (const auto& part : parts) {
      out[h].f.merge(part[h].f);
      out[h].sD.merge(part[h].sD);
      out[h].sB.merge(part[h].sB);
      out[h].theta.merge(part[h].theta);
      out[h].dtheta.merge(part[h].dtheta);
      out[h].dloss.merge(part[h].dloss);
    }
  }
  return out;
}

McEstimate estimate_conditional_alignment(const SpectrumD& spec, const NoiseProfileD& noise,
                                          const StateD& x, double eta, std::int64_t n,
                                          std::uint64_t seed) {
  require_samples(n, 100, "conditional alignment estimate");
  const double etas[] = {eta};
  return sample_one_step(spec, noise, x, etas, n, seed)[0].theta.estimate();
}

McEstimate estimate_f_drift(const SpectrumD& spec, const NoiseProfileD& noise, const StateD& x,
                            double eta, std::int64_t n, std::uint64_t seed) {
  require_samples(n, 100, "drift estimate");
  const double etas[] = {eta};
  return sample_one_step(spec, noise, x, etas, n, seed)[0].f.estimate();
}

const char* quantity_name(Quantity q) {
  switch (q) {
    case Quantity::theta_drift: return "theta_drift";
    case Quantity::loss_change: return "loss_change";
    default: return "f_drift";
  }
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::confirmed: return "confirmed";
    case Verdict::contradicted: return "contradicted";
    default: return "inconclusive";
  }
}

Verdict classify(double mean, double std_error, int predicted_sign, double z_crit,
                 double slack) {
  if (std::abs(mean) <= z_crit * std_error + slack) return Verdict::inconclusive;
  return sign_of(mean) == predicted_sign ? Verdict::confirmed : Verdict::contradicted;
}

DriftTestResult drift_sign_test(const SpectrumD& spec, const NoiseProfileD& noise,
                                const StateD& x, double eta, std::int64_t n, double z_crit,
                                std::uint64_t seed, double theta_slack) {
  require_samples(n, 1000, "drift sign test");
  if (!(eta > 0)) throw ParameterError("drift sign test needs eta > 0");
  const BlockStatsD st = block_stats(x, spec, noise);
  const DriftQuadratic<double> dq = drift_quadratic(st);
  const int predicted = drift_sign(dq, eta);

  const double etas[] = {eta};
  const OneStepMoments mc = sample_one_step(spec, noise, x, etas, n, seed)[0];

  DriftTestResult r;
  r.theta = st.theta;
  r.eta = eta;
  r.eta_star = dq.eta_star;

  DriftVerdict& f = r.f_drift;
  f.quantity = Quantity::f_drift;
  f.predicted_sign = predicted;
  f.estimate = mc.f.estimate();
  f.z = z_score(f.estimate);
  f.z_crit = z_crit;
  f.verdict = classify(f.estimate.mean, f.estimate.std_error, predicted, z_crit);
  f.target = dq(eta);

  DriftVerdict& th = r.theta_drift;
  th.quantity = Quantity::theta_drift;
  th.predicted_sign = predicted;
  th.estimate = mc.dtheta.estimate();
  th.z = z_score(th.estimate);
  th.z_crit = z_crit;
  th.slack = theta_slack;
  th.asymptotic = true;
  th.verdict = classify(th.estimate.mean, th.estimate.std_error, predicted, z_crit, theta_slack);
  return r;
}

DriftVerdict projected_loss_test(const SpectrumD& spec, const NoiseProfileD& noise,
                                 const StateD& x, double eta, Block block, std::int64_t n,
                                 double z_crit, std::uint64_t seed, double target_tol) {
  require_samples(n, 1000, "projected loss test");
  if (!(eta > 0)) throw ParameterError("projected loss test needs eta > 0");
  const BlockStatsD st = block_stats(x, spec, noise);
  const double threshold = loss_threshold(st, block);
  int predicted = 0;
  if (std::abs(eta - threshold) > 1e-12 * std::max(threshold, eta))
    predicted = eta < threshold ? -1 : 1;
  if (!(st.signal(block) > 0)) predicted = st.loss_noise(block) > 0 ? 1 : 0;

  const double etas[] = {eta};
  const Algo algo = block == Block::dominant ? Algo::dsgd : Algo::bsgd;
  const OneStepMoments mc = sample_one_step(spec, noise, x, etas, n, seed, algo)[0];

  DriftVerdict v;
  v.quantity = Quantity::loss_change;
  v.predicted_sign = predicted;
  v.estimate = mc.dloss.estimate();
  v.z = z_score(v.estimate);
  v.z_crit = z_crit;
  v.verdict = classify(v.estimate.mean, v.estimate.std_error, predicted, z_crit);
  const double target = expected_projected_loss_change(st, eta, block);
  v.target = target;
  const double roundoff = 1e-10 * (std::abs(target) + eta * st.signal(block) + 1e-300);
  v.target_ok = std::abs(v.estimate.mean - target) <= target_tol * v.estimate.std_error + roundoff;
  return v;
}

std::vector<std::vector<McEstimate>> estimate_mode_second_moments(
    const SpectrumD& spec, const NoiseProfileD& noise, const StateD& init, double eta,
    std::span<const std::int64_t> times, std::int64_t n, std::uint64_t seed) {
  detail::check_dims(init, spec);
  noise.check_dim(spec);
  require_samples(n, 2, "second-moment estimate");
  if (times.empty()) throw ParameterError("second-moment estimate needs at least one time");
  if (!std::is_sorted(times.begin(), times.end()) || times.front() < 0)
    throw ParameterError("times must be sorted and non-negative");

  const Eigen::Index d = spec.dim();
  const Eigen::ArrayXd a = 1.0 - eta * spec.lambdas().array();
  const Eigen::ArrayXd sd = noise.kappa2().array().sqrt();
  const std::size_t nt = times.size();
  const std::int64_t chunks = chunk_count(n);

  using Table = std::vector<std::vector<McAccumulator>>;
  std::vector<Table> parts(static_cast<std::size_t>(chunks),
                           Table(nt, std::vector<McAccumulator>(d)));
  parallel_for(std::size_t(chunks), [&](std::size_t j) {
    Table& acc = parts[j];
    NormalStream rng(derive_seed(seed, j));
    const std::int64_t m = chunk_size(n, std::int64_t(j));
    Eigen::ArrayXd c(d);
    for (std::int64_t s = 0; s < m; ++s) {
      c = init.c.array();
      std::int64_t t = 0;
      for (std::size_t h = 0; h < nt; ++h) {
        for (; t < times[h]; ++t)
          for (Eigen::Index i = 0; i < d; ++i) c[i] = a[i] * c[i] - eta * sd[i] * rng();
        for (Eigen::Index i = 0; i < d; ++i) acc[h][i].add(c[i] * c[i]);
      }
    }
  });

  std::vector<std::vector<McEstimate>> out(nt, std::vector<McEstimate>(d));
  for (std::size_t h = 0; h < nt; ++h)
    for (Eigen::Index i = 0; i < d; ++i) {
      McAccumulator total;
      for (const auto& part : parts) total.merge(part[h][i]);
      out[h][i] = total.estimate();
    }
  return out;
}

AlignmentEnsemble ensemble_alignment(const SpectrumD& spec, const NoiseProfileD& noise,
                                     const StateD& init, const TrajectoryOptions& opt,
                                     std::int64_t replicas, std::uint64_t seed) {
  require_samples(replicas, 2, "alignment ensemble");
  std::vector<TrajectoryRecord> runs(static_cast<std::size_t>(replicas));
  parallel_for(runs.size(), [&](std::size_t r) {
    runs[r] = run_trajectory(spec, noise, init, opt, derive_seed(seed, r));
  });
  AlignmentEnsemble ens;
  ens.times = runs.front().times;
  for (std::size_t i = 0; i < ens.times.size(); ++i) {
    McAccumulator acc;
    for (const auto& run : runs) acc.add(run.thetas[i]);
    ens.theta.push_back(acc.estimate());
  }
  return ens;
}

WindowStats late_phase_statistic(const TrajectoryRecord& traj, std::int64_t t_start) {
  McAccumulator acc;
  for (std::size_t i = 0; i < traj.size(); ++i)
    if (traj.times[i] >= t_start) acc.add(traj.thetas[i]);
  if (acc.count() == 0)
    throw ParameterError("late-phase window starting at " + std::to_string(t_start) +
                         " contains no recorded steps");
  return {acc.mean(), std::sqrt(acc.variance()), std::size_t(acc.count())};
}

std::int64_t late_phase_start(const TrajectoryRecord& traj, std::size_t window) {
  if (traj.size() == 0) throw InsufficientDataError("empty trajectory");
  window = std::clamp<std::size_t>(window, 1, traj.size());
  double sum = 0;
  for (std::size_t i = 0; i < window; ++i) sum += traj.thetas[i];
  double best = sum;
  std::size_t best_end = window - 1;
  for (std::size_t i = window; i < traj.size(); ++i) {
    sum += traj.thetas[i] - traj.thetas[i - window];
    if (sum < best) {
      best = sum;
      best_end = i;
    }
  }
  // Centre of the best window.
  return traj.times[best_end + 1 - window + window / 2];
}

DecayFit phase1_decay_fit(const TrajectoryRecord& traj, std::int64_t t_star) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const std::int64_t t = traj.times[i];
    if (t < 1 || t > t_star || !(traj.thetas[i] > 0)) continue;
    xs.push_back(std::log(double(t)));
    ys.push_back(std::log(traj.thetas[i]));
  }
  if (xs.size() < 4)
    throw InsufficientDataError("phase-I fit needs at least 4 recorded steps in [1, t*]");
  const LineFit f = fit_line(xs, ys);
  return {f.slope, f.r2, xs.size()};
}

}  // namespace alignlab
