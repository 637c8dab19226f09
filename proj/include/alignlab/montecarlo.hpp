#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "alignlab/dynamics.hpp"
#include "alignlab/spectrum.hpp"
#include "alignlab/state.hpp"

namespace alignlab {

/// Sample mean with its standard error sd / sqrt(n).
struct McEstimate {
  double mean = 0;
  double std_error = 0;
  std::int64_t n = 0;
};

/// Running mean and sum of squared deviations (Welford). Two accumulators
/// merge exactly in the pairwise form of Chan et al.
class McAccumulator {
 public:
  void add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / double(n_);
    m2_ += delta * (x - mean_);
  }

  void merge(const McAccumulator& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double n = double(n_ + o.n_);
    const double delta = o.mean_ - mean_;
    mean_ += delta * double(o.n_) / n;
    m2_ += o.m2_ + delta * delta * double(n_) * double(o.n_) / n;
    n_ += o.n_;
  }

  std::int64_t count() const { return n_; }
  double mean() const { return mean_; }
  /// Sample variance with the n - 1 denominator.
  double variance() const { return n_ > 1 ? m2_ / double(n_ - 1) : 0.0; }

  McEstimate estimate() const;

 private:
  std::int64_t n_ = 0;
  double mean_ = 0;
  double m2_ = 0;
};

/// Samples per independent RNG stream. Chunk j of an estimate seeded with s
/// draws from derive_seed(s, j); chunks are merged in index order, so the
/// result does not depend on how many threads evaluate the chunks.
inline constexpr std::int64_t kMcChunk = 8192;

/// One-step statistics at a single step size, all from the same draws.
struct OneStepMoments {
  double eta = 0;
  McAccumulator f;        // s^B_t s^D_{t+1} - s^B_{t+1} s^D_t
  McAccumulator sD;       // s^D_{t+1}
  McAccumulator sB;       // s^B_{t+1}
  McAccumulator theta;    // theta_{t+1}
  McAccumulator dtheta;   // theta_{t+1} - theta_t
  McAccumulator dloss;    // L(x_{t+1}) - L(x_t)
};

/// n one-step draws from the fixed state `x`. The same noise sample is
/// reused for every entry of `etas` (common random numbers). `algo` selects
/// full or block-projected updates.
std::vector<OneStepMoments> sample_one_step(const SpectrumD& spec, const NoiseProfileD& noise,
                                            const StateD& x, std::span<const double> etas,
                                            std::int64_t n, std::uint64_t seed,
                                            Algo algo = Algo::sgd);

/// Mean and standard error of theta(x_{t+1}) over n >= 100 draws.
McEstimate estimate_conditional_alignment(const SpectrumD& spec, const NoiseProfileD& noise,
                                          const StateD& x, double eta, std::int64_t n,
                                          std::uint64_t seed);

/// Mean and standard error of f_t(eta) over n >= 100 draws.
McEstimate estimate_f_drift(const SpectrumD& spec, const NoiseProfileD& noise, const StateD& x,
                            double eta, std::int64_t n, std::uint64_t seed);

enum class Quantity { theta_drift, f_drift, loss_change };
enum class Verdict { confirmed, inconclusive, contradicted };

const char* quantity_name(Quantity q);
const char* verdict_name(Verdict v);

/// inconclusive when |mean| <= z_crit * stderr + slack; otherwise confirmed
/// when sign(mean) matches the prediction, contradicted when it does not.
Verdict classify(double mean, double std_error, int predicted_sign, double z_crit,
                 double slack = 0.0);

struct DriftVerdict {
  Quantity quantity = Quantity::f_drift;
  int predicted_sign = 0;
  McEstimate estimate;
  Verdict verdict = Verdict::inconclusive;
  /// Observed score mean / stderr; NaN when stderr is 0.
  double z = 0;
  double z_crit = 3.0;
  double slack = 0;
  /// The target holds only as d -> infinity.
  bool asymptotic = false;
  /// Exact expected value, when one is known.
  std::optional<double> target;
  /// |mean - target| within the target tolerance.
  std::optional<bool> target_ok;
};

struct DriftTestResult {
  double theta = 0;
  double eta = 0;
  std::optional<double> eta_star;
  DriftVerdict f_drift;
  DriftVerdict theta_drift;
};

/// Sign test of the alignment drift at step `eta`. The prediction is the
/// sign of p eta^2 + q eta. The f-drift verdict uses pure statistical
/// tolerance; the theta-drift verdict adds `theta_slack`.
DriftTestResult drift_sign_test(const SpectrumD& spec, const NoiseProfileD& noise,
                                const StateD& x, double eta, std::int64_t n, double z_crit,
                                std::uint64_t seed, double theta_slack = 0.005);

/// Sign test of E[L(x_{t+1}) - L(x_t)] under the block-projected update,
/// with the exact target -eta s^S + eta^2 (tau^S + n^loss_S) / 2 checked at
/// `target_tol` standard errors.
DriftVerdict projected_loss_test(const SpectrumD& spec, const NoiseProfileD& noise,
                                 const StateD& x, double eta, Block block, std::int64_t n,
                                 double z_crit, std::uint64_t seed, double target_tol = 4.0);

/// Per-coordinate estimates of E[c_{i,t}^2] under constant-step SGD from
/// `init`, at each requested time. Result is indexed [time][coordinate].
std::vector<std::vector<McEstimate>> estimate_mode_second_moments(
    const SpectrumD& spec, const NoiseProfileD& noise, const StateD& init, double eta,
    std::span<const std::int64_t> times, std::int64_t n, std::uint64_t seed);

/// Alignment averaged over independent replicas that share `init`. Replica r
/// uses the noise stream derive_seed(seed, r).
struct AlignmentEnsemble {
  std::vector<std::int64_t> times;
  std::vector<McEstimate> theta;
};

AlignmentEnsemble ensemble_alignment(const SpectrumD& spec, const NoiseProfileD& noise,
                                     const StateD& init, const TrajectoryOptions& opt,
                                     std::int64_t replicas, std::uint64_t seed);

struct WindowStats {
  double mean = 0;
  double std = 0;
  std::size_t count = 0;
};

/// Mean and sample standard deviation of the recorded theta_t with
/// t >= t_start.
WindowStats late_phase_statistic(const TrajectoryRecord& traj, std::int64_t t_start);

/// Recorded step at which the moving average of theta over `window` records
/// is smallest. A convention for the start of the late phase.
std::int64_t late_phase_start(const TrajectoryRecord& traj, std::size_t window = 50);

struct DecayFit {
  double slope = 0;
  double r2 = 0;
  std::size_t points = 0;
};

/// Fit of log theta_t against log t over the recorded steps 1 <= t <= t_star.
DecayFit phase1_decay_fit(const TrajectoryRecord& traj, std::int64_t t_star);

}  // namespace alignlab
