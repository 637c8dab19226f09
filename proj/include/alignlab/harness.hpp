#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "alignlab/spectrum.hpp"
#include "alignlab/state.hpp"

namespace alignlab {

/// Initial state family: i.i.d. Gaussian coordinates with standard deviation
/// `init_scale`, or |c_i| = init_scale with random signs.
enum class InitKind { gaussian, fixed_magnitude };

/// Fully resolved experiment configuration. The spectrum ranges are
/// conventions.
struct ExperimentConfig {
  std::int64_t d = 500;
  std::int64_t k = 50;
  std::vector<double> m_list{5, 10, 20, 50, 100, 200, 300, 400, 500};
  double eta = 0.003;
  std::int64_t steps = 30000;
  double sigma2 = 1.0;
  double init_scale = 1.0;
  InitKind init = InitKind::gaussian;
  std::vector<std::uint64_t> seeds{42, 87, 568, 1101, 12138, 70425, 4008001};
  std::int64_t n_mc = 100000;
  std::int64_t record_every = 10;
  /// Start of the late-phase window: a step index, "auto" for the
  /// moving-minimum heuristic, or unset for steps / 2.
  std::optional<std::int64_t> t_start;
  bool t_start_auto = false;
  std::string output_dir = "out";

  double bulk_lo = 0.5;
  double bulk_hi = 1.0;
  double top_spread = 0.2;

  /// drift-test targets: a number, "<f>*g_gap", or "high" for (theta*+1)/2.
  std::vector<std::string> theta_targets{"0.3*g_gap", "0.9*g_gap", "high"};
  std::vector<double> eta_factors{0.5, 2.0};
  double z_crit = 3.0;
  double theta_slack = 0.005;
  /// Random states per (m, seed) in projected-test.
  std::int64_t n_states = 100;

  /// Throws ParameterError on any violated invariant.
  void validate() const;
  std::int64_t late_start() const { return t_start.value_or(steps / 2); }
};

/// Overlays the keys present in `j` on `base`; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});
nlohmann::json to_json(const ExperimentConfig& c);

/// Spectrum, noise and initial state of one (m, seed) job.
struct Setup {
  SpectrumD spec;
  NoiseProfileD noise;
  StateD init;
};

Setup make_setup(const ExperimentConfig& c, double m, std::uint64_t seed);

/// Parses a drift-test target against the thresholds of `x`; returns the
/// state rescaled to that alignment.
StateD state_at_target(const std::string& target, const SpectrumD& spec,
                       const NoiseProfileD& noise, const StateD& x);

/// Commands return the process exit code: 0 success, 1 a contradicted
/// verdict. IO and parameter problems throw.
int cmd_simulate(const ExperimentConfig& c, std::ostream& log);
int cmd_sweep_gap(const ExperimentConfig& c, std::ostream& log);
int cmd_drift_test(const ExperimentConfig& c, std::ostream& log);
int cmd_projected_test(const ExperimentConfig& c, std::ostream& log);
/// Prints the theory report for the given files as JSON.
int cmd_report(const std::filesystem::path& spectrum_file,
               const std::optional<std::filesystem::path>& noise_file,
               const std::filesystem::path& state_file, std::optional<double> eta,
               std::ostream& out);

}  // namespace alignlab
