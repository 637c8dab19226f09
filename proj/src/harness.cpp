#include "alignlab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <system_error>

#include "alignlab/dynamics.hpp"
#include "alignlab/errors.hpp"
#include "alignlab/io.hpp"
#include "alignlab/montecarlo.hpp"
#include "alignlab/parallel.hpp"
#include "alignlab/report.hpp"
#include "alignlab/rng.hpp"
#include "alignlab/stats.hpp"
#include "alignlab/svg.hpp"
#include "alignlab/theory.hpp"

namespace alignlab {

namespace fs = std::filesystem;
using nlohmann::json;
using io::format_number;

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ParameterError("config: " + msg);
  };
  require(d >= 2, "d must be >= 2");
  require(k >= 1 && k <= d - 1, "k must satisfy 1 <= k <= d-1");
  require(!m_list.empty(), "m_list must not be empty");
  for (double m : m_list) require(m > 1 && std::isfinite(m), "every m must be > 1");
  require(eta > 0 && std::isfinite(eta), "eta must be > 0");
  require(steps >= 1, "steps must be >= 1");
  require(sigma2 > 0 && std::isfinite(sigma2), "sigma2 must be > 0");
  require(init_scale > 0 && std::isfinite(init_scale), "init_scale must be > 0");
  require(!seeds.empty(), "seeds must not be empty");
  require(n_mc >= 1, "n_mc must be >= 1");
  require(record_every >= 1, "record_every must be >= 1");
  require(!t_start || (*t_start >= 0 && *t_start <= steps), "t_start must lie in [0, steps]");
  require(0 < bulk_lo && bulk_lo <= bulk_hi, "bulk_range must satisfy 0 < lo <= hi");
  require(top_spread >= 0, "top_spread must be >= 0");
  require(z_crit > 0, "z_crit must be > 0");
  require(theta_slack >= 0, "theta_slack must be >= 0");
  require(n_states >= 1, "n_states must be >= 1");
  require(!output_dir.empty(), "output_dir must not be empty");
}

namespace {

template <typename T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ParseError("config key \"" + key + "\" has the wrong type", 0);
  }
}

const char* init_name(InitKind k) {
  return k == InitKind::fixed_magnitude ? "fixed_magnitude" : "gaussian";
}

}  // namespace

ExperimentConfig config_from_json(const json& j, ExperimentConfig c) {
  if (!j.is_object()) throw ParseError("config must be a JSON object", 0);
  for (const auto& [key, v] : j.items()) {
    if (key == "d") c.d = get_as<std::int64_t>(v, key);
    else if (key == "k") c.k = get_as<std::int64_t>(v, key);
    else if (key == "m_list") c.m_list = get_as<std::vector<double>>(v, key);
    else if (key == "eta") c.eta = get_as<double>(v, key);
    else if (key == "steps") c.steps = get_as<std::int64_t>(v, key);
    else if (key == "sigma2") c.sigma2 = get_as<double>(v, key);
    else if (key == "init_scale") c.init_scale = get_as<double>(v, key);
    else if (key == "init") {
      const auto s = get_as<std::string>(v, key);
      if (s == "gaussian") c.init = InitKind::gaussian;
      else if (s == "fixed_magnitude") c.init = InitKind::fixed_magnitude;
      else throw ParseError("config key \"init\" must be \"gaussian\" or \"fixed_magnitude\"", 0);
    } else if (key == "seeds") c.seeds = get_as<std::vector<std::uint64_t>>(v, key);
    else if (key == "n_mc") c.n_mc = get_as<std::int64_t>(v, key);
    else if (key == "record_every") c.record_every = get_as<std::int64_t>(v, key);
    else if (key == "t_start") {
      c.t_start_auto = false;
      c.t_start.reset();
      if (v.is_string()) {
        if (v.get<std::string>() != "auto")
          throw ParseError("config key \"t_start\" must be an integer, \"auto\" or null", 0);
        c.t_start_auto = true;
      } else if (!v.is_null()) {
        c.t_start = get_as<std::int64_t>(v, key);
      }
    } else if (key == "output_dir") c.output_dir = get_as<std::string>(v, key);
    else if (key == "bulk_range") {
      const auto r = get_as<std::vector<double>>(v, key);
      if (r.size() != 2) throw ParseError("config key \"bulk_range\" needs two numbers", 0);
      c.bulk_lo = r[0];
      c.bulk_hi = r[1];
    } else if (key == "top_spread") c.top_spread = get_as<double>(v, key);
    else if (key == "theta_targets") {
      c.theta_targets.clear();
      if (!v.is_array()) throw ParseError("config key \"theta_targets\" must be an array", 0);
      for (const auto& t : v) c.theta_targets.push_back(t.is_string() ? t.get<std::string>() : t.dump());
    } else if (key == "eta_factors") c.eta_factors = get_as<std::vector<double>>(v, key);
    else if (key == "z_crit") c.z_crit = get_as<double>(v, key);
    else if (key == "theta_slack") c.theta_slack = get_as<double>(v, key);
    else if (key == "n_states") c.n_states = get_as<std::int64_t>(v, key);
    else throw ParseError("unknown config key \"" + key + "\"", 0);
  }
  return c;
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["d"] = c.d;
  j["k"] = c.k;
  j["m_list"] = c.m_list;
  j["eta"] = c.eta;
  j["steps"] = c.steps;
  j["sigma2"] = c.sigma2;
  j["init_scale"] = c.init_scale;
  j["init"] = init_name(c.init);
  j["seeds"] = c.seeds;
  j["n_mc"] = c.n_mc;
  j["record_every"] = c.record_every;
  if (c.t_start_auto) j["t_start"] = "auto";
  else if (c.t_start) j["t_start"] = *c.t_start;
  else j["t_start"] = nullptr;
  j["output_dir"] = c.output_dir;
  j["bulk_range"] = {c.bulk_lo, c.bulk_hi};
  j["top_spread"] = c.top_spread;
  j["theta_targets"] = c.theta_targets;
  j["eta_factors"] = c.eta_factors;
  j["z_crit"] = c.z_crit;
  j["theta_slack"] = c.theta_slack;
  j["n_states"] = c.n_states;
  return j;
}

Setup make_setup(const ExperimentConfig& c, double m, std::uint64_t seed) {
  SpectrumD spec = build_spectrum<double>(c.d, c.k, m, {c.bulk_lo, c.bulk_hi}, c.top_spread,
                                          derive_seed(seed, stream::kSpectrum));
  NoiseProfileD noise = isotropic_noise<double>(c.d, c.sigma2);
  StateD init;
  if (c.init == InitKind::gaussian) {
    init = random_init<double>(c.d, c.init_scale, derive_seed(seed, stream::kInit));
  } else {
    NormalStream rng(derive_seed(seed, stream::kInit));
    Eigen::VectorXd v(c.d);
    for (Eigen::Index i = 0; i < c.d; ++i) v[i] = rng() < 0 ? -c.init_scale : c.init_scale;
    init = StateD(std::move(v));
  }
  return {std::move(spec), std::move(noise), std::move(init)};
}

namespace {

/// x with its bulk rescaled so that theta = (theta*(x) + 1) / 2. theta*
/// depends on s, so the target is located by bisection.
StateD high_alignment_state(const SpectrumD& spec, const NoiseProfileD& noise, const StateD& x) {
  auto gap = [&](double th, StateD* out) {
    StateD y = rescale_bulk_to_alignment(x, spec, th);
    const auto st = block_stats(y, spec, noise);
    const double target = 0.5 * (theta_star(st, spec, noise).theta_star + 1.0);
    if (out) *out = std::move(y);
    return st.theta - target;
  };
  double lo = 1e-3, hi = 1.0 - 1e-12;
  if (!(gap(lo, nullptr) < 0) || !(gap(hi, nullptr) > 0))
    throw DegenerateStateError("high-alignment target is not bracketed");
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid, nullptr) < 0 ? lo : hi) = mid;
  }
  StateD y;
  gap(hi, &y);
  return y;
}

double parse_number(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ParameterError("cannot parse " + what + " \"" + s + "\"");
  }
  if (used != s.size()) throw ParameterError("cannot parse " + what + " \"" + s + "\"");
  return v;
}

}  // namespace

StateD state_at_target(const std::string& target, const SpectrumD& spec,
                       const NoiseProfileD& noise, const StateD& x) {
  if (target == "high") return high_alignment_state(spec, noise, x);
  const std::string suffix = "*g_gap";
  if (target.size() > suffix.size() &&
      target.compare(target.size() - suffix.size(), suffix.size(), suffix) == 0) {
    const double f = parse_number(target.substr(0, target.size() - suffix.size()), "theta target");
    return rescale_dominant_to_alignment(x, spec, f * g_gap(spec, noise));
  }
  return rescale_dominant_to_alignment(x, spec, parse_number(target, "theta target"));
}

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir);
}

std::string tag(double m) { return format_number(m); }

struct RunSummary {
  double m = 0;
  std::uint64_t seed = 0;
  std::optional<std::int64_t> t_star;
  std::optional<double> theta_inf;
  WindowStats late;
  std::int64_t t_start = 0;
  double theta0 = 0;
  double early_min = 0;
};

/// Runs one CSGD trajectory and its summary; rethrows divergence with the
/// job named.
RunSummary run_job(const ExperimentConfig& c, double m, std::uint64_t seed, TrajectoryRecord* keep) {
  const Setup s = make_setup(c, m, seed);
  RunSummary r;
  r.m = m;
  r.seed = seed;
  try {
    const auto plan = csgd_plan(s.spec, s.noise, s.init, c.eta);
    r.t_star = plan.t_star;
    r.theta_inf = plan.theta_inf;
  } catch (const StepSizeError&) {
  }
  TrajectoryOptions opt;
  opt.eta = c.eta;
  opt.steps = c.steps;
  opt.record_every = c.record_every;
  opt.record_block_energies = true;
  TrajectoryRecord traj;
  try {
    traj = run_trajectory(s.spec, s.noise, s.init, opt, derive_seed(seed, stream::kNoise));
  } catch (const DivergenceError& e) {
    throw DivergenceError("m=" + tag(m) + " seed=" + std::to_string(seed) + ": " + e.what(),
                          e.step());
  }
  r.t_start = c.t_start_auto ? late_phase_start(traj) : c.late_start();
  r.late = late_phase_statistic(traj, r.t_start);
  r.theta0 = traj.thetas.front();
  r.early_min = r.theta0;
  for (std::size_t i = 0; i < traj.size(); ++i)
    if (traj.times[i] < c.steps / 10) r.early_min = std::min(r.early_min, traj.thetas[i]);
  if (keep) *keep = std::move(traj);
  return r;
}

std::vector<double> as_double(const std::vector<std::int64_t>& v) {
  return std::vector<double>(v.begin(), v.end());
}

}  // namespace

int cmd_simulate(const ExperimentConfig& c, std::ostream& log) {
  c.validate();
  ensure_dir(c.output_dir);
  const fs::path out = c.output_dir;
  const std::size_t ns = c.seeds.size();
  std::vector<RunSummary> rows(c.m_list.size() * ns);
  parallel_for(rows.size(), [&](std::size_t j) {
    const double m = c.m_list[j / ns];
    const std::uint64_t seed = c.seeds[j % ns];
    TrajectoryRecord traj;
    rows[j] = run_job(c, m, seed, &traj);
    const std::string stem = "m" + tag(m) + "_seed" + std::to_string(seed);
    io::write_file_atomic(out / ("traj_" + stem + ".csv"), io::trajectory_csv(traj));
    const auto x = as_double(traj.times);
    svg::PlotSpec ps{"alignment, m=" + tag(m) + ", seed " + std::to_string(seed), "step", "theta",
                     true, false};
    io::write_file_atomic(out / ("alignment_" + stem + ".svg"),
                          svg::line_plot(ps, {{"theta", x, traj.thetas}}));
    ps.title = "loss, m=" + tag(m) + ", seed " + std::to_string(seed);
    ps.y_label = "loss";
    ps.log_y = true;
    io::write_file_atomic(out / ("loss_" + stem + ".svg"),
                          svg::line_plot(ps, {{"loss", x, traj.losses}}));
  });

  std::string csv = "m,seed,t_star,theta_inf,late_mean,late_std,t_start,theta_0,early_min_theta\n";
  for (const auto& r : rows) {
    csv += tag(r.m) + ',' + std::to_string(r.seed) + ',' +
           (r.t_star ? std::to_string(*r.t_star) : std::string("undef")) + ',' +
           format_number(r.theta_inf) + ',' + format_number(r.late.mean) + ',' +
           format_number(r.late.std) + ',' + std::to_string(r.t_start) + ',' +
           format_number(r.theta0) + ',' + format_number(r.early_min) + '\n';
  }
  io::write_file_atomic(out / "summary.csv", csv);
  log << "simulate: " << rows.size() << " trajectories written to " << c.output_dir << "\n";
  return 0;
}

int cmd_sweep_gap(const ExperimentConfig& c, std::ostream& log) {
  c.validate();
  if (c.m_list.size() < 2) throw ParameterError("sweep-gap needs at least two m values");
  ensure_dir(c.output_dir);
  const fs::path out = c.output_dir;
  const std::size_t ns = c.seeds.size();
  std::vector<RunSummary> runs(c.m_list.size() * ns);
  parallel_for(runs.size(), [&](std::size_t j) {
    runs[j] = run_job(c, c.m_list[j / ns], c.seeds[j % ns], nullptr);
  });

  std::vector<double> ms, means, stds, preds;
  std::string csv = "m,mean,std,theta_inf_prediction\n";
  for (std::size_t i = 0; i < c.m_list.size(); ++i) {
    double mean = 0, sd = 0, pred = 0;
    bool pred_ok = true;
    for (std::size_t s = 0; s < ns; ++s) {
      const auto& r = runs[i * ns + s];
      mean += r.late.mean;
      sd += r.late.std;
      if (r.theta_inf) pred += *r.theta_inf;
      else pred_ok = false;
    }
    mean /= double(ns);
    sd /= double(ns);
    const std::optional<double> p = pred_ok ? std::optional<double>(pred / double(ns)) : std::nullopt;
    csv += tag(c.m_list[i]) + ',' + format_number(mean) + ',' + format_number(sd) + ',' +
           format_number(p) + '\n';
    ms.push_back(c.m_list[i]);
    means.push_back(mean);
    stds.push_back(sd);
    preds.push_back(p.value_or(std::nan("")));
  }
  io::write_file_atomic(out / "alignment_vs_m.csv", csv);

  std::vector<double> logm;
  for (double m : ms) logm.push_back(std::log(m));
  std::string fit_csv = "model,slope,intercept,r2\n";
  try {
    const LineFit f = fit_line(logm, means);
    fit_csv += "mean~log(m)," + format_number(f.slope) + ',' + format_number(f.intercept) + ',' +
               format_number(f.r2) + '\n';
  } catch (const InsufficientDataError&) {
    fit_csv += "mean~log(m),undef,undef,undef\n";
  }
  io::write_file_atomic(out / "alignment_vs_m_fit.csv", fit_csv);

  svg::PlotSpec ps{"late-phase alignment vs gap ratio", "m", "alignment", true, false};
  io::write_file_atomic(out / "alignment_vs_m.svg",
                        svg::line_plot(ps, {{"mean", ms, means},
                                            {"std", ms, stds},
                                            {"theta_inf", ms, preds}}));
  log << "sweep-gap: " << runs.size() << " runs over " << ms.size() << " gap ratios\n";
  return 0;
}

int cmd_drift_test(const ExperimentConfig& c, std::ostream& log) {
  c.validate();
  if (c.theta_targets.empty() || c.eta_factors.empty())
    throw ParameterError("drift-test needs theta targets and eta factors");
  ensure_dir(c.output_dir);
  const std::size_t ns = c.seeds.size(), nt = c.theta_targets.size();
  const std::size_t jobs = c.m_list.size() * ns * nt;
  std::vector<std::vector<io::VerdictRow>> rows(jobs);
  parallel_for(jobs, [&](std::size_t j) {
    const double m = c.m_list[j / (ns * nt)];
    const std::uint64_t seed = c.seeds[(j / nt) % ns];
    const std::string& target = c.theta_targets[j % nt];
    const Setup s = make_setup(c, m, seed);
    const StateD x = state_at_target(target, s.spec, s.noise, s.init);
    const auto dq = drift_quadratic(block_stats(x, s.spec, s.noise));
    // Without a positive eta*, step sizes are taken relative to 1/lambda_1.
    const double ref = dq.eta_star && *dq.eta_star > 0 ? *dq.eta_star : 1.0 / s.spec.lambda_max();
    const std::uint64_t mc_seed = derive_seed(derive_seed(seed, stream::kMonteCarlo), j % nt);
    for (double factor : c.eta_factors) {
      const auto r = drift_sign_test(s.spec, s.noise, x, factor * ref, c.n_mc, c.z_crit, mc_seed,
                                     c.theta_slack);
      const std::string label = "m=" + tag(m) + ";seed=" + std::to_string(seed) +
                                ";target=" + target + ";factor=" + format_number(factor);
      rows[j].push_back({"f_drift;" + label, r.theta, r.eta, r.eta_star, r.f_drift});
      rows[j].push_back({"theta_drift;" + label, r.theta, r.eta, r.eta_star, r.theta_drift});
    }
  });

  std::vector<io::VerdictRow> all;
  int contradicted = 0;
  for (auto& part : rows)
    for (auto& r : part) {
      if (r.verdict.verdict == Verdict::contradicted) ++contradicted;
      all.push_back(std::move(r));
    }
  io::write_file_atomic(fs::path(c.output_dir) / "drift_verdicts.csv", io::verdict_csv(all));
  log << "drift-test: " << all.size() << " verdicts, " << contradicted << " contradicted\n";
  return contradicted > 0 ? 1 : 0;
}

int cmd_projected_test(const ExperimentConfig& c, std::ostream& log) {
  c.validate();
  ensure_dir(c.output_dir);
  const std::size_t ns = c.seeds.size(), nst = std::size_t(c.n_states);
  const std::size_t jobs = c.m_list.size() * ns * nst;

  struct Outcome {
    std::vector<io::VerdictRow> rows;
    std::vector<std::string> detail;
    std::string skipped;
  };
  std::vector<Outcome> outcomes(jobs);
  parallel_for(jobs, [&](std::size_t j) {
    const double m = c.m_list[j / (ns * nst)];
    const std::uint64_t seed = c.seeds[(j / nst) % ns];
    const std::size_t idx = j % nst;
    const Setup s = make_setup(c, m, seed);
    const std::uint64_t state_seed = derive_seed(derive_seed(seed, stream::kStates), idx);
    NormalStream rng(state_seed);
    const double u = rng.uniform(0.1, 0.9);
    StateD x = random_init<double>(c.d, c.init_scale, rng.engine()());
    const std::string label = "m=" + tag(m) + ";seed=" + std::to_string(seed) + ";state=" +
                              std::to_string(idx);
    Outcome& o = outcomes[j];
    x = rescale_dominant_to_alignment(x, s.spec, u * g_gap(s.spec, s.noise));
    const auto st = block_stats(x, s.spec, s.noise);
    if (!(st.sD > 0) || !(st.sB > 0)) {
      o.skipped = label + ": a block has zero gradient energy";
      return;
    }
    const double lD = loss_threshold(st, Block::dominant), lB = loss_threshold(st, Block::bulk);
    if (lD == lB) {
      o.skipped = label + ": equal loss thresholds";
      return;
    }
    const double eta = 0.5 * (lD + lB);
    const double theta_crit = crossover(st).theta_crit;
    const std::uint64_t mc_seed = derive_seed(derive_seed(seed, stream::kMonteCarlo), idx);
    for (Block b : {Block::dominant, Block::bulk}) {
      const auto v = projected_loss_test(s.spec, s.noise, x, eta, b, c.n_mc, c.z_crit, mc_seed);
      const double thr = b == Block::dominant ? lD : lB;
      const std::string name = std::string("loss_") + block_name(b) + "SGD;" + label;
      o.rows.push_back({name, st.theta, eta, thr, v});
      o.detail.push_back(name + ',' + block_name(b) + ',' + format_number(st.theta) + ',' +
                         format_number(theta_crit) + ',' + format_number(eta) + ',' +
                         format_number(thr) + ',' + format_number(v.target) + ',' +
                         format_number(v.estimate.mean) + ',' +
                         format_number(v.estimate.std_error) + ',' +
                         (v.target_ok.value_or(false) ? "yes" : "no") + '\n');
    }
  });

  std::vector<io::VerdictRow> all;
  std::string detail = "test,block,theta,theta_crit,eta,eta_loss,target,mean,stderr,target_ok\n";
  int contradicted = 0, skipped = 0, off_target = 0;
  for (auto& o : outcomes) {
    if (!o.skipped.empty()) {
      log << "projected-test: skipped " << o.skipped << "\n";
      ++skipped;
      continue;
    }
    for (auto& r : o.rows) {
      if (r.verdict.verdict == Verdict::contradicted) ++contradicted;
      if (!r.verdict.target_ok.value_or(false)) ++off_target;
      all.push_back(std::move(r));
    }
    for (auto& d : o.detail) detail += d;
  }
  const fs::path out = c.output_dir;
  io::write_file_atomic(out / "projected_verdicts.csv", io::verdict_csv(all));
  io::write_file_atomic(out / "projected_detail.csv", detail);
  log << "projected-test: " << all.size() << " verdicts, " << contradicted << " contradicted, "
      << off_target << " off target, " << skipped << " skipped\n";
  return contradicted > 0 ? 1 : 0;
}

int cmd_report(const fs::path& spectrum_file, const std::optional<fs::path>& noise_file,
               const fs::path& state_file, std::optional<double> eta, std::ostream& out) {
  const json sj = io::read_json_file(spectrum_file);
  const SpectrumD spec = io::spectrum_from_json(sj);
  const NoiseProfileD noise =
      io::noise_from_json(noise_file ? io::read_json_file(*noise_file) : sj);
  const StateD x = io::read_state(state_file);
  if (eta && !(*eta > 0)) throw ParameterError("eta must be > 0");
  out << to_json(make_report(spec, noise, x, eta)).dump(2) << "\n";
  return 0;
}

}  // namespace alignlab
