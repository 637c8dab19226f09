// Command-line front end for the alignment experiments.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "alignlab/errors.hpp"
#include "alignlab/harness.hpp"
#include "alignlab/io.hpp"

namespace {

using alignlab::ExperimentConfig;

struct Overrides {
  std::string config_path;
  std::optional<std::int64_t> d, k, steps, n_mc, record_every;
  std::vector<double> m_list;
  std::optional<double> eta, sigma2, init_scale, z_crit;
  std::vector<std::uint64_t> seeds;
  std::optional<std::string> out, t_start;
  std::vector<std::string> thetas;
  std::vector<double> eta_factors;
  std::optional<std::int64_t> n_states;
  bool print_config = false;
};

void add_config_options(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
  app->add_option("--d", o.d, "dimension");
  app->add_option("--k", o.k, "dominant block size");
  app->add_option("--m", o.m_list, "gap ratio (repeatable)")->take_all();
  app->add_option("--eta", o.eta, "step size");
  app->add_option("--steps", o.steps, "number of SGD steps T");
  app->add_option("--sigma2", o.sigma2, "isotropic noise variance");
  app->add_option("--init-scale", o.init_scale, "initial coordinate scale");
  app->add_option("--seed,--seeds", o.seeds, "master seed (repeatable)")->take_all();
  app->add_option("--n-mc", o.n_mc, "Monte-Carlo samples per estimate");
  app->add_option("--out", o.out, "output directory");
  app->add_option("--record-every", o.record_every, "trajectory recording stride");
  app->add_option("--t-start", o.t_start, "late-phase window start (step or \"auto\")");
  app->add_option("--z-crit", o.z_crit, "verdict threshold in standard errors");
  app->add_option("--theta", o.thetas, "drift-test target (repeatable)")->take_all();
  app->add_option("--eta-factor", o.eta_factors, "drift-test step factor (repeatable)")
      ->take_all();
  app->add_option("--n-states", o.n_states, "projected-test states per (m, seed)");
  app->add_flag("--print-config", o.print_config, "print the resolved config and exit");
}

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig c;
  if (!o.config_path.empty()) c = alignlab::config_from_json(alignlab::io::read_json_file(o.config_path));
  if (o.d) c.d = *o.d;
  if (o.k) c.k = *o.k;
  if (!o.m_list.empty()) c.m_list = o.m_list;
  if (o.eta) c.eta = *o.eta;
  if (o.steps) c.steps = *o.steps;
  if (o.sigma2) c.sigma2 = *o.sigma2;
  if (o.init_scale) c.init_scale = *o.init_scale;
  if (!o.seeds.empty()) c.seeds = o.seeds;
  if (o.n_mc) c.n_mc = *o.n_mc;
  if (o.out) c.output_dir = *o.out;
  if (o.record_every) c.record_every = *o.record_every;
  if (o.t_start) {
    nlohmann::json j;
    if (*o.t_start == "auto") {
      j["t_start"] = "auto";
    } else {
      try {
        std::size_t used = 0;
        j["t_start"] = std::stoll(*o.t_start, &used);
        if (used != o.t_start->size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw alignlab::ParameterError("--t-start must be an integer or \"auto\"");
      }
    }
    c = alignlab::config_from_json(j, c);
  }
  if (o.z_crit) c.z_crit = *o.z_crit;
  if (!o.thetas.empty()) c.theta_targets = o.thetas;
  if (!o.eta_factors.empty()) c.eta_factors = o.eta_factors;
  if (o.n_states) c.n_states = *o.n_states;
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SGD alignment experiments on quadratic losses"};
  app.require_subcommand(1);

  Overrides o;
  using Command = int (*)(const ExperimentConfig&, std::ostream&);
  struct Sub {
    const char* name;
    const char* help;
    Command fn;
  };
  const Sub subs[] = {
      {"simulate", "run CSGD trajectories for every (m, seed)", alignlab::cmd_simulate},
      {"sweep-gap", "late-phase alignment against the gap ratio", alignlab::cmd_sweep_gap},
      {"drift-test", "Monte-Carlo sign tests of the alignment drift", alignlab::cmd_drift_test},
      {"projected-test", "Monte-Carlo sign tests of block-projected loss change",
       alignlab::cmd_projected_test},
      {"print-config", "print the resolved config", nullptr},
  };
  std::vector<std::pair<CLI::App*, Command>> commands;
  for (const auto& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    add_config_options(sub, o);
    commands.emplace_back(sub, s.fn);
  }

  std::string spectrum_file, state_file;
  std::optional<std::string> noise_file;
  std::optional<double> report_eta;
  CLI::App* report = app.add_subcommand("report", "closed-form theory report as JSON");
  report->add_option("--spectrum", spectrum_file, "spectrum JSON")->required();
  report->add_option("--noise", noise_file, "noise JSON (defaults to the spectrum file)");
  report->add_option("--state", state_file, "state JSON or CSV")->required();
  report->add_option("--eta", report_eta, "step size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (report->parsed()) {
      std::optional<std::filesystem::path> np;
      if (noise_file) np = *noise_file;
      return alignlab::cmd_report(spectrum_file, np, state_file, report_eta, std::cout);
    }
    for (const auto& [sub, fn] : commands) {
      if (!sub->parsed()) continue;
      const ExperimentConfig c = resolve(o);
      if (o.print_config || !fn) {
        std::cout << alignlab::to_json(c).dump(2) << "\n";
        return 0;
      }
      return fn(c, std::cerr);
    }
  } catch (const alignlab::ParseError& e) {
    std::cerr << "error: " << e.what();
    if (e.line() > 0) std::cerr << " (line " << e.line() << ")";
    std::cerr << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
