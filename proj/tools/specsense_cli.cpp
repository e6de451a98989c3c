// specsense command-line entry point: run | analytic | calibrate

#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "CLI11.hpp"
#include "specsense/specsense.hpp"

namespace {

using namespace specsense;

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Errors that belong to the caller's input rather than the computation.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScenarioArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
};

void add_scenario_options(CLI::App* cmd, ScenarioArgs& args) {
  cmd->add_option("--config", args.config, "scenario JSON file");
  cmd->add_option("--set", args.overrides, "override a scenario key, key=value (repeatable)");
  cmd->add_option("--seed", args.seed, "base seed");
  cmd->add_option("--trials", args.trials, "trials per sweep point (H1 and H0 combined)");
}

nlohmann::json load_config(const ScenarioArgs& args) {
  nlohmann::json j = nlohmann::json::object();
  if (!args.config.empty()) {
    try {
      j = load_config_file(args.config);
    } catch (const IoError& e) {
      throw UsageError(e.what());
    }
  }
  try {
    for (const auto& o : args.overrides) apply_override(j, o);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  if (args.seed) j["base_seed"] = *args.seed;
  if (args.trials) j["trials"] = *args.trials;
  return j;
}

Scenario parse_scenario(const nlohmann::json& j, const std::string& origin) {
  try {
    return scenario_from_json(j);
  } catch (const InvalidArgument& e) {
    throw UsageError((origin.empty() ? std::string("scenario") : origin) + ": " + e.what());
  }
}

int cmd_run(const ScenarioArgs& args, const std::string& out_path, const std::string& format_name) {
  const nlohmann::json j = load_config(args);
  const Scenario scenario = parse_scenario(j, args.config);
  SweepGrid grid;
  try {
    if (j.contains("sweep")) grid = sweep_grid_from_json(j["sweep"]);
    expand_grid(scenario, grid);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const ResultsFormat format = parse_results_format(format_name);
  const ResultsTable table = run_sweep(scenario, grid);
  if (out_path.empty() || out_path == "-") {
    std::cout << (format == ResultsFormat::CSV ? to_csv(table) : to_json_text(table));
  } else {
    emit_results(table, format, out_path);
  }
  return 0;
}

int cmd_calibrate(const ScenarioArgs& args) {
  const Scenario scenario = parse_scenario(load_config(args), args.config);
  const DetectionThreshold t = calibrate_threshold(scenario);
  std::cout << "gamma=" << format_double(t.value) << "\n";
  std::cout << "target_pfa=" << format_double(scenario.target_pfa) << "\n";
  std::cout << "calibration_trials=" << scenario.calibration_trials << "\n";
  std::cout << "calibration_seed=" << calibration_seed(scenario) << "\n";
  return 0;
}

struct AnalyticArgs {
  std::optional<double> pd;
  std::optional<double> pfa;
  std::size_t l = 1;
  std::optional<double> snr_db;
  std::size_t n_k = 1;
  std::size_t clusters = 1;
  std::size_t samples = 1000;
  std::string curve = "energy";
};

// Energy detector over `samples` complex samples, Gaussian approximation,
// statistic normalized by the noise variance.
double energy_threshold(double pfa, std::size_t samples) {
  const boost::math::normal_distribution<double> z;
  return 1.0 + boost::math::quantile(boost::math::complement(z, pfa)) / std::sqrt(static_cast<double>(samples));
}

double energy_pd(double snr, double lambda, std::size_t samples) {
  const boost::math::normal_distribution<double> z;
  const double mean = 1.0 + snr;
  return boost::math::cdf(boost::math::complement(z, (lambda - mean) * std::sqrt(static_cast<double>(samples)) / mean));
}

int cmd_analytic(const AnalyticArgs& a) {
  auto line = [](const char* key, double v) { std::cout << key << "=" << format_double(v) << "\n"; };
  if (!a.pd && !a.pfa) throw UsageError("analytic: give --pd and/or --pfa");
  if (a.pd) line("Cd", coop_pd(*a.pd, a.l));
  if (a.pfa) line("Cfa", coop_pfa(*a.pfa, a.l));
  if (!a.snr_db) return 0;

  const double gamma_bar = db_to_linear(*a.snr_db);
  std::function<double(double)> pd_curve;
  std::function<double(double)> pfa_curve;
  if (a.curve == "constant") {
    if (a.pd) pd_curve = [p = *a.pd](double) { return p; };
    if (a.pfa) pfa_curve = [p = *a.pfa](double) { return p; };
  } else if (a.curve == "energy") {
    if (!a.pfa) throw UsageError("analytic: the energy curve needs --pfa");
    const double lambda = energy_threshold(*a.pfa, a.samples);
    pd_curve = [lambda, n = a.samples](double g) { return energy_pd(g, lambda, n); };
    pfa_curve = [p = *a.pfa](double) { return p; };
  } else {
    throw UsageError("analytic: unknown curve '" + a.curve + "'");
  }
  line("gamma_bar", gamma_bar);
  std::cout << "n_k=" << a.n_k << "\nclusters=" << a.clusters << "\n";
  if (pd_curve) {
    const double q = cluster_coop_prob(pd_curve, gamma_bar, a.n_k);
    line("Qd_k", q);
    line("Qd", global_coop_prob(std::vector<double>(a.clusters, q)));
  }
  if (pfa_curve) {
    const double q = cluster_coop_prob(pfa_curve, gamma_bar, a.n_k);
    line("Qfa_k", q);
    line("Qfa", global_coop_prob(std::vector<double>(a.clusters, q)));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cluster-based cooperative compressive spectrum sensing simulator"};
  app.require_subcommand(1);

  ScenarioArgs run_args;
  std::string out_path;
  std::string format = "csv";
  auto* run = app.add_subcommand("run", "run a scenario or sweep and emit a results table");
  add_scenario_options(run, run_args);
  run->add_option("--out", out_path, "results file (stdout when omitted)");
  run->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  AnalyticArgs an;
  auto* analytic = app.add_subcommand("analytic", "evaluate cooperative detection closed forms");
  analytic->add_option("--pd", an.pd, "per-SU detection probability");
  analytic->add_option("--pfa", an.pfa, "per-SU false-alarm probability");
  analytic->add_option("--l", an.l, "number of cooperating SUs")->check(CLI::PositiveNumber);
  analytic->add_option("--snr-db", an.snr_db, "mean SNR for the cluster integrals");
  analytic->add_option("--nk", an.n_k, "SUs per cluster")->check(CLI::PositiveNumber);
  analytic->add_option("--clusters", an.clusters, "number of clusters")->check(CLI::PositiveNumber);
  analytic->add_option("--samples", an.samples, "samples per energy measurement")->check(CLI::PositiveNumber);
  analytic->add_option("--curve", an.curve, "per-SU curve: energy or constant");

  ScenarioArgs cal_args;
  auto* calibrate = app.add_subcommand("calibrate", "calibrate the detection threshold and print it");
  add_scenario_options(calibrate, cal_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*run) return cmd_run(run_args, out_path, format);
    if (*analytic) return cmd_analytic(an);
    if (*calibrate) return cmd_calibrate(cal_args);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
