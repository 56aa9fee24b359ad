// Command-line front end: simulate, estimate, attack, run, observability.
//
// Exit codes: 0 ok, 2 bad configuration or arguments, 3 unobservable model,
// 4 numerical failure.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "dsie/config.hpp"
#include "dsie/harness.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitUnobservable = 3;
constexpr int kExitNumerical = 4;

struct Options {
  std::string config;
  std::string preset = "potsdam13";
  std::optional<std::uint64_t> seed;
  std::string estimators = "sie,dsie,wls,tse";
  std::string out;
  double alpha = 0.01;
  bool no_attack = false;
  bool noiseless = false;
};

dsie::Preset load_problem(const Options& opt) {
  return opt.config.empty() ? dsie::builtin_preset(opt.preset) : dsie::load_config(opt.config);
}

dsie::ExperimentConfig experiment(const Options& opt) {
  dsie::ExperimentConfig cfg;
  cfg.problem = load_problem(opt);
  cfg.estimators = dsie::parse_estimator_list(opt.estimators);
  cfg.seed = opt.seed;
  cfg.alpha = opt.alpha;
  cfg.output_dir = opt.out;
  if (opt.noiseless) cfg.process_noise = cfg.measurement_noise = false;
  return cfg;
}

void print_summary(const dsie::ExperimentResult& r) {
  std::cout << "region: " << r.region_note << " (" << r.reported_buses.size() << " buses scored)\n";
  std::cout << std::left << std::setw(8) << "est" << std::setw(14) << "mean_mse" << std::setw(14)
            << "max_mse" << std::setw(8) << "flags" << std::setw(14) << "false_alarms"
            << "latency\n";
  for (const dsie::EstimatorSummary& s : r.summary) {
    std::cout << std::setw(8) << dsie::estimator_name(s.kind) << std::setw(14) << s.mean_mse
              << std::setw(14) << s.max_mse << std::setw(8) << s.flags << std::setw(14)
              << s.false_alarms;
    if (s.detection_latency) std::cout << *s.detection_latency;
    else std::cout << "-";
    std::cout << '\n';
  }
  if (r.comparison) {
    std::cout << "post-event peak MSE (window " << r.comparison->window << " steps), ranked:\n";
    for (const dsie::ComparisonEntry& e : r.comparison->entries)
      std::cout << "  " << std::setw(6) << dsie::estimator_name(e.kind) << std::setw(14)
                << e.mean_post_event_peak << "x" << e.peak_ratio << " of "
                << dsie::estimator_name(r.comparison->reference) << ", quiet mean "
                << e.quiet_mean_mse << '\n';
  }
}

int cmd_simulate(const Options& opt) {
  dsie::ExperimentConfig cfg = experiment(opt);
  cfg.estimators = {dsie::EstimatorKind::kWls};
  cfg.apply_attack = false;
  cfg.output_dir.clear();
  const dsie::ExperimentResult r = dsie::run_experiment(cfg);
  if (opt.out.empty()) {
    dsie::write_measurements_csv(r.frames, cfg.problem.topology, cfg.problem.layout,
                                 cfg.problem.scenario, std::cout);
    return 0;
  }
  std::filesystem::create_directories(opt.out);
  std::ofstream truth(std::filesystem::path(opt.out) / "truth.csv");
  dsie::write_truth_csv(r, cfg.problem.topology, truth);
  std::ofstream meas(std::filesystem::path(opt.out) / "measurements.csv");
  dsie::write_measurements_csv(r.frames, cfg.problem.topology, cfg.problem.layout,
                               cfg.problem.scenario, meas);
  std::cout << "wrote " << r.truth.num_samples() << " samples to " << opt.out << '\n';
  return 0;
}

int cmd_run(const Options& opt, bool attack) {
  dsie::ExperimentConfig cfg = experiment(opt);
  cfg.apply_attack = attack;
  if (attack && !cfg.problem.attack) throw dsie::ConfigError("the problem defines no attack");
  const dsie::ExperimentResult r = dsie::run_experiment(cfg);
  if (r.attack && !opt.out.empty()) {
    std::ofstream f(std::filesystem::path(opt.out) / "attack.csv");
    f << std::setprecision(17) << dsie::kCsvSchema << "\nkind,element,a_d,a_q\n";
    for (std::size_t i = 0; i < r.attack->branches.size(); ++i)
      f << "current," << cfg.problem.topology.branches[r.attack->branches[i]].name << ','
        << r.attack->a(i).real() << ',' << r.attack->a(i).imag() << '\n';
    for (std::size_t i = 0; i < r.attack->voltage_buses.size(); ++i)
      f << "voltage," << cfg.problem.topology.buses[r.attack->voltage_buses[i]].id << ','
        << r.attack->voltage_bias(i).real() << ',' << r.attack->voltage_bias(i).imag() << '\n';
  }
  print_summary(r);
  return 0;
}

void print_report(const std::string& name, const dsie::ObservabilityReport& rep) {
  std::cout << std::left << std::setw(10) << name << " rank " << rep.rank << " / " << rep.required
            << (rep.observable ? "  observable" : "  UNOBSERVABLE") << "  (" << rep.state_measurement_rows
            << " current rows, " << rep.input_measurement_rows << " voltage rows)\n";
}

int cmd_observability(const Options& opt) {
  const dsie::Preset p = load_problem(opt);
  const dsie::DiscreteModel full =
      dsie::assemble_model(p.topology, p.layout, p.noise, p.bases, p.scenario.dt_s);
  const dsie::ObservabilityReport rep = dsie::check_observability(full);
  print_report("network", rep);
  if (!rep.note.empty()) std::cout << "note: " << rep.note << '\n';
  if (!p.areas.empty()) {
    const dsie::PartitionResult parts =
        dsie::partition(p.topology, p.layout, p.areas, p.noise, p.bases, p.scenario.dt_s);
    for (std::size_t a = 0; a < parts.locals.size(); ++a)
      print_report(parts.partition.areas[a].name, parts.locals[a].observability);
  }
  return rep.observable ? 0 : kExitUnobservable;
}

int cmd_export(const Options& opt) {
  const std::string text = dsie::dump_config(load_problem(opt));
  if (opt.out.empty()) {
    std::cout << text << '\n';
  } else {
    std::ofstream f(opt.out);
    f << text << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint state and input estimation for branch-current network models"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub, bool with_estimators) {
    auto* cfg = sub->add_option("--config", opt.config, "JSON problem file")->check(CLI::ExistingFile);
    sub->add_option("--preset", opt.preset, "built-in problem")->excludes(cfg);
    sub->add_option("--seed", opt.seed, "noise seed");
    sub->add_option("--out", opt.out, "output directory");
    sub->add_flag("--noiseless", opt.noiseless, "simulate without process or measurement noise");
    if (with_estimators) {
      sub->add_option("--estimators", opt.estimators, "comma separated: sie,dsie,wls,tse");
      sub->add_option("--alpha", opt.alpha, "false-alarm probability of the detectors");
    }
  };

  auto* simulate = app.add_subcommand("simulate", "write truth and measurement CSVs");
  add_common(simulate, false);
  auto* estimate = app.add_subcommand("estimate", "run estimators on the clean stream");
  add_common(estimate, true);
  auto* attack = app.add_subcommand("attack", "run estimators on the attacked stream");
  add_common(attack, true);
  auto* run = app.add_subcommand("run", "full pipeline, attack included when configured");
  add_common(run, true);
  run->add_flag("--no-attack", opt.no_attack, "ignore the configured attack");
  auto* observability = app.add_subcommand("observability", "rank report for network and areas");
  add_common(observability, false);
  auto* exporter = app.add_subcommand("export-config", "print the problem as a JSON config");
  add_common(exporter, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*simulate) return cmd_simulate(opt);
    if (*estimate) return cmd_run(opt, false);
    if (*attack) return cmd_run(opt, true);
    if (*run) return cmd_run(opt, !opt.no_attack);
    if (*observability) return cmd_observability(opt);
    if (*exporter) return cmd_export(opt);
  } catch (const dsie::UnobservableError& e) {
    std::cerr << "unobservable: " << e.what() << " (rank " << e.report().rank << " of "
              << e.report().required << ")\n";
    return kExitUnobservable;
  } catch (const dsie::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const dsie::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
