#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "phasegn/bench.hpp"
#include "phasegn/measure.hpp"

namespace {

using phasegn::bench::Experiment;
using phasegn::bench::ExperimentConfig;

struct CommonOptions {
  std::optional<long> n;
  std::optional<std::string> grid;
  std::optional<int> trials;
  std::optional<double> sigma;
  std::optional<std::string> field;
  std::optional<std::string> ensemble;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> methods;
  std::string out = "results";
  bool svg = false;
  int threads = 0;
  std::optional<double> threshold;
};

void add_common(CLI::App& cmd, CommonOptions& o) {
  cmd.add_option("--n", o.n, "signal length");
  cmd.add_option("--m-over-n", o.grid, "sampling-ratio grid, start:stop:step or a value");
  cmd.add_option("--trials", o.trials, "trials per grid point");
  cmd.add_option("--sigma", o.sigma, "noise standard deviation");
  cmd.add_option("--field", o.field, "signal field: real or complex");
  cmd.add_option("--ensemble", o.ensemble, "sensing ensemble field (default complex)");
  cmd.add_option("--seed", o.seed, "base seed; trial t uses seed + t");
  cmd.add_option("--methods", o.methods, "comma-separated method list");
  cmd.add_option("--out", o.out, "output directory");
  cmd.add_flag("--svg", o.svg, "also write an SVG chart");
  cmd.add_option("--threads", o.threads, "worker threads (0: all cores)");
  cmd.add_option("--success-threshold", o.threshold,
                 "override the 1e-5 success threshold (stamped in the manifest)");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

ExperimentConfig build_config(Experiment experiment, const CommonOptions& o) {
  ExperimentConfig c = ExperimentConfig::defaults(experiment);
  if (o.n) {
    if (*o.n < 1) throw phasegn::ConfigError("--n must be >= 1");
    c.n = *o.n;
  }
  if (o.grid) c.m_over_n = phasegn::bench::GridSpec::parse(*o.grid);
  if (o.trials) c.trials = *o.trials;
  if (o.sigma) c.noise_sigma = *o.sigma;
  if (o.field) c.signal_field = phasegn::parse_field(*o.field);
  if (o.ensemble) c.ensemble_field = phasegn::parse_field(*o.ensemble);
  if (o.seed) c.seed = *o.seed;
  if (o.methods) c.methods = split_list(*o.methods);
  c.out_dir = o.out;
  c.emit_svg = o.svg;
  c.threads = o.threads;
  if (o.threshold) {
    c.success_threshold = *o.threshold;
    c.threshold_overridden = true;
  }
  c.validate();
  return c;
}

int run_bench(Experiment experiment, const CommonOptions& o) {
  const ExperimentConfig config = build_config(experiment, o);
  const auto t0 = std::chrono::steady_clock::now();
  const auto output = phasegn::bench::run_experiment(config);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto files = phasegn::bench::write_outputs(config, output, wall);
  std::cout << "wrote " << files.results.string() << " (" << output.rows.size()
            << " rows)";
  if (files.svg) std::cout << ", " << files.svg->string();
  std::cout << ", " << files.manifest.string() << '\n';
  return 0;
}

int run_export(const CommonOptions& o) {
  const double ratio =
      o.grid ? phasegn::bench::GridSpec::parse(*o.grid).start : 5.0;
  const long n = o.n.value_or(128);
  if (n < 1 || !(ratio > 0.0)) throw phasegn::ConfigError("need n >= 1 and m/n > 0");
  const auto m = static_cast<phasegn::Index>(std::llround(ratio * static_cast<double>(n)));
  if (m < 1) throw phasegn::ConfigError("m/n gives m < 1");
  const auto signal_field = phasegn::parse_field(o.field.value_or("real"));
  const auto ensemble_field = phasegn::parse_field(o.ensemble.value_or("complex"));
  const std::uint64_t seed = o.seed.value_or(7);
  phasegn::ProblemInstance inst;
  inst.ensemble = phasegn::sample_ensemble(m, n, ensemble_field, seed);
  inst.truth = phasegn::sample_signal(n, signal_field, seed);
  inst.observations =
      phasegn::observe(inst.ensemble, *inst.truth, o.sigma.value_or(0.0), seed);
  phasegn::write_instance(o.out, inst);
  std::cout << "wrote instance m=" << m << " n=" << n << " to " << o.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phase retrieval benchmarks"};
  app.require_subcommand(1);
  const std::vector<std::pair<Experiment, std::string>> experiments = {
      {Experiment::InitBench, "initializer relative error vs m/n"},
      {Experiment::Converge, "relative error vs iteration, noisy data"},
      {Experiment::Timing, "iterations and wall time to the success threshold"},
      {Experiment::Success, "success rate vs m/n"},
  };
  std::vector<CommonOptions> options(experiments.size() + 1);
  std::vector<CLI::App*> commands;
  for (std::size_t i = 0; i < experiments.size(); ++i) {
    auto* cmd = app.add_subcommand(
        std::string(phasegn::bench::to_string(experiments[i].first)),
        experiments[i].second);
    add_common(*cmd, options[i]);
    commands.push_back(cmd);
  }
  auto* exporter = app.add_subcommand(
      "export", "write one sampled instance (A.bin, y.bin, z.bin, meta.json)");
  add_common(*exporter, options.back());

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (exporter->parsed()) return run_export(options.back());
    for (std::size_t i = 0; i < experiments.size(); ++i) {
      if (commands[i]->parsed()) return run_bench(experiments[i].first, options[i]);
    }
  } catch (const phasegn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const phasegn::FieldMismatch& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
