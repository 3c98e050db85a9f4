#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ofdmest/experiments.hpp"
#include "ofdmest/scenario.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> jobs;
  bool noise_free = false;
};

ofdmest::ScenarioConfig resolve(const Options& opt, std::optional<ofdmest::ExperimentKind> kind) {
  ofdmest::ScenarioConfig cfg = opt.config.empty() ? ofdmest::ScenarioConfig{} : ofdmest::load_scenario(opt.config);
  if (kind) cfg.kind = *kind;
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.out) cfg.output_dir = *opt.out;
  if (opt.jobs) cfg.jobs = *opt.jobs;
  if (opt.noise_free) cfg.noise_free = true;
  cfg.validate();
  return cfg;
}

void print_summary(const ofdmest::Metrics& m, const std::string& dir) {
  for (const auto& r : m.summary) {
    std::printf("%s: trials=%zu true=%zu estimated=%zu assigned=%zu precision=%.4f recall=%.4f iters=%.2f\n",
                r.estimator.c_str(), r.trials, r.true_paths, r.estimated_paths, r.assigned, r.precision, r.recall,
                r.mean_inner_iterations);
  }
  for (const auto& r : m.errors) {
    if (r.statistic != "RMSE") continue;
    std::printf("%s RMSE:", r.estimator.c_str());
    for (std::size_t k = 0; k < r.values.size(); ++k) {
      std::printf(" %s=%.4g", std::string(ofdmest::kErrorColumns[k]).c_str(), r.values[k]);
    }
    std::printf("\n");
  }
  std::printf("outputs written to %s\n", dir.c_str());
}

int run(const Options& opt, ofdmest::ExperimentKind kind) {
  const ofdmest::ScenarioConfig cfg = resolve(opt, kind);
  const ofdmest::RunResult result = ofdmest::run_experiment(cfg);
  ofdmest::write_outputs(result, cfg, cfg.output_dir);
  print_summary(ofdmest::compute_metrics(result), cfg.output_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multipath parameter estimation experiments for uplink OFDM"};
  app.require_subcommand(1);
  Options opt;

  const auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", opt.config, "Scenario JSON file");
    if (config_required) c->required();
    c->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "Override the scenario seed");
    sub->add_option("--out", opt.out, "Output directory");
    sub->add_option("--jobs", opt.jobs, "Worker threads (0: all cores)");
    sub->add_flag("--noise-free", opt.noise_free, "Disable receiver noise");
  };

  auto* single = app.add_subcommand("single", "Estimate one snapshot at the configured UE pose");
  auto* ensemble = app.add_subcommand("ensemble", "Monte Carlo ensemble over random UE poses");
  auto* sequential = app.add_subcommand("sequential", "Sequential MAP vs ML along the trajectory");
  auto* validate = app.add_subcommand("validate-config", "Parse and validate a scenario file");
  add_common(single, false);
  add_common(ensemble, false);
  add_common(sequential, false);
  add_common(validate, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*single) return run(opt, ofdmest::ExperimentKind::single);
    if (*ensemble) return run(opt, ofdmest::ExperimentKind::ensemble);
    if (*sequential) return run(opt, ofdmest::ExperimentKind::sequential);
    const ofdmest::ScenarioConfig cfg = resolve(opt, std::nullopt);
    std::printf("config ok: kind=%s\n", std::string(ofdmest::to_string(cfg.kind)).c_str());
    return 0;
  } catch (const ofdmest::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntimeError;
  }
}
