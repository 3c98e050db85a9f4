#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "ofdmest/experiments.hpp"
#include "ofdmest/scenario.hpp"

using namespace ofdmest;
using nlohmann::json;

namespace {

ScenarioConfig quick_config() {
  ScenarioConfig cfg;
  cfg.system.n_subcarriers = 12;
  cfg.system.n_symbols = 12;
  cfg.system.n_rx = 8;
  cfg.optimizer.max_paths = 3;
  cfg.optimizer.max_iterations = 15;
  cfg.jobs = 2;
  return cfg;
}

std::string config_error(const json& j) {
  try {
    scenario_from_json(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("scenario JSON round trip") {
  ScenarioConfig cfg;
  cfg.kind = ExperimentKind::sequential;
  cfg.system.n_rx = 8;
  cfg.optimizer.eps_paths = 0.25;
  cfg.trajectory.rounds = 10;
  cfg.trajectory.waypoints = {{1, 2}, {3, 4}};
  cfg.seed = 123456789012345ULL;
  cfg.noise_free = true;
  const ScenarioConfig back = scenario_from_json(scenario_to_json(cfg));
  CHECK(scenario_to_json(back) == scenario_to_json(cfg));
  CHECK(back.kind == ExperimentKind::sequential);
  CHECK(back.seed == cfg.seed);
  CHECK(back.trajectory.waypoints.size() == 2);
}

TEST_CASE("config errors name the offending field") {
  CHECK(starts_with(config_error({{"kind", "bogus"}}), "kind"));
  CHECK(starts_with(config_error({{"system", {{"n_rx", -3}}}}), "system.n_rx"));
  CHECK(starts_with(config_error({{"system", {{"n_rx", 0}}}}), "system.n_rx"));
  CHECK(starts_with(config_error({{"system", {{"noise_var", "loud"}}}}), "system.noise_var"));
  CHECK(starts_with(config_error({{"optimizer", {{"max_paths", 0}}}}), "optimizer.max_paths"));
  CHECK(starts_with(config_error({{"ensemble_size", 0}}), "ensemble_size"));
  CHECK(starts_with(config_error({{"trajectory", {{"rounds", 0}}}}), "trajectory.rounds"));
  CHECK(starts_with(config_error({{"trajectory", {{"waypoints", json::array()}}}}), "trajectory.waypoints"));
  CHECK(starts_with(config_error({{"environment", "/nonexistent/room.json"}}), "environment"));
  CHECK(starts_with(config_error({{"colour", "blue"}}), "colour: unknown field"));
  CHECK(starts_with(config_error({{"system", {{"n_rxx", 4}}}}), "system.n_rxx: unknown field"));
  CHECK(config_error(json::object()).empty());
  CHECK_THROWS_AS(load_scenario("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("trajectory") {
  Trajectory t;
  t.waypoints = {{0, 0}, {3, 0}, {3, 4}};
  t.duration = 7.0;
  t.rounds = 7;
  CHECK(t.length() == doctest::Approx(7.0));
  CHECK(t.round_time(2) == doctest::Approx(2.0));
  CHECK(t.pose_at(0.0).position == Vec2{0, 0});
  CHECK(t.pose_at(2.0).position.x == doctest::Approx(2.0));
  CHECK(t.pose_at(5.0).position.y == doctest::Approx(2.0));
  CHECK(t.pose_at(7.0).position.y == doctest::Approx(4.0));
  CHECK(t.velocity_at(1.0) == Vec2{1, 0});
  CHECK(t.velocity_at(4.5) == Vec2{0, 1});
  Trajectory still;
  still.waypoints = {{5, 5}};
  CHECK(still.velocity_at(1.0) == Vec2{0, 0});
}

TEST_CASE("seed mixing") {
  CHECK(mix_seed(1, 2) == mix_seed(1, 2));
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
  CHECK(mix_seed(0, 0) != 0);
}

TEST_CASE("ensemble poses") {
  const Environment env = default_environment();
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Pose p = ensemble_pose(env, s);
    CHECK(p.position.x >= 1.0);
    CHECK(p.position.x <= 19.0);
    CHECK(p.position.y >= 1.0);
    CHECK(p.position.y <= 19.0);
    const Vec2 to_bs = env.bs.position - p.position;
    CHECK(std::fabs(phase_diff(p.orientation, std::atan2(to_bs.y, to_bs.x))) <= kPi / 2);
  }
}

TEST_CASE("metrics text round trip") {
  Metrics m;
  m.kind = "sequential";
  m.summary.push_back({"MAP", 10, 25, 24, 24, 1.0, 0.96, 7.123456789012345});
  m.summary.push_back({"ML", 10, 25, 26, 24, 24.0 / 26.0, 0.96, 9.5});
  m.errors.push_back({"MAP", "MSE", {1e-7, 0.1, 0.01, 0.02, 1e-6, 3e-5}});
  m.errors.push_back({"MAP", "RMSE", {std::sqrt(1e-7), std::sqrt(0.1), 0.1, std::sqrt(0.02), 1e-3, std::sqrt(3e-5)}});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  m.errors.push_back({"ML", "MSE", {nan, nan, nan, nan, nan, nan}});
  const std::string text = format_metrics(m);
  const Metrics back = parse_metrics(text);
  CHECK(format_metrics(back) == text);
  CHECK(back.kind == "sequential");
  REQUIRE(back.summary.size() == 2);
  CHECK(back.summary[0].mean_inner_iterations == m.summary[0].mean_inner_iterations);
  CHECK(back.summary[1].precision == m.summary[1].precision);
  REQUIRE(back.errors.size() == 3);
  CHECK(back.errors[1].values[1] == m.errors[1].values[1]);
  CHECK(std::isnan(back.errors[2].values[0]));

  CHECK_THROWS(parse_metrics("# ofdmest-metrics v2 kind=single\n"));
  CHECK_THROWS(parse_metrics("garbage"));
}

TEST_CASE("ensemble runs are deterministic and merge associatively") {
  ScenarioConfig cfg = quick_config();
  cfg.kind = ExperimentKind::ensemble;
  cfg.ensemble_size = 4;
  const RunResult whole = run_ensemble(cfg);
  const std::string text = format_metrics(compute_metrics(whole));

  cfg.jobs = 1;
  CHECK(format_metrics(compute_metrics(run_ensemble(cfg))) == text);

  ScenarioConfig first = cfg;
  first.ensemble_size = 1;
  ScenarioConfig rest = cfg;
  rest.first_trial = 1;
  rest.ensemble_size = 3;
  const RunResult a = run_ensemble(first);
  const RunResult b = run_ensemble(rest);
  CHECK(format_metrics(compute_metrics(merge_runs(b, a))) == text);
  CHECK(format_metrics(compute_metrics(merge_runs(a, b))) == text);
  CHECK(trials_json(merge_runs(b, a)) == trials_json(whole));

  const Metrics single = compute_metrics(a);
  REQUIRE(single.summary.size() == 1);
  CHECK(single.summary[0].trials == 1);
  const Summary s = summarize(a.tracks[0].trials);
  CHECK(single.summary[0].precision == s.precision);
  CHECK(single.summary[0].recall == s.recall);
}

TEST_CASE("noise-free single run on the default room") {
  ScenarioConfig cfg = quick_config();
  cfg.noise_free = true;
  cfg.system = SystemConfig{};
  cfg.optimizer = OptimizerConfig{};
  const RunResult run = run_single(cfg);
  REQUIRE(run.tracks.size() == 1);
  const Summary s = summarize(run.tracks[0].trials);
  CHECK(s.true_paths > 0);
  CHECK(s.precision == 1.0);
  CHECK(s.recall == 1.0);
}

TEST_CASE("sequential runs") {
  ScenarioConfig cfg = quick_config();
  cfg.kind = ExperimentKind::sequential;
  cfg.trajectory.rounds = 1;
  const RunResult one = run_sequential(cfg);
  REQUIRE(one.tracks.size() == 2);
  CHECK(one.tracks[0].estimator == "MAP");
  CHECK(one.tracks[1].estimator == "ML");
  const auto& map = one.tracks[0].trials[0].estimate;
  const auto& ml = one.tracks[1].trials[0].estimate;
  CHECK(map.num_paths == ml.num_paths);
  for (std::size_t l = 0; l < map.params.size(); ++l) CHECK(map.params[l].b == ml.params[l].b);
  CHECK(map.objective_trace == ml.objective_trace);

  // Standing still: omega2 of every detection is the carrier offset phase step.
  cfg.trajectory.rounds = 2;
  cfg.trajectory.waypoints = {{10, 10}};
  cfg.noise_free = true;
  cfg.system = SystemConfig{};
  cfg.optimizer.max_iterations = 5000;
  cfg.optimizer.eps_var = 1e-12;
  cfg.optimizer.eps_obj = 1e-15;
  const RunResult still = run_sequential(cfg);
  const double expected = wrap_phase(2 * kPi * cfg.offsets.f_o * cfg.system.symbol_time);
  std::size_t seen = 0;
  for (const auto& track : still.tracks) {
    for (const auto& t : track.trials) {
      for (const auto& a : t.match.assignments) {
        CHECK(std::fabs(phase_diff(t.estimate.params[a.estimate].omega2, expected)) < 1e-3);
        ++seen;
      }
    }
  }
  CHECK(seen > 0);
}

TEST_CASE("output files") {
  ScenarioConfig cfg = quick_config();
  cfg.kind = ExperimentKind::ensemble;
  cfg.ensemble_size = 2;
  const auto dir = std::filesystem::temp_directory_path() / "ofdmest_test_outputs";
  std::filesystem::remove_all(dir);
  const RunResult run = run_experiment(cfg);
  write_outputs(run, cfg, dir);
  for (const char* name : {"metrics.csv", "trials.json", "reflectors.csv", "trace.csv"}) {
    CHECK(std::filesystem::exists(dir / name));
  }
  const Metrics m = parse_metrics(slurp(dir / "metrics.csv"));
  CHECK(m.kind == "ensemble");
  const json trials = json::parse(slurp(dir / "trials.json"));
  CHECK(trials["kind"] == "ensemble");
  CHECK(slurp(dir / "trace.csv").rfind("estimator,index,step,objective", 0) == 0);
  CHECK(slurp(dir / "reflectors.csv").rfind("estimator,index,path,status,x,y,true_x,true_y", 0) == 0);
  std::filesystem::remove_all(dir);
}
