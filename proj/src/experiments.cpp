#include "ofdmest/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace ofdmest {

namespace {

using nlohmann::json;

constexpr std::uint64_t kNoiseStream = 0;
constexpr std::uint64_t kPoseStream = 1;
constexpr std::uint64_t kPhaseStream = 16;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the lowest-index failure.
template <class Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, n);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_at = n;
  std::exception_ptr failure;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (i < failed_at) {
            failed_at = i;
            failure = std::current_exception();
          }
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::uint64_t phase_seed(std::uint64_t base, const GeomPath& g) {
  return mix_seed(base, kPhaseStream + static_cast<std::uint64_t>(g.wall + 1));
}

Environment with_ue(const Environment& env, const Pose& ue, Vec2 velocity) {
  Environment e = env;
  e.ue = ue;
  e.ue_velocity = velocity;
  return e;
}

ParamVector ground_truth(const std::vector<GeomPath>& geometry, const ScenarioConfig& cfg,
                         std::uint64_t phase_base) {
  ParamVector truth;
  truth.reserve(geometry.size());
  for (const auto& g : geometry) truth.push_back(path_to_params(g, cfg.offsets, cfg.system, phase_seed(phase_base, g)));
  return truth;
}

NoiseMode noise_mode(const ScenarioConfig& cfg) { return cfg.noise_free ? NoiseMode::disabled : NoiseMode::enabled; }

json vec_json(Vec2 v) { return json::array({v.x, v.y}); }

json params_json(const PathParams& p) {
  return {{"b", json::array({p.b.real(), p.b.imag()})},
          {"omega1", p.omega1},
          {"omega2", p.omega2},
          {"phi", p.phi},
          {"theta", p.theta}};
}

json trial_json(const TrialRecord& t) {
  json truth = json::array();
  for (std::size_t i = 0; i < t.truth.size(); ++i) {
    json p = params_json(t.truth[i]);
    const GeomPath& g = t.geometry[i];
    p["los"] = g.is_los;
    p["wall"] = g.wall;
    p["distance"] = g.distance;
    p["reflection_point"] = g.reflection_point ? vec_json(*g.reflection_point) : json(nullptr);
    truth.push_back(p);
  }
  json est = json::array();
  for (std::size_t l = 0; l < t.estimate.num_paths; ++l) est.push_back(params_json(t.estimate.params[l]));
  json terminations = json::array();
  for (const auto r : t.estimate.terminations) terminations.push_back(std::string(to_string(r)));
  json assignments = json::array();
  for (const auto& a : t.match.assignments) {
    assignments.push_back({{"truth", a.truth}, {"estimate", a.estimate}, {"distance", a.distance}});
  }
  return {{"index", t.index},
          {"seed", t.seed},
          {"ue", {{"position", vec_json(t.ue.position)}, {"orientation", t.ue.orientation}}},
          {"ue_velocity", vec_json(t.ue_velocity)},
          {"truth", truth},
          {"estimate",
           {{"num_paths", t.estimate.num_paths},
            {"params", est},
            {"iterations_per_path", t.estimate.iterations_per_path},
            {"terminations", terminations},
            {"final_objective", t.estimate.objective_trace.empty() ? json(nullptr)
                                                                     : json(t.estimate.objective_trace.back())}}},
          {"match",
           {{"assignments", assignments},
            {"misdetections", t.match.misdetections},
            {"misses", t.match.misses},
            {"precision", t.match.precision},
            {"recall", t.match.recall}}}};
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::runtime_error("metrics: malformed number '" + s + "'");
  return v;
}

std::size_t parse_count(const std::string& s) {
  std::size_t used = 0;
  const unsigned long long v = std::stoull(s, &used);
  if (used != s.size()) throw std::runtime_error("metrics: malformed count '" + s + "'");
  return static_cast<std::size_t>(v);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

constexpr std::string_view kSummaryHeader =
    "estimator,trials,true_paths,estimated_paths,assigned,precision,recall,mean_inner_iterations";

std::string error_header() {
  std::string h = "estimator,statistic";
  for (const auto c : kErrorColumns) h += "," + std::string(c);
  return h;
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t seed, std::size_t index) { return mix_seed(seed, index); }

Pose ensemble_pose(const Environment& env, std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, kPoseStream));
  std::uniform_real_distribution<double> coord(1.0, 19.0);
  std::uniform_real_distribution<double> turn(-kPi / 2, kPi / 2);
  Pose ue;
  ue.position.x = coord(rng);
  ue.position.y = coord(rng);
  const Vec2 to_bs = env.bs.position - ue.position;
  ue.orientation = wrap_phase(std::atan2(to_bs.y, to_bs.x) + turn(rng));
  return ue;
}

TrialRecord run_trial(const ScenarioConfig& cfg, const Pose& ue, Vec2 ue_velocity, std::size_t index,
                      std::uint64_t seed) {
  TrialRecord rec;
  rec.index = index;
  rec.seed = seed;
  rec.ue = ue;
  rec.ue_velocity = ue_velocity;
  rec.geometry = trace_paths(with_ue(cfg.environment, ue, ue_velocity), cfg.system.carrier_freq);
  rec.truth = ground_truth(rec.geometry, cfg, seed);
  const PilotTensor pilots = sweep_precoder_pilots(cfg.system);
  const ReceivedTensor y =
      synthesize_received(rec.truth, pilots, cfg.system, mix_seed(seed, kNoiseStream), noise_mode(cfg));
  rec.estimate = estimate_params(y, pilots, cfg.system, cfg.optimizer);
  rec.match = greedy_match(rec.truth, rec.estimate.params, cfg.gate);
  return rec;
}

Summary summarize(const std::vector<TrialRecord>& trials) {
  Summary s;
  std::size_t visits = 0;
  std::size_t iterations = 0;
  for (const auto& t : trials) {
    ++s.trials;
    s.assigned += t.match.assignments.size();
    s.true_paths += t.match.assignments.size() + t.match.misses.size();
    s.estimated_paths += t.match.assignments.size() + t.match.misdetections.size();
    for (const auto it : t.estimate.iterations_per_path) iterations += it;
    visits += t.estimate.iterations_per_path.size();
    s.errors.add(t.match, t.truth, t.estimate.params);
  }
  s.precision = s.estimated_paths > 0 ? static_cast<double>(s.assigned) / static_cast<double>(s.estimated_paths) : 1.0;
  s.recall = s.true_paths > 0 ? static_cast<double>(s.assigned) / static_cast<double>(s.true_paths) : 1.0;
  s.mean_inner_iterations = visits > 0 ? static_cast<double>(iterations) / static_cast<double>(visits) : 0.0;
  return s;
}

RunResult run_single(const ScenarioConfig& cfg) {
  cfg.validate();
  RunResult run{ExperimentKind::single, {{"ML", {}}}};
  const std::uint64_t seed = trial_seed(cfg.seed, 0);
  run.tracks[0].trials.push_back(run_trial(cfg, cfg.environment.ue, cfg.environment.ue_velocity, 0, seed));
  return run;
}

RunResult run_ensemble(const ScenarioConfig& cfg) {
  cfg.validate();
  RunResult run{ExperimentKind::ensemble, {{"ML", {}}}};
  auto& trials = run.tracks[0].trials;
  trials.resize(cfg.ensemble_size);
  parallel_for(cfg.ensemble_size, cfg.jobs, [&](std::size_t i) {
    const std::size_t index = cfg.first_trial + i;
    const std::uint64_t seed = trial_seed(cfg.seed, index);
    trials[i] = run_trial(cfg, ensemble_pose(cfg.environment, seed), cfg.environment.ue_velocity, index, seed);
  });
  return run;
}

RunResult run_sequential(const ScenarioConfig& cfg) {
  cfg.validate();
  const std::size_t rounds = cfg.trajectory.rounds;
  const PilotTensor pilots = sweep_precoder_pilots(cfg.system);

  std::vector<TrialRecord> base(rounds);
  std::vector<Observation> observations(rounds);
  for (std::size_t r = 0; r < rounds; ++r) {
    TrialRecord& rec = base[r];
    const double at = cfg.trajectory.round_time(r);
    rec.index = r;
    rec.seed = trial_seed(cfg.seed, r);
    rec.ue = cfg.trajectory.pose_at(at);
    rec.ue_velocity = cfg.trajectory.velocity_at(at);
    rec.geometry = trace_paths(with_ue(cfg.environment, rec.ue, rec.ue_velocity), cfg.system.carrier_freq);
    // Gain phases follow the reflecting wall, so a path keeps its phase across rounds.
    rec.truth = ground_truth(rec.geometry, cfg, cfg.seed);
    observations[r] = {synthesize_received(rec.truth, pilots, cfg.system, mix_seed(rec.seed, kNoiseStream),
                                           noise_mode(cfg)),
                       pilots};
  }

  RunResult run{ExperimentKind::sequential, {{"MAP", base}, {"ML", base}}};
  auto& map = run.tracks[0].trials;
  auto& ml = run.tracks[1].trials;
  parallel_for(rounds + 1, cfg.jobs, [&](std::size_t task) {
    if (task == rounds) {
      auto results = sequential_estimate(observations, cfg.system, cfg.optimizer, cfg.prior_variance);
      for (std::size_t r = 0; r < rounds; ++r) map[r].estimate = std::move(results[r]);
      return;
    }
    const Observation& obs = observations[task];
    ml[task].estimate = estimate_params(obs.y, obs.pilots, cfg.system, cfg.optimizer);
  });
  for (auto& track : run.tracks) {
    for (auto& t : track.trials) t.match = greedy_match(t.truth, t.estimate.params, cfg.gate);
  }
  return run;
}

RunResult run_experiment(const ScenarioConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::single: return run_single(cfg);
    case ExperimentKind::ensemble: return run_ensemble(cfg);
    case ExperimentKind::sequential: return run_sequential(cfg);
  }
  throw ConfigError("kind: unsupported experiment kind");
}

RunResult merge_runs(const RunResult& a, const RunResult& b) {
  if (a.kind != b.kind || a.tracks.size() != b.tracks.size()) {
    throw std::invalid_argument("merge_runs: runs have different kinds or estimators");
  }
  RunResult out = a;
  for (std::size_t k = 0; k < out.tracks.size(); ++k) {
    if (out.tracks[k].estimator != b.tracks[k].estimator) {
      throw std::invalid_argument("merge_runs: estimator mismatch");
    }
    auto& trials = out.tracks[k].trials;
    trials.insert(trials.end(), b.tracks[k].trials.begin(), b.tracks[k].trials.end());
    std::stable_sort(trials.begin(), trials.end(),
                     [](const TrialRecord& x, const TrialRecord& y) { return x.index < y.index; });
  }
  return out;
}

Metrics compute_metrics(const RunResult& run) {
  Metrics m;
  m.kind = std::string(to_string(run.kind));
  for (const auto& track : run.tracks) {
    const Summary s = summarize(track.trials);
    m.summary.push_back({track.estimator, s.trials, s.true_paths, s.estimated_paths, s.assigned, s.precision,
                         s.recall, s.mean_inner_iterations});
    Metrics::ErrorRow mse{track.estimator, "MSE", {}};
    Metrics::ErrorRow rmse{track.estimator, "RMSE", {}};
    if (s.errors.pairs > 0) {
      const ParamErrorTable t = s.errors.table();
      mse.values = t.mse;
      rmse.values = t.rmse;
    } else {
      mse.values.fill(std::numeric_limits<double>::quiet_NaN());
      rmse.values.fill(std::numeric_limits<double>::quiet_NaN());
    }
    m.errors.push_back(mse);
    m.errors.push_back(rmse);
  }
  return m;
}

std::string format_metrics(const Metrics& m) {
  std::ostringstream out;
  out << "# ofdmest-metrics v" << m.version << " kind=" << m.kind << "\n";
  out << "[summary]\n" << kSummaryHeader << "\n";
  for (const auto& r : m.summary) {
    out << r.estimator << ',' << r.trials << ',' << r.true_paths << ',' << r.estimated_paths << ',' << r.assigned
        << ',' << fmt(r.precision) << ',' << fmt(r.recall) << ',' << fmt(r.mean_inner_iterations) << "\n";
  }
  out << "[errors]\n" << error_header() << "\n";
  for (const auto& r : m.errors) {
    out << r.estimator << ',' << r.statistic;
    for (const double v : r.values) out << ',' << fmt(v);
    out << "\n";
  }
  return out.str();
}

Metrics parse_metrics(std::string_view text) {
  std::vector<std::string> lines;
  for (auto& l : split(text, '\n')) {
    if (!l.empty()) lines.push_back(std::move(l));
  }
  if (lines.empty()) throw std::runtime_error("metrics: empty input");

  Metrics m;
  const std::string prefix = "# ofdmest-metrics v";
  if (lines[0].rfind(prefix, 0) != 0) throw std::runtime_error("metrics: missing version header");
  const auto head = split(std::string_view(lines[0]).substr(prefix.size()), ' ');
  if (head.size() != 2 || head[1].rfind("kind=", 0) != 0) throw std::runtime_error("metrics: malformed header");
  m.version = static_cast<int>(parse_count(head[0]));
  if (m.version != Metrics::kVersion) {
    throw std::runtime_error("metrics: unsupported version " + std::to_string(m.version));
  }
  m.kind = head[1].substr(5);

  enum class Section { none, summary, errors } section = Section::none;
  bool expect_header = false;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line == "[summary]" || line == "[errors]") {
      section = line == "[summary]" ? Section::summary : Section::errors;
      expect_header = true;
      continue;
    }
    if (expect_header) {
      const std::string want = section == Section::summary ? std::string(kSummaryHeader) : error_header();
      if (line != want) throw std::runtime_error("metrics: unexpected column header '" + line + "'");
      expect_header = false;
      continue;
    }
    const auto cells = split(line, ',');
    if (section == Section::summary) {
      if (cells.size() != 8) throw std::runtime_error("metrics: summary row needs 8 cells");
      m.summary.push_back({cells[0], parse_count(cells[1]), parse_count(cells[2]), parse_count(cells[3]),
                           parse_count(cells[4]), parse_double(cells[5]), parse_double(cells[6]),
                           parse_double(cells[7])});
    } else if (section == Section::errors) {
      if (cells.size() != 2 + kErrorColumns.size()) throw std::runtime_error("metrics: error row needs 8 cells");
      Metrics::ErrorRow r{cells[0], cells[1], {}};
      for (std::size_t k = 0; k < r.values.size(); ++k) r.values[k] = parse_double(cells[2 + k]);
      m.errors.push_back(r);
    } else {
      throw std::runtime_error("metrics: row outside a section");
    }
  }
  return m;
}

json trials_json(const RunResult& run) {
  json tracks = json::array();
  for (const auto& track : run.tracks) {
    json trials = json::array();
    for (const auto& t : track.trials) trials.push_back(trial_json(t));
    tracks.push_back({{"estimator", track.estimator}, {"trials", trials}});
  }
  return {{"version", Metrics::kVersion}, {"kind", std::string(to_string(run.kind))}, {"tracks", tracks}};
}

std::string format_reflectors(const RunResult& run, const Environment& env) {
  std::ostringstream out;
  out << "estimator,index,path,status,x,y,true_x,true_y\n";
  for (const auto& track : run.tracks) {
    for (const auto& t : track.trials) {
      for (std::size_t l = 0; l < t.estimate.num_paths; ++l) {
        const PathParams& p = t.estimate.params[l];
        const auto hit = std::find_if(t.match.assignments.begin(), t.match.assignments.end(),
                                      [&](const Assignment& a) { return a.estimate == l; });
        const GeomPath* truth = hit != t.match.assignments.end() ? &t.geometry[hit->truth] : nullptr;
        if (truth && truth->is_los) continue;
        const auto point = intersect_rays(env.bs, p.phi, t.ue, p.theta);
        if (!point) continue;
        out << track.estimator << ',' << t.index << ',' << l << ',' << (truth ? "matched" : "misdetection") << ','
            << fmt(point->x) << ',' << fmt(point->y) << ',';
        if (truth && truth->reflection_point) {
          out << fmt(truth->reflection_point->x) << ',' << fmt(truth->reflection_point->y);
        } else {
          out << ',';
        }
        out << "\n";
      }
    }
  }
  return out.str();
}

std::string format_trace(const RunResult& run) {
  std::ostringstream out;
  out << "estimator,index,step,objective\n";
  for (const auto& track : run.tracks) {
    for (const auto& t : track.trials) {
      for (std::size_t k = 0; k < t.estimate.objective_trace.size(); ++k) {
        out << track.estimator << ',' << t.index << ',' << k << ',' << fmt(t.estimate.objective_trace[k]) << "\n";
      }
    }
  }
  return out.str();
}

void write_outputs(const RunResult& run, const ScenarioConfig& cfg, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir.string() + "': " + ec.message());
  write_file(dir / "metrics.csv", format_metrics(compute_metrics(run)));
  write_file(dir / "trials.json", trials_json(run).dump(1) + "\n");
  write_file(dir / "reflectors.csv", format_reflectors(run, cfg.environment));
  write_file(dir / "trace.csv", format_trace(run));
}

}  // namespace ofdmest
