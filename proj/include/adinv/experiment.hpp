#pragma once

// Batch experiments: config parsing, the simulate -> observe -> invert
// pipeline and the file-writing commands behind the CLI.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <thread>

#include "adinv/aliasing.hpp"
#include "adinv/detection.hpp"
#include "adinv/identifiability.hpp"
#include "adinv/io.hpp"
#include "adinv/rng.hpp"
#include "adinv/sampling.hpp"
#include "adinv/solver.hpp"
#include "adinv/spectral.hpp"

namespace adinv {

struct SourceSpec {
  std::vector<Point> centers;
  double amplitude = 300.0;
  double width = 0.09;
};

struct LayoutSpec {
  std::string type = "irregular";
  int count = 0;  ///< random irregular sensors when no points are given
  std::vector<Point> points;
  std::string file;
  int mesh1 = 0, mesh2 = 0;
  std::vector<int> sel1, sel2;
  int m1 = 0, m2 = 0;
  Eigen::Vector2d shift = Eigen::Vector2d::Zero();
};

struct ExperimentConfig {
  PhysicsParams physics;
  int n1 = 40, n2 = 40;
  SourceSpec source;
  std::string eta_file;           ///< overrides the source spec
  std::string observations_file;  ///< CSV with a .json sidecar next to it
  LayoutSpec layout;
  int L = 20;
  double sigma = 0.0;
  std::uint64_t seed = 1;
  ProblemKind problem = ProblemKind::SpaceTime;
  int until = 0;  ///< data horizon for inversion; 0 means L
  RegularizationParams reg{1.0, 1.0};
  AdmmConfig solver;
  int truncate = -1;  ///< block cutoff for P-II/P-III, -1 keeps all blocks
  int eval_nx = 0, eval_ny = 0;
  std::vector<double> snapshot_times;
  double detect_radius = 0.05;
  double distance_scale = 1.0;  ///< reported distance units per domain unit
  std::vector<double> tau;
  int replicates = 10;
  double robust_threshold = 0.1;
  std::vector<double> sweep_lambda1, sweep_lambda2;
  int threads = 0;
  bool timing = false;
  std::string out = "out";

  int horizon() const { return until > 0 ? until : L; }
  int nx() const { return eval_nx > 0 ? eval_nx : n1; }
  int ny() const { return eval_ny > 0 ? eval_ny : n2; }

  void validate() const {
    physics.validate();
    WavenumberSet(n1, n2);
    if (L < 1) throw ParameterError("observe.L must be positive");
    if (!(sigma >= 0.0)) throw ParameterError("observe.sigma must be non-negative");
    if (horizon() > L) throw ParameterError("data horizon exceeds observe.L");
    reg.validate();
    solver.validate();
    if (problem == ProblemKind::NonUniform && layout.type != "nonuniform") {
      throw ParameterError("problem p2 needs a nonuniform layout");
    }
    if (problem == ProblemKind::Shifted && layout.type != "shifted") {
      throw ParameterError("problem p3 needs a shifted layout");
    }
    if (replicates < 1) throw ParameterError("sensitivity.replicates must be positive");
  }
};

inline ProblemKind parse_problem(const std::string& s) {
  if (s == "p1" || s == "P-I") return ProblemKind::SpaceTime;
  if (s == "p2" || s == "P-II") return ProblemKind::NonUniform;
  if (s == "p3" || s == "P-III") return ProblemKind::Shifted;
  throw ParameterError("unknown problem '" + s + "' (expected p1, p2 or p3)");
}

namespace detail {

using json = nlohmann::json;

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline Point to_point(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ParameterError("expected [x, y]");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

inline std::vector<Point> to_points(const json& j) {
  std::vector<Point> out;
  for (const auto& p : j) out.push_back(to_point(p));
  return out;
}

inline Eigen::Vector2d to_vec2(const json& j) {
  const Point p = to_point(j);
  return {p.x, p.y};
}

inline std::pair<int, int> to_int2(const json& j) {
  if (j.is_number_integer()) return {j.get<int>(), j.get<int>()};
  if (!j.is_array() || j.size() != 2) throw ParameterError("expected n or [n1, n2]");
  return {j.at(0).get<int>(), j.at(1).get<int>()};
}

// A 2-vector is read as diag(a, b); a scalar as a multiple of I.
inline Eigen::Matrix2d to_tensor(const json& j) {
  Eigen::Matrix2d D = Eigen::Matrix2d::Zero();
  if (j.is_number()) {
    D(0, 0) = D(1, 1) = j.get<double>();
  } else if (j.is_array() && j.size() == 2 && j.at(0).is_number()) {
    D(0, 0) = j.at(0).get<double>();
    D(1, 1) = j.at(1).get<double>();
  } else if (j.is_array() && j.size() == 2) {
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) D(r, c) = j.at(r).at(c).get<double>();
    }
  } else {
    throw ParameterError("expected a scalar, [a, b] or [[a, b], [c, d]]");
  }
  return D;
}

inline json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return json(text);  // bare word
  }
}

using Setter = std::function<void(ExperimentConfig&, const json&)>;

inline const std::map<std::string, Setter>& config_keys() {
  static const std::map<std::string, Setter> keys = {
      {"physics.v", [](auto& c, const json& j) { c.physics.v = to_vec2(j); }},
      {"physics.D", [](auto& c, const json& j) { c.physics.D = to_tensor(j); }},
      {"physics.zeta", [](auto& c, const json& j) { c.physics.zeta = j.get<double>(); }},
      {"physics.delta", [](auto& c, const json& j) { c.physics.delta = j.get<double>(); }},
      {"grid.n", [](auto& c, const json& j) { std::tie(c.n1, c.n2) = to_int2(j); }},
      {"source.centers", [](auto& c, const json& j) { c.source.centers = to_points(j); }},
      {"source.amplitude", [](auto& c, const json& j) { c.source.amplitude = j.get<double>(); }},
      {"source.width", [](auto& c, const json& j) { c.source.width = j.get<double>(); }},
      {"source.eta_file", [](auto& c, const json& j) { c.eta_file = j.get<std::string>(); }},
      {"observe.file", [](auto& c, const json& j) { c.observations_file = j.get<std::string>(); }},
      {"layout.type", [](auto& c, const json& j) { c.layout.type = j.get<std::string>(); }},
      {"layout.count", [](auto& c, const json& j) { c.layout.count = j.get<int>(); }},
      {"layout.points", [](auto& c, const json& j) { c.layout.points = to_points(j); }},
      {"layout.file", [](auto& c, const json& j) { c.layout.file = j.get<std::string>(); }},
      {"layout.mesh", [](auto& c, const json& j) { std::tie(c.layout.mesh1, c.layout.mesh2) = to_int2(j); }},
      {"layout.sel1", [](auto& c, const json& j) { c.layout.sel1 = j.get<std::vector<int>>(); }},
      {"layout.sel2", [](auto& c, const json& j) { c.layout.sel2 = j.get<std::vector<int>>(); }},
      {"layout.m", [](auto& c, const json& j) { std::tie(c.layout.m1, c.layout.m2) = to_int2(j); }},
      {"layout.shift", [](auto& c, const json& j) { c.layout.shift = to_vec2(j); }},
      {"observe.L", [](auto& c, const json& j) { c.L = j.get<int>(); }},
      {"observe.sigma", [](auto& c, const json& j) { c.sigma = j.get<double>(); }},
      {"seed", [](auto& c, const json& j) { c.seed = j.get<std::uint64_t>(); }},
      {"problem", [](auto& c, const json& j) { c.problem = parse_problem(j.get<std::string>()); }},
      {"invert.until", [](auto& c, const json& j) { c.until = j.get<int>(); }},
      {"invert.truncate", [](auto& c, const json& j) { c.truncate = j.get<int>(); }},
      {"reg.lambda1", [](auto& c, const json& j) { c.reg.lambda1 = j.get<double>(); }},
      {"reg.lambda2", [](auto& c, const json& j) { c.reg.lambda2 = j.get<double>(); }},
      {"solver.rho", [](auto& c, const json& j) { c.solver.rho = j.get<double>(); }},
      {"solver.omega", [](auto& c, const json& j) { c.solver.omega = j.get<double>(); }},
      {"solver.eps_abs", [](auto& c, const json& j) { c.solver.eps_abs = j.get<double>(); }},
      {"solver.eps_rel", [](auto& c, const json& j) { c.solver.eps_rel = j.get<double>(); }},
      {"solver.max_outer", [](auto& c, const json& j) { c.solver.max_outer = j.get<int>(); }},
      {"solver.max_inner", [](auto& c, const json& j) { c.solver.max_inner = j.get<int>(); }},
      {"solver.nonneg", [](auto& c, const json& j) { c.solver.nonneg = j.get<bool>(); }},
      {"solver.hermitian_projection",
       [](auto& c, const json& j) { c.solver.hermitian_projection = j.get<bool>(); }},
      {"eval.grid", [](auto& c, const json& j) { std::tie(c.eval_nx, c.eval_ny) = to_int2(j); }},
      {"simulate.times", [](auto& c, const json& j) { c.snapshot_times = j.get<std::vector<double>>(); }},
      {"detect.radius", [](auto& c, const json& j) { c.detect_radius = j.get<double>(); }},
      {"report.distance_scale", [](auto& c, const json& j) { c.distance_scale = j.get<double>(); }},
      {"sensitivity.tau", [](auto& c, const json& j) { c.tau = j.get<std::vector<double>>(); }},
      {"sensitivity.replicates", [](auto& c, const json& j) { c.replicates = j.get<int>(); }},
      {"sensitivity.threshold", [](auto& c, const json& j) { c.robust_threshold = j.get<double>(); }},
      {"sweep.lambda1", [](auto& c, const json& j) { c.sweep_lambda1 = j.get<std::vector<double>>(); }},
      {"sweep.lambda2", [](auto& c, const json& j) { c.sweep_lambda2 = j.get<std::vector<double>>(); }},
      {"run.threads", [](auto& c, const json& j) { c.threads = j.get<int>(); }},
      {"output.dir", [](auto& c, const json& j) { c.out = j.get<std::string>(); }},
      {"output.timing", [](auto& c, const json& j) { c.timing = j.get<bool>(); }},
  };
  return keys;
}

}  // namespace detail

/// Flat "key = value" text; '#' starts a comment. Values are JSON literals
/// or bare words. Unknown keys are errors.
inline ExperimentConfig parse_config(const std::string& text, const std::string& origin = "config") {
  ExperimentConfig cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ParameterError(where + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const auto& keys = detail::config_keys();
    const auto it = keys.find(key);
    if (it == keys.end()) throw ParameterError(where + ": unknown config key '" + key + "'");
    try {
      it->second(cfg, detail::parse_value(detail::trim(line.substr(eq + 1))));
    } catch (const nlohmann::json::exception& e) {
      throw ParameterError(where + ": bad value for '" + key + "': " + e.what());
    } catch (const ParameterError& e) {
      throw ParameterError(where + ": bad value for '" + key + "': " + e.what());
    }
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  auto is = io::open_in(path);
  std::stringstream ss;
  ss << is.rdbuf();
  ExperimentConfig cfg = parse_config(ss.str(), path.string());
  // relative file references resolve against the config's directory
  auto rebase = [&](std::string& f) {
    if (!f.empty() && std::filesystem::path(f).is_relative()) f = (path.parent_path() / f).string();
  };
  rebase(cfg.eta_file);
  rebase(cfg.observations_file);
  rebase(cfg.layout.file);
  return cfg;
}

// ---------------------------------------------------------------- pipeline

inline SpectralField initial_eta(const ExperimentConfig& cfg) {
  if (!cfg.eta_file.empty()) {
    SpectralField eta = io::read_eta(cfg.eta_file);
    if (eta.n1 != cfg.n1 || eta.n2 != cfg.n2) throw DimensionError("eta file does not match grid.n");
    return eta;
  }
  const WavenumberSet K(cfg.n1, cfg.n2);
  if (cfg.source.centers.empty()) return SpectralField(K, CVec::Zero(K.size()), true);
  const Grid src = gaussian_sources(std::span<const Point>(cfg.source.centers), cfg.source.amplitude,
                                    cfg.source.width, cfg.n1, cfg.n2);
  return strip_nyquist(project_source(src, K));
}

inline SensorLayout make_layout(const ExperimentConfig& cfg) {
  const LayoutSpec& s = cfg.layout;
  if (!s.file.empty()) return io::read_layout(s.file);
  SensorLayout layout;
  if (s.type == "irregular") {
    IrregularLayout ir{s.points};
    if (ir.points.empty()) {
      if (s.count < 1) throw ParameterError("irregular layout needs layout.points or layout.count");
      CounterRng rng(derive_seed(cfg.seed, "layout"));
      for (int i = 0; i < s.count; ++i) ir.points.push_back({rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)});
    }
    layout = ir;
  } else if (s.type == "nonuniform") {
    layout = NonUniformGridLayout{s.mesh1, s.mesh2, s.sel1, s.sel2};
  } else if (s.type == "shifted") {
    layout = ShiftedUniformLayout{s.m1, s.m2, s.shift};
  } else {
    throw ParameterError("unknown layout.type '" + s.type + "'");
  }
  validate_layout(layout);
  return layout;
}

inline ObservationSet make_observations(const ExperimentConfig& cfg, const SpectralField& eta) {
  if (!cfg.observations_file.empty()) {
    std::filesystem::path csv(cfg.observations_file);
    std::filesystem::path side = csv;
    side.replace_extension(".json");
    return io::read_observations(csv, side);
  }
  return synthesize_observations(eta, cfg.physics, make_layout(cfg), cfg.L, cfg.sigma,
                                 derive_seed(cfg.seed, "observe"));
}

struct Inversion {
  AdmmResult result;
  DetectionResult detection;
  std::string block_text;  ///< block report for P-II/P-III
};

/// Assembles the configured problem from data up to `until`, solves it and
/// evaluates the reconstruction on the evaluation lattice.
inline Inversion invert(const ExperimentConfig& cfg, const ObservationSet& obs, int until,
                        const PhysicsParams& physics) {
  if (until < 1 || until > obs.num_times()) throw ParameterError("data horizon outside the observations");
  const WavenumberSet K(cfg.n1, cfg.n2);
  const Mat Y = obs.Y.leftCols(until);
  InverseProblemInstance inst;
  Inversion out;
  if (cfg.problem == ProblemKind::SpaceTime) {
    const CMat F = build_F(obs.layout, K);
    inst = make_space_time_instance(F, physics, K, Y, until, obs.sigma, cfg.reg);
  } else {
    const AliasPartition part = partition_for(obs.layout, cfg.n1, cfg.n2);
    const SpectralObservation so = spectral_observation(Y, obs.layout, part);
    BlockSystem sys;
    if (cfg.problem == ProblemKind::NonUniform) {
      if (!std::holds_alternative<NonUniformGridLayout>(obs.layout)) {
        throw ParameterError("problem p2 needs a nonuniform layout");
      }
      sys = assemble_PII(so, part, physics, until, obs.sigma);
    } else {
      const auto* sh = std::get_if<ShiftedUniformLayout>(&obs.layout);
      if (!sh) throw ParameterError("problem p3 needs a shifted layout");
      sys = assemble_PIII(so, part, sh->delta, physics, until, obs.sigma);
    }
    if (cfg.truncate >= 0) sys = block_truncate(sys, cfg.truncate);
    out.block_text = block_report(sys);
    inst = make_block_instance(sys, cfg.reg);
  }
  out.result = solve(inst, cfg.solver);
  const Grid field = evaluate_grid(out.result.eta_hat.coeffs, K, cfg.nx(), cfg.ny());
  out.detection = detect(field, std::span<const Point>(cfg.source.centers));
  return out;
}

// ---------------------------------------------------------------- commands

namespace detail {

inline std::string time_tag(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", t);
  return buf;
}

inline json diagnostics_json(const AdmmDiagnostics& d, bool timing) {
  json j;
  j["converged"] = d.converged;
  j["iterations"] = d.iterations;
  j["inner_iterations"] = d.inner_iterations;
  j["primal_residual"] = d.primal_residual;
  j["dual_residual"] = d.dual_residual;
  j["objective"] = d.objective;
  if (timing) j["wall_seconds"] = d.wall_seconds;
  return j;
}

inline json detection_json(const DetectionResult& r, const ExperimentConfig& cfg) {
  json j;
  json levels;
  for (std::size_t i = 0; i < kLevelPercentiles.size(); ++i) {
    levels["p" + time_tag(kLevelPercentiles[i])] = r.levels[i];
  }
  j["levels"] = levels;
  json peaks = json::array();
  for (std::size_t p = 0; p < std::min<std::size_t>(r.peaks.size(), 10); ++p) {
    peaks.push_back({{"x", r.peaks[p].position.x}, {"y", r.peaks[p].position.y}, {"value", r.peaks[p].value}});
  }
  j["peaks"] = peaks;
  j["num_peaks"] = r.peaks.size();
  if (!cfg.source.centers.empty()) {
    json src = json::array();
    bool all = true;
    for (std::size_t s = 0; s < cfg.source.centers.size(); ++s) {
      const double d = r.source_distance[s];
      const bool ok = d <= cfg.detect_radius;
      all = all && ok;
      json e{{"x", cfg.source.centers[s].x}, {"y", cfg.source.centers[s].y}, {"detected", ok}};
      e["distance"] = std::isfinite(d) ? json(d * cfg.distance_scale) : json(nullptr);
      src.push_back(e);
    }
    j["sources"] = src;
    j["all_detected"] = all;
    j["radius"] = cfg.detect_radius * cfg.distance_scale;
  }
  return j;
}

inline int thread_count(const ExperimentConfig& cfg, std::size_t jobs) {
  int t = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::thread::hardware_concurrency());
  return std::max(1, std::min<int>(t, static_cast<int>(jobs)));
}

// Runs job(i) for i in [0, n) on a small pool; each job writes only its own slot.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& job) {
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = next++; i < n; i = next++) job(i);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline double sample_variance(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  return s / static_cast<double>(x.size() - 1);
}

}  // namespace detail

/// Writes eta.csv, the initial field and snapshot grids at the configured times.
inline nlohmann::json cmd_simulate(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  cfg.validate();
  const SpectralField eta = initial_eta(cfg);
  const WavenumberSet K(cfg.n1, cfg.n2);
  io::write_eta(out / "eta.csv", eta);
  io::write_grid(out / "initial.csv", evaluate_grid(eta.coeffs, K, cfg.nx(), cfg.ny()));
  nlohmann::json files = nlohmann::json::array();
  for (double t : cfg.snapshot_times) {
    if (!(t >= 0.0)) throw ParameterError("snapshot times must be non-negative");
    const std::string name = "snapshot_t" + detail::time_tag(t) + ".csv";
    io::write_grid(out / name, evaluate_grid(propagate_to(eta, cfg.physics, t), K, cfg.nx(), cfg.ny()));
    files.push_back(name);
  }
  nlohmann::json summary{{"command", "simulate"}, {"modes", {cfg.n1, cfg.n2}}, {"snapshots", files}};
  io::write_json(out / "simulate.json", summary);
  return summary;
}

/// Writes layout.json, observations.csv and its observations.json sidecar.
inline nlohmann::json cmd_observe(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  cfg.validate();
  const ObservationSet obs = make_observations(cfg, initial_eta(cfg));
  io::write_layout(out / "layout.json", obs.layout);
  io::write_observations(out / "observations.csv", out / "observations.json", obs, "layout.json");
  return {{"command", "observe"}, {"sensors", obs.num_sensors()}, {"times", obs.num_times()}};
}

/// Writes eta_hat.csv, reconstruction.csv and invert.json.
inline nlohmann::json cmd_invert(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  cfg.validate();
  const ObservationSet obs = make_observations(cfg, initial_eta(cfg));
  const Inversion inv = invert(cfg, obs, cfg.horizon(), cfg.physics);
  io::write_eta(out / "eta_hat.csv", inv.result.eta_hat);
  io::write_grid(out / "reconstruction.csv", inv.detection.field);
  if (!inv.block_text.empty()) io::write_text(out / "blocks.txt", inv.block_text);
  nlohmann::json summary;
  summary["command"] = "invert";
  summary["problem"] = problem_name(cfg.problem);
  summary["until"] = cfg.horizon();
  summary["lambda1"] = cfg.reg.lambda1;
  summary["lambda2"] = cfg.reg.lambda2;
  summary["rho"] = cfg.solver.rho;
  summary["omega"] = cfg.solver.omega;
  summary["nonneg"] = cfg.solver.nonneg;
  summary["solver"] = detail::diagnostics_json(inv.result.diagnostics, cfg.timing);
  summary["detection"] = detail::detection_json(inv.detection, cfg);
  io::write_json(out / "invert.json", summary);
  return summary;
}

/// Runs every applicable identifiability checker; writes check.txt and check.json.
inline nlohmann::json cmd_check(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  cfg.validate();
  const WavenumberSet K(cfg.n1, cfg.n2);
  const SensorLayout layout = make_layout(cfg);
  const std::vector<Point> pos = sensor_positions(layout);
  const int L = cfg.horizon();
  std::vector<IdentifiabilityReport> reps;
  reps.push_back(check_condition_A(cfg.physics, K));
  std::vector<std::pair<Wavenumber, Wavenumber>> cand;
  for (const auto& v : reps[0].violations) cand.emplace_back(v.k_a, v.k_b);
  reps.push_back(check_condition_B(pos, K, 1e-9, cand));
  reps.push_back(check_prop2(cfg.physics, K, build_F(std::span<const Point>(pos), K), L));
  std::string blocks;
  if (!std::holds_alternative<IrregularLayout>(layout)) {
    const AliasPartition part = partition_for(layout, cfg.n1, cfg.n2);
    const bool shifted = std::holds_alternative<ShiftedUniformLayout>(layout);
    reps.push_back(check_prop3(part, cfg.physics, L, 1e-9, shifted));
  }
  std::string text;
  nlohmann::json summary;
  summary["command"] = "check";
  for (const auto& r : reps) {
    text += r.to_text() + "\n";
    summary[r.check] = {{"verdict", r.verdict}, {"violations", r.violations.size()}};
  }
  io::write_text(out / "check.txt", text);
  io::write_json(out / "check.json", summary);
  return summary;
}

/// Perturbs the solver's input velocity by N(0, (|v_i| tau)^2) per component
/// and records the worst source-to-peak distance of every run.
inline nlohmann::json cmd_sensitivity(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  cfg.validate();
  if (cfg.tau.empty()) throw ParameterError("sensitivity.tau is empty");
  if (cfg.source.centers.empty()) throw ParameterError("sensitivity needs source.centers");
  const ObservationSet obs = make_observations(cfg, initial_eta(cfg));
  struct Run {
    double tau, v1, v2, distance;
    bool converged;
  };
  const std::size_t reps = static_cast<std::size_t>(cfg.replicates);
  std::vector<Run> runs(cfg.tau.size() * reps);
  detail::parallel_for(runs.size(), detail::thread_count(cfg, runs.size()), [&](std::size_t i) {
    const std::size_t ti = i / reps;
    const std::size_t r = i % reps;
    const double tau = cfg.tau[ti];
    CounterRng rng(derive_seed(cfg.seed, "perturb", ti * 1000003ULL + r));
    PhysicsParams p = cfg.physics;
    p.v[0] += std::abs(cfg.physics.v[0]) * tau * rng.normal();
    p.v[1] += std::abs(cfg.physics.v[1]) * tau * rng.normal();
    const Inversion inv = invert(cfg, obs, cfg.horizon(), p);
    runs[i] = {tau, p.v[0], p.v[1], worst_distance(inv.detection) * cfg.distance_scale,
               inv.result.diagnostics.converged};
  });
  std::string csv = "tau,replicate,v1,v2,distance,converged\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    csv += io::fmt(runs[i].tau) + "," + std::to_string(i % reps) + "," + io::fmt(runs[i].v1) + "," +
           io::fmt(runs[i].v2) + "," + io::fmt(runs[i].distance) + "," +
           (runs[i].converged ? "1" : "0") + "\n";
  }
  io::write_text(out / "sensitivity.csv", csv);
  nlohmann::json per_tau = nlohmann::json::array();
  for (std::size_t ti = 0; ti < cfg.tau.size(); ++ti) {
    std::vector<double> d;
    for (std::size_t r = 0; r < reps; ++r) d.push_back(runs[ti * reps + r].distance);
    const bool finite = std::all_of(d.begin(), d.end(), [](double x) { return std::isfinite(x); });
    nlohmann::json e{{"tau", cfg.tau[ti]}, {"runs", reps}};
    if (finite) {
      e["median"] = percentile(d, 50.0);
      e["q25"] = percentile(d, 25.0);
      e["q75"] = percentile(d, 75.0);
      e["min"] = *std::min_element(d.begin(), d.end());
      e["max"] = *std::max_element(d.begin(), d.end());
      e["variance"] = detail::sample_variance(d);
    } else {
      e["undetected"] = std::count_if(d.begin(), d.end(), [](double x) { return !std::isfinite(x); });
    }
    per_tau.push_back(e);
  }
  nlohmann::json summary{{"command", "sensitivity"},
                         {"threshold", cfg.robust_threshold * cfg.distance_scale},
                         {"per_tau", per_tau}};
  io::write_json(out / "sensitivity.json", summary);
  return summary;
}

/// One inversion per (lambda1, lambda2) cell; writes sweep.csv and sweep.json.
inline nlohmann::json cmd_lambda_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  cfg.validate();
  if (cfg.sweep_lambda1.empty() || cfg.sweep_lambda2.empty()) {
    throw ParameterError("sweep.lambda1 and sweep.lambda2 must be non-empty");
  }
  const ObservationSet obs = make_observations(cfg, initial_eta(cfg));
  struct Cell {
    double l1, l2;
    Inversion inv;
  };
  std::vector<Cell> cells;
  for (double a : cfg.sweep_lambda1) {
    for (double b : cfg.sweep_lambda2) cells.push_back({a, b, {}});
  }
  detail::parallel_for(cells.size(), detail::thread_count(cfg, cells.size()), [&](std::size_t i) {
    ExperimentConfig c = cfg;
    c.reg = {cells[i].l1, cells[i].l2};
    cells[i].inv = invert(c, obs, cfg.horizon(), cfg.physics);
  });
  std::string csv = "lambda1,lambda2,converged,iterations,peak_x,peak_y,distance,within_radius\n";
  bool robust = !cfg.source.centers.empty();
  for (const auto& c : cells) {
    const auto& det = c.inv.detection;
    const double px = det.peaks.empty() ? std::nan("") : det.peaks[0].position.x;
    const double py = det.peaks.empty() ? std::nan("") : det.peaks[0].position.y;
    const double d = worst_distance(det);
    const bool ok = !cfg.source.centers.empty() && d <= cfg.detect_radius;
    robust = robust && ok;
    csv += io::fmt(c.l1) + "," + io::fmt(c.l2) + "," + (c.inv.result.diagnostics.converged ? "1" : "0") +
           "," + std::to_string(c.inv.result.diagnostics.iterations) + "," + io::fmt(px) + "," +
           io::fmt(py) + "," + io::fmt(d * cfg.distance_scale) + "," + (ok ? "1" : "0") + "\n";
  }
  io::write_text(out / "sweep.csv", csv);
  nlohmann::json summary{{"command", "lambda-sweep"},
                         {"cells", cells.size()},
                         {"radius", cfg.detect_radius * cfg.distance_scale},
                         {"robust", robust}};
  io::write_json(out / "sweep.json", summary);
  return summary;
}

}  // namespace adinv
