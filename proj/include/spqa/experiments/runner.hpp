#pragma once

// Turns an ExperimentConfig into files on disk. One run writes one
// directory; scans fan independent runs out over a small thread pool.

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <regex>
#include <thread>

#include "spqa/engine/fidelity.hpp"
#include "spqa/engine/gaps.hpp"
#include "spqa/experiments/config.hpp"
#include "spqa/experiments/output.hpp"
#include "spqa/models/collective_spin.hpp"
#include "spqa/models/noise.hpp"
#include "spqa/models/single_particle.hpp"
#include "spqa/oracle/checks.hpp"

namespace spqa {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitEngine = 3;
inline constexpr int kExitValidation = 4;

/// Any failure inside a run, tagged with the stage that raised it.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what, int exit_code)
      : Error(stage + ": " + what), stage_(std::move(stage)), exit_code_(exit_code) {}
  const std::string& stage() const noexcept { return stage_; }
  int exit_code() const noexcept { return exit_code_; }

 private:
  std::string stage_;
  int exit_code_;
};

template <class F>
auto in_stage(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const ConfigurationError& e) {
    throw StageError(stage, e.what(), kExitConfig);
  } catch (const std::exception& e) {
    throw StageError(stage, e.what(), kExitEngine);
  }
}

inline DrivenModel build_model(const ModelConfig& m) {
  if (m.type == "single_particle") {
    return build_single_particle(GridConfig{m.half_width, m.grid_points}, m.omega, m.width, m.tilt).driven;
  }
  if (m.type == "collective_ising") return build_collective_ising(m.n_spins, m.coupling, m.bias).driven;
  throw ConfigurationError("unknown model type '" + m.type + "'", "model.type");
}

struct RunOptions {
  std::optional<std::filesystem::path> out;  // replaces output.directory
  bool keep_traces = true;
};

struct ResultBundle {
  std::string id;
  std::filesystem::path directory;
  std::vector<std::string> files;
  std::map<std::string, double> summary;
  std::vector<ValidationReport> validations;
  std::optional<SweepSchedule> schedule;
  std::optional<FidelityTrace> trace;
  std::optional<FidelityTrace> linear_trace;

  bool passed() const {
    return std::all_of(validations.begin(), validations.end(), [](const ValidationReport& r) { return r.pass; });
  }
};

namespace detail {

/// Removes whatever a failed run managed to write.
class OutputGuard {
 public:
  explicit OutputGuard(std::filesystem::path dir) : dir_(std::move(dir)) {
    created_ = !std::filesystem::exists(dir_);
    std::filesystem::create_directories(dir_);
  }
  OutputGuard(const OutputGuard&) = delete;
  OutputGuard& operator=(const OutputGuard&) = delete;
  ~OutputGuard() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& f : files_) std::filesystem::remove(dir_ / f, ec);
    if (created_ && std::filesystem::is_empty(dir_, ec)) std::filesystem::remove(dir_, ec);
  }

  void write(const std::string& name, const std::string& text) {
    files_.push_back(name);
    write_text(dir_ / name, text);
  }
  const std::filesystem::path& dir() const { return dir_; }
  const std::vector<std::string>& files() const { return files_; }
  void commit() { committed_ = true; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> files_;
  bool created_ = false;
  bool committed_ = false;
};

inline std::string sector_tag(double label) { return label > 0.0 ? "p" : "m"; }

inline std::string units_note(const ModelConfig& m) {
  if (m.type == "collective_ising") {
    return "hbar = 1; energies and times in the units of J as configured (canned configs take |J| = 1)";
  }
  return "hbar = m = 1; lengths in units of the trap length, energies in units of the trap quantum";
}

inline std::vector<std::string> header_comments(const ExperimentConfig& c) {
  std::vector<std::string> out{std::string("spqa ") + kVersion, "config_hash " + hex64(c.hash),
                               "experiment " + c.id + " kind " + to_string(c.kind),
                               "seed " + std::to_string(c.seed) + " noise_seed " + std::to_string(c.noise_seed()),
                               "schedule " + to_string(c.schedule.kind) +
                                   (c.schedule.kind == ScheduleKind::epsilon_fixed
                                        ? " epsilon " + format_number(c.schedule.epsilon)
                                        : " duration " + format_number(c.schedule.duration)),
                               std::string("t_star_rule ") + kTStarRule,
                               "target_policy " + c.schedule.targets.describe(), "units " + units_note(c.model)};
  std::istringstream in(c.canonical);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back("config " + line);
  }
  return out;
}

inline std::string svg_comment(const ExperimentConfig& c) {
  return "spqa " + std::string(kVersion) + " config_hash " + hex64(c.hash) + " experiment " + c.id;
}

inline nlohmann::ordered_json report_json(const ValidationReport& r) {
  nlohmann::ordered_json j;
  j["check"] = r.check;
  j["residual"] = r.residual;
  j["tolerance"] = r.tolerance;
  j["pass"] = r.pass;
  nlohmann::ordered_json p = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.parameters) p[k] = v;
  j["parameters"] = p;
  return j;
}

inline nlohmann::ordered_json config_json(const toml::table& t) {
  std::ostringstream os;
  os << toml::json_formatter{t};
  return nlohmann::ordered_json::parse(os.str());
}

inline std::string metadata_text(const ExperimentConfig& c, const ResultBundle& b) {
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["experiment"] = c.id;
  j["kind"] = to_string(c.kind);
  j["config_hash"] = hex64(c.hash);
  j["config"] = config_json(c.source);
  j["seed"] = c.seed;
  j["noise_seed"] = c.noise_seed();
  j["threads"] = {{"per_run", 1},
                  {"linear_algebra", "reference BLAS/LAPACK, statically linked, single-threaded"},
                  {"note", "scans run whole experiments concurrently; each run is sequential"}};
  j["units"] = units_note(c.model);
  j["t_star_rule"] = kTStarRule;
  j["target_policy"] = c.schedule.targets.describe();
  nlohmann::ordered_json s = nlohmann::ordered_json::object();
  for (const auto& [k, v] : b.summary) s[k] = v;
  j["summary"] = s;
  j["files"] = b.files;
  return j.dump(2) + "\n";
}

inline std::string validation_text(const ExperimentConfig* c, const std::vector<ValidationReport>& reports) {
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  if (c) j["config_hash"] = hex64(c->hash);
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  bool all = true;
  for (const auto& r : reports) {
    arr.push_back(report_json(r));
    all = all && r.pass;
  }
  j["reports"] = arr;
  j["pass"] = all;
  return j.dump(2) + "\n";
}

inline int nearest_target(const SectorSolver& solver, double param, int source) {
  const std::vector<int> t = select_targets(solver.solve(param), source, TargetPolicy::nearest());
  if (t.empty()) throw ConfigurationError("source level has no same-sector partner", "tracking.source");
  return t.front();
}

inline CsvTable fidelity_table(const FidelityTrace& tr, double bound_eps) {
  CsvTable t;
  t.columns = {"t", "R", "eps_inst"};
  const std::size_t ne = tr.energies.empty() ? 0 : tr.energies.front().size();
  for (std::size_t n = 1; n <= ne; ++n) t.columns.push_back("E_" + std::to_string(n));
  for (std::size_t k = 0; k < tr.tracked.size(); ++k) {
    t.columns.push_back("F_" + std::to_string(tr.tracked[k]) + sector_tag(tr.tracked_labels[k]));
  }
  t.columns.insert(t.columns.end(), {"F1_lower_bound", "F3_upper_bound", "W_off_sector"});
  const AnalyticBounds b = analytic_bounds(bound_eps);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    std::vector<double> row{tr.times[i], tr.params[i], tr.eps_inst[i]};
    row.insert(row.end(), tr.energies[i].begin(), tr.energies[i].end());
    row.insert(row.end(), tr.fidelity[i].begin(), tr.fidelity[i].end());
    row.insert(row.end(), {b.f1_lower, b.f3_upper, tr.off_sector_weight[i]});
    t.add(std::move(row));
  }
  return t;
}

inline Chart fidelity_chart(const ExperimentConfig& c, const FidelityTrace& tr, double bound_eps,
                            const std::string& title) {
  Chart ch{title, "t", "fidelity", {}, false, false};
  for (std::size_t k = 0; k < tr.tracked.size(); ++k) {
    Series s;
    s.name = "F_" + std::to_string(tr.tracked[k]) + sector_tag(tr.tracked_labels[k]);
    s.x = tr.times;
    for (const auto& row : tr.fidelity) s.y.push_back(row[k]);
    s.color = palette()[k % palette().size()];
    ch.series.push_back(std::move(s));
  }
  if (c.kind == ExperimentKind::dynamics) {
    const AnalyticBounds b = analytic_bounds(bound_eps);
    ch.series.push_back({"F1 bound", {tr.times.front(), tr.times.back()}, {b.f1_lower, b.f1_lower}, "#555555", true});
    ch.series.push_back({"F3 bound", {tr.times.front(), tr.times.back()}, {b.f3_upper, b.f3_upper}, "#999999", true});
  }
  return ch;
}

struct TracedRun {
  FidelityTrace trace;
  PropagationStats stats;
  TStar t_star;
  double fbar = 0.0;
};

inline TracedRun trace_run(const ExperimentConfig& c, const DrivenModel& model, const SectorSolver& solver,
                           const SweepSchedule& schedule, const NoiseProcess* noise, const std::string& tag) {
  TracedRun out;
  const std::vector<double> times = uniform_times(schedule.duration(), c.output.samples);
  const CVector psi0 = in_stage("initial state" + tag, [&] {
    return CVector(solver.solve(schedule.start()).level(c.tracking.source).vector);
  });
  const EvolutionTrajectory traj =
      in_stage("propagation" + tag, [&] { return propagate(model, schedule, psi0, times, noise, c.propagation); });
  out.stats = traj.stats;
  out.trace = in_stage("fidelity" + tag, [&] {
    return fidelity_trace(traj, solver, c.tracking.levels,
                          FidelityOptions{c.tracking.source, c.schedule.targets, c.tracking.energies});
  });
  in_stage("averaging" + tag, [&] {
    if (c.tracking.transition) {
      out.t_star = detect_t_star(out.trace, *c.tracking.transition, c.tracking.source);
    }
    out.fbar = average_fidelity(out.trace, out.t_star.t_star, c.tracking.source);
    return 0;
  });
  return out;
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline std::vector<ValidationReport> run_checks(const ExperimentConfig& c, const DrivenModel& model,
                                                const SectorSolver& solver, const SweepSchedule* schedule,
                                                const FidelityTrace* trace, int target) {
  std::vector<ValidationReport> out;
  const double probe = c.validation.probe.value_or(0.5 * (c.schedule.start + c.schedule.end));
  const bool collective = c.model.type == "collective_ising";
  for (const std::string& name : c.validation.checks) {
    out.push_back(in_stage("validation " + name, [&]() -> ValidationReport {
      if (name == "forbidden_transition") {
        if (!trace) throw ConfigurationError("needs a dynamics run", "validation.checks");
        double worst = max_abs(trace->off_sector_weight);
        for (std::size_t k = 0; k < trace->tracked.size(); ++k) {
          if (trace->tracked_labels[k] == trace->source_label) continue;
          for (const auto& row : trace->fidelity) worst = std::max(worst, row[k]);
        }
        return {"forbidden_transition", worst, 1e-8, {{"source_level", c.tracking.source}}};
      }
      if (name == "hellmann_feynman") {
        const HellmannFeynman hf = hellmann_feynman_residual(solver, probe, c.tracking.source, target,
                                                             c.validation.fd_step);
        return {"hellmann_feynman",
                hf.residual,
                1e-6,
                {{"param", probe}, {"m", c.tracking.source}, {"n", target}, {"step", c.validation.fd_step},
                 {"finite_difference", hf.finite_difference}, {"identity", hf.identity}}};
      }
      if (name == "two_level") {
        if (!trace || !schedule) throw ConfigurationError("needs a dynamics run", "validation.checks");
        if (c.tracking.source != 1) throw ConfigurationError("the reduction starts from level 1", "tracking.source");
        if (std::find(c.tracking.levels.begin(), c.tracking.levels.end(), target) == c.tracking.levels.end()) {
          throw ConfigurationError("level " + std::to_string(target) + " must be tracked", "tracking.levels");
        }
        return two_level_reduction_check(model, *trace, *schedule, c.schedule.epsilon, target);
      }
      if (!collective) throw ConfigurationError("needs model.type = collective_ising", "validation.checks");
      if (name == "dicke_full_spectrum") {
        return dicke_vs_full_spectrum(c.validation.oracle_spins, c.model.coupling, probe, c.model.bias);
      }
      if (name == "dicke_full_dynamics") {
        const CollectiveSpinModel small = build_collective_ising(c.validation.oracle_spins, c.model.coupling, 0.0);
        const SweepSchedule s = build_schedule(small.driven.sector_solver(8), c.schedule);
        return dicke_vs_full_dynamics(c.validation.oracle_spins, c.model.coupling, c.model.bias, s);
      }
      throw ConfigurationError("unknown check '" + name + "'", "validation.checks");
    }));
  }
  return out;
}

inline int solver_levels(const ExperimentConfig& c) {
  FidelityOptions opt{c.tracking.source, c.schedule.targets, c.tracking.energies};
  const int k = c.schedule.targets.kind == TargetPolicy::Kind::k_nearest_same_sector ? c.schedule.targets.k : 1;
  return std::max(fidelity_levels_needed(c.tracking.levels, opt), c.tracking.source + 2 * k + 2);
}

inline void run_dynamics(const ExperimentConfig& c, OutputGuard& out, ResultBundle& b, const RunOptions& opt) {
  if (std::find(c.tracking.levels.begin(), c.tracking.levels.end(), c.tracking.source) == c.tracking.levels.end()) {
    throw StageError("config", "tracking.levels: must include the source level", kExitConfig);
  }
  const DrivenModel model = in_stage("model", [&] { return build_model(c.model); });
  const SectorSolver solver = in_stage("model", [&] { return model.sector_solver(solver_levels(c)); });
  const int target = in_stage("model", [&] { return nearest_target(solver, c.schedule.start, c.tracking.source); });
  const SweepSchedule schedule = in_stage("schedule", [&] { return build_schedule(solver, c.schedule); });
  const double T = schedule.duration();

  std::optional<NoiseProcess> noise;
  if (c.noise.amplitude > 0.0) {
    noise = in_stage("noise", [&] { return sample_noise(c.noise.amplitude, c.noise.interval, c.noise_seed(), T); });
  }
  const NoiseProcess* np = noise ? &*noise : nullptr;
  const TracedRun run = trace_run(c, model, solver, schedule, np, "");
  const FidelityTrace& tr = run.trace;

  const double eps_max = *std::max_element(tr.eps_inst.begin(), tr.eps_inst.end());
  const double eps_min = *std::min_element(tr.eps_inst.begin(), tr.eps_inst.end());
  const double bound_eps = c.schedule.kind == ScheduleKind::epsilon_fixed ? c.schedule.epsilon : eps_max;
  const GapMinimum gap = in_stage("gap", [&] {
    return min_gap(solver, c.tracking.source, target, std::min(c.schedule.start, c.schedule.end),
                   std::max(c.schedule.start, c.schedule.end), 100);
  });

  auto& s = b.summary;
  s["T"] = T;
  s["epsilon"] = c.schedule.kind == ScheduleKind::epsilon_fixed ? c.schedule.epsilon : eps_max;
  s["epsilon_min"] = eps_min;
  s["epsilon_max"] = eps_max;
  s["fbar_1"] = run.fbar;
  s["min_f1"] = tr.min_of(c.tracking.source);
  for (std::size_t k = 0; k < tr.tracked.size(); ++k) {
    const int n = tr.tracked[k];
    if (n == c.tracking.source) continue;
    s["max_f" + std::to_string(n)] = tr.max_of(n);
  }
  s["max_off_sector_weight"] = max_abs(tr.off_sector_weight);
  s["t_star"] = run.t_star.t_star;
  s["t_star_flagged"] = run.t_star.flagged ? 1.0 : 0.0;
  s["min_gap"] = gap.gap;
  s["min_gap_param"] = gap.param;
  s["target_level"] = target;
  s["rate_capped"] = schedule.rate_capped ? 1.0 : 0.0;
  s["capped_fraction"] = schedule.capped_fraction;
  s["max_norm_error"] = run.stats.max_norm_error;
  s["max_step_drift"] = run.stats.max_step_drift;
  s["steps"] = static_cast<double>(run.stats.accepted);
  s["rejected_steps"] = static_cast<double>(run.stats.rejected);
  const AnalyticBounds bounds = analytic_bounds(bound_eps);
  s["f1_lower_bound"] = bounds.f1_lower;
  s["f3_upper_bound"] = bounds.f3_upper;

  std::optional<TracedRun> lin;
  if (c.compare_linear) {
    ScheduleConfig lc = c.schedule;
    lc.kind = ScheduleKind::linear;
    lc.duration = T;
    const SweepSchedule ls = in_stage("schedule (linear)", [&] { return build_linear_schedule(lc); });
    lin = trace_run(c, model, solver, ls, np, " (linear)");
    s["fbar_1_linear"] = lin->fbar;
    s["min_f1_linear"] = lin->trace.min_of(c.tracking.source);
    s["t_star_linear"] = lin->t_star.t_star;
    s["t_star_flagged_linear"] = lin->t_star.flagged ? 1.0 : 0.0;
    s["max_norm_error_linear"] = lin->stats.max_norm_error;
  }

  b.validations = run_checks(c, model, solver, &schedule, &tr, target);

  in_stage("output", [&] {
    const auto comments = header_comments(c);
    out.write("fidelity.csv", render_csv(fidelity_table(tr, bound_eps), comments));
    CsvTable st{{"t", "R", "v", "eps_inst"}, {}};
    for (std::size_t i = 0; i < tr.size(); ++i) st.add({tr.times[i], tr.params[i], tr.rates[i], tr.eps_inst[i]});
    out.write("schedule.csv", render_csv(st, comments));
    if (lin) {
      const double lin_eps = *std::max_element(lin->trace.eps_inst.begin(), lin->trace.eps_inst.end());
      out.write("fidelity_linear.csv", render_csv(fidelity_table(lin->trace, lin_eps), comments));
    }
    if (c.output.svg) {
      out.write("fidelity.svg", render_svg(fidelity_chart(c, tr, bound_eps, c.id + ": fidelities"), svg_comment(c)));
      Chart sc{c.id + ": schedule", "t", model.parameter_name, {}, false, false};
      sc.series.push_back({to_string(c.schedule.kind), tr.times, tr.params, palette()[1]});
      if (lin) sc.series.push_back({"linear", lin->trace.times, lin->trace.params, palette()[0], true});
      out.write("schedule.svg", render_svg(sc, svg_comment(c)));
      if (lin) {
        Chart lc{c.id + ": ground-state fidelity", "t", "F_1", {}, false, false};
        lc.series.push_back({"epsilon-fixed", tr.times, tr.column(c.tracking.source), palette()[1]});
        lc.series.push_back(
            {"linear", lin->trace.times, lin->trace.column(c.tracking.source), palette()[0], true});
        out.write("compare_linear.svg", render_svg(lc, svg_comment(c)));
      }
    }
    if (!c.validation.checks.empty()) out.write("validation.json", validation_text(&c, b.validations));
    return 0;
  });

  if (opt.keep_traces) {
    b.schedule = schedule;
    b.trace = tr;
    if (lin) b.linear_trace = lin->trace;
  }
}

inline void run_schedule_only(const ExperimentConfig& c, OutputGuard& out, ResultBundle& b) {
  const DrivenModel model = in_stage("model", [&] { return build_model(c.model); });
  const SectorSolver solver = in_stage("model", [&] { return model.sector_solver(solver_levels(c)); });
  const SweepSchedule schedule = in_stage("schedule", [&] { return build_schedule(solver, c.schedule); });
  const std::vector<double> times = uniform_times(schedule.duration(), c.output.samples);
  CsvTable st{{"t", "R", "v", "eps_inst"}, {}};
  in_stage("schedule", [&] {
    SectorSpectrum prev;
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double r = schedule.param_at(times[i]), v = schedule.rate_at(times[i]);
      SectorSpectrum spec = solver.solve(r, i ? &prev : nullptr);
      st.add({times[i], r, v,
              sdac_epsilon(spec, solver.hamiltonian().derivative(0), v, c.tracking.source, c.schedule.targets)});
      prev = std::move(spec);
    }
    return 0;
  });
  b.summary["T"] = schedule.duration();
  b.summary["rate_capped"] = schedule.rate_capped ? 1.0 : 0.0;
  b.summary["capped_fraction"] = schedule.capped_fraction;
  b.summary["knots"] = static_cast<double>(schedule.knot_count);
  b.validations = run_checks(c, model, solver, &schedule, nullptr, nearest_target(solver, c.schedule.start, c.tracking.source));
  in_stage("output", [&] {
    out.write("schedule.csv", render_csv(st, header_comments(c)));
    if (c.output.svg) {
      Chart ch{c.id + ": schedule", "t", model.parameter_name, {}, false, false};
      Series s{to_string(c.schedule.kind), {}, {}, palette()[1]};
      for (const auto& row : st.rows) {
        s.x.push_back(row[0]);
        s.y.push_back(row[1]);
      }
      ch.series.push_back(std::move(s));
      out.write("schedule.svg", render_svg(ch, svg_comment(c)));
    }
    if (!c.validation.checks.empty()) out.write("validation.json", validation_text(&c, b.validations));
    return 0;
  });
  b.schedule = schedule;
}

inline void run_spectrum(const ExperimentConfig& c, OutputGuard& out, ResultBundle& b) {
  const DrivenModel model = in_stage("model", [&] { return build_model(c.model); });
  const int k = c.tracking.energies;
  const SectorSolver solver = in_stage("model", [&] { return model.sector_solver(k); });
  CsvTable t;
  t.columns = {"R"};
  for (int n = 1; n <= k; ++n) t.columns.push_back("E_" + std::to_string(n));
  for (int n = 1; n <= k; ++n) t.columns.push_back("lambda_" + std::to_string(n));
  in_stage("spectrum", [&] {
    SectorSpectrum prev;
    const int m = c.output.samples;
    for (int i = 0; i < m; ++i) {
      const double r = i + 1 == m ? c.schedule.end : c.schedule.start + (c.schedule.end - c.schedule.start) * i / (m - 1);
      SectorSpectrum spec = solver.solve(r, i ? &prev : nullptr);
      std::vector<double> row{r};
      for (int n = 1; n <= k; ++n) row.push_back(spec.level(n).energy);
      for (int n = 1; n <= k; ++n) row.push_back(spec.level(n).label);
      t.add(std::move(row));
      prev = std::move(spec);
    }
    return 0;
  });
  b.summary["levels"] = k;
  b.summary["points"] = c.output.samples;
  b.validations = run_checks(c, model, solver, nullptr, nullptr,
                             in_stage("model", [&] { return nearest_target(solver, c.schedule.start, c.tracking.source); }));
  in_stage("output", [&] {
    out.write("spectrum.csv", render_csv(t, header_comments(c)));
    if (c.output.svg) {
      Chart ch{c.id + ": spectrum", model.parameter_name, "energy", {}, false, false};
      for (int n = 1; n <= k; ++n) {
        Series s{"E_" + std::to_string(n), {}, {}, palette()[static_cast<std::size_t>(n - 1) % palette().size()]};
        for (const auto& row : t.rows) {
          s.x.push_back(row[0]);
          s.y.push_back(row[static_cast<std::size_t>(n)]);
        }
        s.dashed = t.rows.front()[static_cast<std::size_t>(k + n)] < 0.0;
        ch.series.push_back(std::move(s));
      }
      out.write("spectrum.svg", render_svg(ch, svg_comment(c)));
    }
    if (!c.validation.checks.empty()) out.write("validation.json", validation_text(&c, b.validations));
    return 0;
  });
}

inline void run_gap(const ExperimentConfig& c, OutputGuard& out, ResultBundle& b) {
  if (c.model.type != "collective_ising") {
    throw StageError("config", "model.type: gap scaling needs collective_ising", kExitConfig);
  }
  const GapScaling g = in_stage("gap", [&] {
    return gap_scaling_exponent(c.gap.sizes, c.model.coupling, std::min(c.schedule.start, c.schedule.end),
                                std::max(c.schedule.start, c.schedule.end), c.gap.coarse, c.gap.lower, c.gap.upper);
  });
  CsvTable t{{"N", "R_star", "gap"}, {}};
  for (std::size_t i = 0; i < g.sizes.size(); ++i) t.add({double(g.sizes[i]), g.minima[i].param, g.minima[i].gap});
  b.summary["exponent"] = g.exponent;
  in_stage("output", [&] {
    auto comments = header_comments(c);
    comments.push_back("fitted_exponent " + format_number(g.exponent));
    out.write("gap.csv", render_csv(t, comments));
    if (c.output.svg) {
      Chart ch{c.id + ": minimum gap", "N", "min gap", {}, true, true};
      Series s{"min gap", {}, {}, palette()[1]};
      s.markers = true;
      for (const auto& row : t.rows) {
        s.x.push_back(row[0]);
        s.y.push_back(row[2]);
      }
      // fitted power law through the geometric mean
      double lx = 0, ly = 0;
      for (std::size_t i = 0; i < s.x.size(); ++i) lx += std::log(s.x[i]), ly += std::log(s.y[i]);
      lx /= static_cast<double>(s.x.size());
      ly /= static_cast<double>(s.x.size());
      Series fit{"fit N^" + detail::fmt_tick(g.exponent), {}, {}, palette()[0], true};
      for (double x : {s.x.front(), s.x.back()}) {
        fit.x.push_back(x);
        fit.y.push_back(std::exp(ly + g.exponent * (std::log(x) - lx)));
      }
      ch.series.push_back(std::move(s));
      ch.series.push_back(std::move(fit));
      out.write("gap.svg", render_svg(ch, svg_comment(c)));
    }
    return 0;
  });
}

}  // namespace detail

/// Runs one experiment and writes its bundle. Errors remove partial output.
inline ResultBundle run(const ExperimentConfig& c, const RunOptions& opt = {}) {
  const std::filesystem::path dir = opt.out.value_or(std::filesystem::path(c.output.directory));
  ResultBundle b;
  b.id = c.id;
  b.directory = dir;
  std::optional<detail::OutputGuard> guard;
  in_stage("output", [&] {
    guard.emplace(dir);
    return 0;
  });
  switch (c.kind) {
    case ExperimentKind::dynamics: detail::run_dynamics(c, *guard, b, opt); break;
    case ExperimentKind::schedule: detail::run_schedule_only(c, *guard, b); break;
    case ExperimentKind::spectrum: detail::run_spectrum(c, *guard, b); break;
    case ExperimentKind::gap_scaling: detail::run_gap(c, *guard, b); break;
  }
  in_stage("output", [&] {
    std::vector<std::string> files = guard->files();
    files.push_back("metadata.json");
    b.files = files;
    guard->write("metadata.json", detail::metadata_text(c, b));
    return 0;
  });
  guard->commit();
  return b;
}

// ---- scans ----------------------------------------------------------------

struct ScanResult {
  std::string axis;
  std::vector<double> values;
  std::vector<ResultBundle> runs;
  std::filesystem::path directory;

  bool passed() const {
    return std::all_of(runs.begin(), runs.end(), [](const ResultBundle& r) { return r.passed(); });
  }
};

/// Config of scan point `index`: the axis value substituted and, unless the
/// axis is itself a seed, seed = master seed + index.
inline ExperimentConfig scan_point(const ExperimentConfig& c, std::size_t index) {
  if (!c.scan) throw ConfigurationError("config has no [scan] section", "scan");
  toml::table t = c.source;
  t.erase("scan");
  t = with_override(t, c.scan->axis, c.scan->values.at(index));
  if (c.scan->axis != "experiment.seed" && c.scan->axis != "noise.seed") {
    t = with_integer_override(t, "experiment.seed", static_cast<std::int64_t>(c.seed + index));
  }
  char id[32];
  std::snprintf(id, sizeof id, "_%03zu", index);
  t = with_override(t, "experiment.id", c.id + id);
  return config_from_table(t);
}

inline std::string run_dir_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run_%03zu", index);
  return buf;
}

inline ScanResult scan(const ExperimentConfig& c, int jobs = 1, std::optional<std::filesystem::path> out = {}) {
  if (!c.scan) throw StageError("config", "scan: config has no [scan] section", kExitConfig);
  const std::filesystem::path root = out.value_or(std::filesystem::path(c.output.directory));
  ScanResult res;
  res.axis = c.scan->axis;
  res.values = c.scan->values;
  res.directory = root;
  const std::size_t n = res.values.size();
  std::vector<ExperimentConfig> cfgs;
  for (std::size_t i = 0; i < n; ++i) cfgs.push_back(in_stage("config", [&] { return scan_point(c, i); }));

  res.runs.resize(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        res.runs[i] = run(cfgs[i], RunOptions{root / run_dir_name(i), false});
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  std::vector<std::thread> pool;
  for (int k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const StageError& e) {
      throw StageError(run_dir_name(i) + " " + e.stage(), std::string(e.what()).substr(e.stage().size() + 2),
                       e.exit_code());
    }
  }

  static const std::vector<std::string> preferred{"T",       "fbar_1",        "min_f1",  "max_f2",
                                                  "max_f3",  "min_gap",       "t_star",  "fbar_1_linear",
                                                  "min_f1_linear", "max_off_sector_weight", "exponent"};
  std::vector<std::string> keys;
  for (const auto& k : preferred) {
    if (std::all_of(res.runs.begin(), res.runs.end(), [&](const ResultBundle& r) { return r.summary.count(k) > 0; })) {
      keys.push_back(k);
    }
  }
  CsvTable t;
  t.columns = {"index", c.scan->axis};
  t.columns.insert(t.columns.end(), keys.begin(), keys.end());
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row{static_cast<double>(i), res.values[i]};
    for (const auto& k : keys) row.push_back(res.runs[i].summary.at(k));
    t.add(std::move(row));
  }
  in_stage("output", [&] {
    auto comments = detail::header_comments(c);
    comments.push_back("scan_axis " + c.scan->axis);
    write_text(root / "summary.csv", render_csv(t, comments));
    if (c.output.svg && !keys.empty()) {
      Chart ch{c.id + ": scan over " + c.scan->axis, c.scan->axis, "value", {}, false, false};
      std::size_t colour = 0;
      for (const std::string k : {"fbar_1", "min_f1", "fbar_1_linear", "max_f3", "exponent"}) {
        const auto it = std::find(keys.begin(), keys.end(), k);
        if (it == keys.end()) continue;
        const std::size_t col = 2 + static_cast<std::size_t>(it - keys.begin());
        Series s{k, {}, {}, palette()[colour++ % palette().size()]};
        s.markers = true;
        s.dashed = k == "fbar_1_linear";
        for (const auto& row : t.rows) {
          s.x.push_back(row[1]);
          s.y.push_back(row[col]);
        }
        ch.series.push_back(std::move(s));
      }
      if (ch.series.empty()) {
        Series s{"T", {}, {}, palette()[0]};
        for (const auto& row : t.rows) s.x.push_back(row[1]), s.y.push_back(row[2]);
        ch.series.push_back(std::move(s));
      }
      write_text(root / "summary.svg", render_svg(ch, detail::svg_comment(c)));
    }
    nlohmann::ordered_json j;
    j["version"] = kVersion;
    j["experiment"] = c.id;
    j["config_hash"] = hex64(c.hash);
    j["config"] = detail::config_json(c.source);
    j["axis"] = c.scan->axis;
    j["values"] = c.scan->values;
    nlohmann::ordered_json runs = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < n; ++i) {
      runs.push_back({{"index", i},
                      {"directory", run_dir_name(i)},
                      {"config_hash", hex64(cfgs[i].hash)},
                      {"seed", cfgs[i].seed},
                      {"passed", res.runs[i].passed()}});
    }
    j["runs"] = runs;
    write_text(root / "scan.json", j.dump(2) + "\n");
    return 0;
  });
  return res;
}

// ---- canned figures ---------------------------------------------------------

inline std::filesystem::path config_dir() {
  if (const char* env = std::getenv("SPQA_CONFIG_DIR"); env && *env) return env;
#ifdef SPQA_CONFIG_DIR
  return SPQA_CONFIG_DIR;
#else
  return "configs";
#endif
}

/// Canned config files for a figure id: "fig5" selects fig5a, fig5c, ...;
/// "fig5a" selects just that one.
inline std::vector<std::filesystem::path> figure_configs(const std::string& fig, const std::filesystem::path& dir) {
  static const std::regex id_re("^fig([1-9])([a-z]*)$");
  static const std::regex file_re("^fig([0-9]+)([a-z]*)\\.toml$");
  std::smatch want;
  if (!std::regex_match(fig, want, id_re)) throw ConfigurationError("expected fig1 ... fig9", "figure");
  std::vector<std::filesystem::path> out;
  if (std::filesystem::is_directory(dir)) {
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
      const std::string name = e.path().filename().string();
      std::smatch m;
      if (!std::regex_match(name, m, file_re) || m[1] != want[1]) continue;
      const std::string sub = m[2], req = want[2];
      if (req.empty() || sub.rfind(req, 0) == 0) out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw ConfigurationError("no canned config for " + fig + " in " + dir.string(), "figure");
  return out;
}

struct Reproduction {
  std::string config;
  std::optional<ResultBundle> run;
  std::optional<ScanResult> scan;

  bool passed() const { return run ? run->passed() : scan ? scan->passed() : true; }
};

inline std::vector<Reproduction> reproduce(const std::string& fig, const std::filesystem::path& out_root, int jobs = 1,
                                           const std::filesystem::path& dir = config_dir()) {
  std::vector<Reproduction> out;
  for (const auto& path : in_stage("config", [&] { return figure_configs(fig, dir); })) {
    const ExperimentConfig c = in_stage("config", [&] { return load_config(path); });
    Reproduction r;
    r.config = path.filename().string();
    const std::filesystem::path target = out_root / path.stem();
    if (c.scan) {
      r.scan = scan(c, jobs, target);
    } else {
      r.run = run(c, RunOptions{target, false});
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---- stand-alone oracle battery --------------------------------------------

/// The oracle checks on default parameters, independent of any config.
inline std::vector<ValidationReport> default_validation_battery() {
  std::vector<ValidationReport> out;
  out.push_back(in_stage("validation", [] { return dicke_vs_full_spectrum(8, -1.0, -0.5, 0.0); }));

  const SingleParticleModel particle = build_single_particle(GridConfig{}, 1.0, std::sqrt(2.0), 0.0);
  const SectorSolver ps = particle.driven.sector_solver(6);
  out.push_back(in_stage("validation", [&] {
    const HellmannFeynman hf = hellmann_feynman_residual(ps, 5.0, 1, 3, 1e-5);
    return ValidationReport("hellmann_feynman", hf.residual, 1e-6,
                            {{"param", 5.0}, {"m", 1}, {"n", 3}, {"step", 1e-5}});
  }));
  out.push_back(in_stage("validation", [&] {
    ScheduleConfig sc;
    sc.start = 0.0;
    sc.end = 20.0;
    sc.epsilon = 0.02;
    const SweepSchedule s = build_epsilon_fixed_schedule(ps, sc);
    const std::vector<double> times = uniform_times(s.duration(), 400);
    const EvolutionTrajectory traj = propagate(particle.driven, s, ps.solve(0.0).level(1).vector, times);
    const FidelityTrace tr = fidelity_trace(traj, ps, {1, 3}, {1, {}, 4});
    return two_level_reduction_check(particle.driven, tr, s, 0.02, 3);
  }));
  out.push_back(in_stage("validation", [] {
    const CollectiveSpinModel small = build_collective_ising(6, -1.0, 0.0);
    ScheduleConfig sc;
    sc.start = -2.0;
    sc.end = 0.0;
    sc.epsilon = 0.05;
    const SweepSchedule s = build_epsilon_fixed_schedule(small.driven, sc);
    return dicke_vs_full_dynamics(6, -1.0, 0.0, s);
  }));
  out.push_back(in_stage("validation", [] {
    const CollectiveSpinModel small = build_collective_ising(6, -1.0, 0.0);
    ScheduleConfig sc;
    sc.start = -2.0;
    sc.end = 0.0;
    sc.epsilon = 0.05;
    const SweepSchedule s = build_epsilon_fixed_schedule(small.driven, sc);
    return dicke_vs_full_dynamics(6, -1.0, 1e-3, s);
  }));
  return out;
}

inline void write_validation(const std::filesystem::path& dir, const std::vector<ValidationReport>& reports) {
  std::filesystem::create_directories(dir);
  write_text(dir / "validation.json", detail::validation_text(nullptr, reports));
}

}  // namespace spqa
