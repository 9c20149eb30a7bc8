#pragma once

// Experiment definitions read from TOML. Unknown sections and keys are
// rejected with the offending field named, so typos never silently fall
// back to defaults.

#include <tomlplusplus/toml.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "spqa/engine/propagator.hpp"
#include "spqa/engine/schedule.hpp"

namespace spqa {

enum class ExperimentKind { dynamics, schedule, spectrum, gap_scaling };

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::dynamics: return "dynamics";
    case ExperimentKind::schedule: return "schedule";
    case ExperimentKind::spectrum: return "spectrum";
    case ExperimentKind::gap_scaling: return "gap_scaling";
  }
  return "?";
}

struct ModelConfig {
  std::string type = "single_particle";  // or collective_ising
  // single particle
  double omega = 1.0;
  double width = std::sqrt(2.0);
  double tilt = 0.0;
  double half_width = 10.0;
  int grid_points = 513;
  // collective Ising
  int n_spins = 100;
  double coupling = -1.0;
  double bias = 0.0;
};

struct TrackingConfig {
  std::vector<int> levels{1, 2, 3};
  int source = 1;
  std::optional<double> transition;  // enables T* detection; otherwise T* = 0
  int energies = 6;
};

struct NoiseConfig {
  double amplitude = 0.0;
  double interval = 1.0;
  std::optional<std::uint64_t> seed;  // defaults to the experiment seed
};

struct OutputConfig {
  std::string directory = "out";
  int samples = 400;
  bool svg = true;
};

struct ScanConfig {
  std::string axis;  // "section.key"
  std::vector<double> values;
};

struct GapConfig {
  std::vector<int> sizes{20, 40, 80, 160, 320};
  int lower = 1;
  int upper = 3;
  int coarse = 400;
};

inline const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names{"hellmann_feynman", "two_level", "dicke_full_spectrum",
                                              "dicke_full_dynamics", "forbidden_transition"};
  return names;
}

struct ValidationConfig {
  std::vector<std::string> checks;
  int oracle_spins = 6;
  double fd_step = 1e-5;        // finite-difference step in R
  std::optional<double> probe;  // parameter value for the finite-difference check
};

struct ExperimentConfig {
  std::string id = "experiment";
  ExperimentKind kind = ExperimentKind::dynamics;
  std::uint64_t seed = 0;
  ModelConfig model;
  ScheduleConfig schedule;
  StepControl propagation;
  TrackingConfig tracking;
  NoiseConfig noise;
  OutputConfig output;
  std::optional<ScanConfig> scan;
  bool compare_linear = false;
  GapConfig gap;
  ValidationConfig validation;

  toml::table source;     // parsed input after overrides
  std::string canonical;  // normalized TOML text used for echo and hash
  std::uint64_t hash = 0;

  std::uint64_t noise_seed() const { return noise.seed.value_or(seed); }
};

inline std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace detail {

/// Typed, use-tracked view of one TOML table.
class Section {
 public:
  Section(const toml::table* table, std::string name) : table_(table), name_(std::move(name)) {}

  bool has(const std::string& key) const { return table_ && table_->contains(key); }

  double number(const std::string& key, double fallback) {
    const toml::node* n = get(key);
    if (!n) return fallback;
    if (auto v = n->value_exact<double>()) return *v;
    if (auto v = n->value_exact<std::int64_t>()) return static_cast<double>(*v);
    throw ConfigurationError("expected a number", field(key));
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    const toml::node* n = get(key);
    if (!n) return fallback;
    if (auto v = n->value_exact<std::int64_t>()) return *v;
    throw ConfigurationError("expected an integer", field(key));
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const toml::node* n = get(key);
    if (!n) return fallback;
    if (auto v = n->value_exact<std::string>()) return *v;
    throw ConfigurationError("expected a string", field(key));
  }

  bool boolean(const std::string& key, bool fallback) {
    const toml::node* n = get(key);
    if (!n) return fallback;
    if (auto v = n->value_exact<bool>()) return *v;
    throw ConfigurationError("expected true or false", field(key));
  }

  std::vector<double> numbers(const std::string& key) {
    std::vector<double> out;
    for (const toml::node& e : array(key)) {
      if (auto v = e.value_exact<double>()) {
        out.push_back(*v);
      } else if (auto i = e.value_exact<std::int64_t>()) {
        out.push_back(static_cast<double>(*i));
      } else {
        throw ConfigurationError("expected an array of numbers", field(key));
      }
    }
    return out;
  }

  std::vector<int> integers(const std::string& key) {
    std::vector<int> out;
    for (const toml::node& e : array(key)) {
      auto i = e.value_exact<std::int64_t>();
      if (!i) throw ConfigurationError("expected an array of integers", field(key));
      out.push_back(static_cast<int>(*i));
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key) {
    std::vector<std::string> out;
    for (const toml::node& e : array(key)) {
      auto s = e.value_exact<std::string>();
      if (!s) throw ConfigurationError("expected an array of strings", field(key));
      out.push_back(*s);
    }
    return out;
  }

  /// Rejects keys nobody asked for.
  void finish() const {
    if (!table_) return;
    for (const auto& [k, v] : *table_) {
      if (!used_.count(std::string(k.str()))) throw ConfigurationError("unknown key", field(std::string(k.str())));
    }
  }

  std::string field(const std::string& key) const { return name_ + "." + key; }

 private:
  const toml::node* get(const std::string& key) {
    used_.insert(key);
    return table_ ? table_->get(key) : nullptr;
  }

  const toml::array& array(const std::string& key) {
    static const toml::array empty;
    const toml::node* n = get(key);
    if (!n) return empty;
    if (!n->is_array()) throw ConfigurationError("expected an array", field(key));
    return *n->as_array();
  }

  const toml::table* table_;
  std::string name_;
  std::set<std::string> used_;
};

inline const toml::table* section_table(const toml::table& root, const std::string& name) {
  const toml::node* n = root.get(name);
  if (!n) return nullptr;
  if (!n->is_table()) throw ConfigurationError("expected a table", name);
  return n->as_table();
}

}  // namespace detail

inline std::string canonical_toml(const toml::table& t) {
  std::ostringstream os;
  os << t;
  return os.str();
}

/// Builds and validates an ExperimentConfig from a parsed table.
inline ExperimentConfig config_from_table(const toml::table& root) {
  static const std::set<std::string> sections{"experiment", "model",  "schedule", "propagation", "tracking", "noise",
                                              "output",     "scan",   "compare",  "gap",         "validation"};
  for (const auto& [k, v] : root) {
    if (!sections.count(std::string(k.str()))) throw ConfigurationError("unknown section", std::string(k.str()));
  }
  using detail::Section;
  ExperimentConfig c;
  c.source = root;
  c.canonical = canonical_toml(root);
  c.hash = fnv1a64(c.canonical);

  Section ex(detail::section_table(root, "experiment"), "experiment");
  c.id = ex.string("id", c.id);
  const std::string kind = ex.string("kind", "dynamics");
  if (kind == "dynamics") {
    c.kind = ExperimentKind::dynamics;
  } else if (kind == "schedule") {
    c.kind = ExperimentKind::schedule;
  } else if (kind == "spectrum") {
    c.kind = ExperimentKind::spectrum;
  } else if (kind == "gap_scaling") {
    c.kind = ExperimentKind::gap_scaling;
  } else {
    throw ConfigurationError("unknown experiment kind '" + kind + "'", "experiment.kind");
  }
  const std::int64_t seed = ex.integer("seed", 0);
  if (seed < 0) throw ConfigurationError("must be non-negative", "experiment.seed");
  c.seed = static_cast<std::uint64_t>(seed);
  ex.finish();

  Section mo(detail::section_table(root, "model"), "model");
  c.model.type = mo.string("type", c.model.type);
  if (c.model.type != "single_particle" && c.model.type != "collective_ising") {
    throw ConfigurationError("unknown model type '" + c.model.type + "'", "model.type");
  }
  c.model.omega = mo.number("omega", c.model.omega);
  c.model.width = mo.number("width", c.model.width);
  c.model.tilt = mo.number("tilt", c.model.tilt);
  c.model.half_width = mo.number("half_width", c.model.half_width);
  c.model.grid_points = static_cast<int>(mo.integer("grid_points", c.model.grid_points));
  c.model.n_spins = static_cast<int>(mo.integer("n_spins", c.model.n_spins));
  c.model.coupling = mo.number("coupling", c.model.coupling);
  c.model.bias = mo.number("bias", c.model.bias);
  mo.finish();
  if (c.model.type == "collective_ising" && c.model.n_spins < 2) throw ConfigurationError("need >= 2", "model.n_spins");
  if (c.model.type == "single_particle" && !(c.model.width > 0.0)) throw ConfigurationError("must be positive", "model.width");

  Section sc(detail::section_table(root, "schedule"), "schedule");
  const std::string skind = sc.string("kind", "epsilon_fixed");
  if (skind == "epsilon_fixed") {
    c.schedule.kind = ScheduleKind::epsilon_fixed;
  } else if (skind == "linear") {
    c.schedule.kind = ScheduleKind::linear;
  } else {
    throw ConfigurationError("unknown schedule kind '" + skind + "'", "schedule.kind");
  }
  c.schedule.start = sc.number("start", c.model.type == "single_particle" ? 0.0 : -2.0);
  c.schedule.end = sc.number("end", c.model.type == "single_particle" ? 20.0 : 0.0);
  c.schedule.epsilon = sc.number("epsilon", c.schedule.epsilon);
  c.schedule.duration = sc.number("duration", c.schedule.duration);
  const std::string targets = sc.string("targets", "nearest_same_sector");
  const int k = static_cast<int>(sc.integer("k", 1));
  if (targets == "nearest_same_sector") {
    c.schedule.targets = TargetPolicy::nearest();
  } else if (targets == "k_nearest_same_sector") {
    if (k < 1) throw ConfigurationError("must be >= 1", "schedule.k");
    c.schedule.targets = TargetPolicy::k_nearest(k);
  } else {
    throw ConfigurationError("unknown target policy '" + targets + "'", "schedule.targets");
  }
  c.schedule.tolerance = sc.number("tolerance", c.schedule.tolerance);
  c.schedule.rate_cap = sc.number("rate_cap", c.schedule.rate_cap);
  sc.finish();

  Section pr(detail::section_table(root, "propagation"), "propagation");
  const std::string mode = pr.string("mode", "adaptive");
  if (mode == "adaptive") {
    c.propagation.mode = StepControl::Mode::adaptive;
  } else if (mode == "fixed") {
    c.propagation.mode = StepControl::Mode::fixed;
  } else {
    throw ConfigurationError("unknown propagation mode '" + mode + "'", "propagation.mode");
  }
  c.propagation.tolerance = pr.number("tolerance", c.propagation.tolerance);
  c.propagation.fixed_step = pr.number("fixed_step", c.propagation.fixed_step);
  pr.finish();
  c.propagation.validate();

  Section tr(detail::section_table(root, "tracking"), "tracking");
  if (tr.has("levels")) c.tracking.levels = tr.integers("levels");
  c.tracking.source = static_cast<int>(tr.integer("source", c.tracking.source));
  if (tr.has("transition")) c.tracking.transition = tr.number("transition", 0.0);
  c.tracking.energies = static_cast<int>(tr.integer("energies", c.tracking.energies));
  tr.finish();
  if (c.tracking.levels.empty()) throw ConfigurationError("must not be empty", "tracking.levels");
  for (int n : c.tracking.levels) {
    if (n < 1) throw ConfigurationError("levels are numbered from 1", "tracking.levels");
  }
  if (c.tracking.energies < 1) throw ConfigurationError("must be >= 1", "tracking.energies");
  c.schedule.source_level = c.tracking.source;

  Section no(detail::section_table(root, "noise"), "noise");
  c.noise.amplitude = no.number("amplitude", c.noise.amplitude);
  c.noise.interval = no.number("interval", c.noise.interval);
  if (no.has("seed")) {
    const std::int64_t s = no.integer("seed", 0);
    if (s < 0) throw ConfigurationError("must be non-negative", "noise.seed");
    c.noise.seed = static_cast<std::uint64_t>(s);
  }
  no.finish();
  if (!(c.noise.amplitude >= 0.0)) throw ConfigurationError("must be non-negative", "noise.amplitude");
  if (!(c.noise.interval > 0.0)) throw ConfigurationError("must be positive", "noise.interval");

  Section ou(detail::section_table(root, "output"), "output");
  c.output.directory = ou.string("directory", c.output.directory);
  c.output.samples = static_cast<int>(ou.integer("samples", c.output.samples));
  c.output.svg = ou.boolean("svg", c.output.svg);
  ou.finish();
  if (c.output.samples < 2) throw ConfigurationError("need at least 2 samples", "output.samples");

  if (const toml::table* t = detail::section_table(root, "scan")) {
    Section sn(t, "scan");
    ScanConfig s;
    s.axis = sn.string("axis", "");
    s.values = sn.numbers("values");
    sn.finish();
    if (s.axis.empty()) throw ConfigurationError("a scan needs exactly one axis", "scan.axis");
    if (s.values.empty()) throw ConfigurationError("scan values must not be empty", "scan.values");
    const auto dot = s.axis.find('.');
    if (dot == std::string::npos || s.axis.find('.', dot + 1) != std::string::npos ||
        !sections.count(s.axis.substr(0, dot)) || s.axis.substr(0, dot) == "scan") {
      throw ConfigurationError("axis must be 'section.key'", "scan.axis");
    }
    c.scan = s;
  }

  Section co(detail::section_table(root, "compare"), "compare");
  c.compare_linear = co.boolean("linear", false);
  co.finish();
  if (c.compare_linear && c.schedule.kind != ScheduleKind::epsilon_fixed) {
    throw ConfigurationError("the linear comparison needs an epsilon_fixed schedule", "compare.linear");
  }

  Section ga(detail::section_table(root, "gap"), "gap");
  if (ga.has("sizes")) c.gap.sizes = ga.integers("sizes");
  c.gap.lower = static_cast<int>(ga.integer("lower", c.gap.lower));
  c.gap.upper = static_cast<int>(ga.integer("upper", c.gap.upper));
  c.gap.coarse = static_cast<int>(ga.integer("coarse", c.gap.coarse));
  ga.finish();

  Section va(detail::section_table(root, "validation"), "validation");
  c.validation.checks = va.strings("checks");
  c.validation.oracle_spins = static_cast<int>(va.integer("oracle_spins", c.validation.oracle_spins));
  c.validation.fd_step = va.number("fd_step", c.validation.fd_step);
  if (va.has("probe")) c.validation.probe = va.number("probe", 0.0);
  va.finish();
  for (const auto& name : c.validation.checks) {
    if (std::find(known_checks().begin(), known_checks().end(), name) == known_checks().end()) {
      throw ConfigurationError("unknown check '" + name + "'", "validation.checks");
    }
  }
  if (c.validation.oracle_spins < 2 || c.validation.oracle_spins > 8) {
    throw ConfigurationError("must lie in [2, 8]", "validation.oracle_spins");
  }

  if (c.kind == ExperimentKind::dynamics || c.kind == ExperimentKind::schedule) c.schedule.validate();
  return c;
}

inline toml::table parse_toml(const std::string& text, const std::string& origin = "<config>") {
  try {
    return toml::parse(text, origin);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << e.description() << " at " << origin << ":" << e.source().begin.line << ":" << e.source().begin.column;
    throw ConfigurationError(os.str());
  }
}

inline ExperimentConfig parse_config(const std::string& text) { return config_from_table(parse_toml(text)); }

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigurationError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_table(parse_toml(ss.str(), path.string()));
}

/// Copy of `root` with section.key replaced; integral keys keep integer type.
inline toml::table with_override(const toml::table& root, const std::string& dotted, double value) {
  const auto dot = dotted.find('.');
  if (dot == std::string::npos) throw ConfigurationError("override must be 'section.key'", dotted);
  const std::string section = dotted.substr(0, dot), key = dotted.substr(dot + 1);
  static const std::set<std::string> integral{"seed", "grid_points", "n_spins", "k", "source", "energies", "samples",
                                              "lower", "upper", "coarse", "oracle_spins"};
  toml::table out = root;
  if (!out.contains(section)) out.insert(section, toml::table{});
  toml::table* t = out.get(section)->as_table();
  if (!t) throw ConfigurationError("expected a table", section);
  if (integral.count(key)) {
    if (value != std::floor(value)) throw ConfigurationError("expected an integer", dotted);
    t->insert_or_assign(key, static_cast<std::int64_t>(value));
  } else {
    t->insert_or_assign(key, value);
  }
  return out;
}

inline toml::table with_integer_override(const toml::table& root, const std::string& dotted, std::int64_t value) {
  const auto dot = dotted.find('.');
  if (dot == std::string::npos) throw ConfigurationError("override must be 'section.key'", dotted);
  toml::table out = root;
  const std::string section = dotted.substr(0, dot);
  if (!out.contains(section)) out.insert(section, toml::table{});
  out.get(section)->as_table()->insert_or_assign(dotted.substr(dot + 1), value);
  return out;
}

inline toml::table with_override(const toml::table& root, const std::string& dotted, const std::string& value) {
  const auto dot = dotted.find('.');
  if (dot == std::string::npos) throw ConfigurationError("override must be 'section.key'", dotted);
  toml::table out = root;
  const std::string section = dotted.substr(0, dot);
  if (!out.contains(section)) out.insert(section, toml::table{});
  out.get(section)->as_table()->insert_or_assign(dotted.substr(dot + 1), value);
  return out;
}

}  // namespace spqa
