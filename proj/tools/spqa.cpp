// spqa: command-line front end for the adiabatic-sweep engine.

#include <cli11/CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <limits>

#include "spqa/spqa.hpp"

namespace {

struct Common {
  std::string config;
  std::string out;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  std::optional<int> samples;
};

spqa::ExperimentConfig load_with_overrides(const Common& o, std::optional<spqa::ExperimentKind> kind) {
  return spqa::in_stage("config", [&] {
    std::ifstream in(o.config, std::ios::binary);
    if (!in) throw spqa::ConfigurationError("cannot read config file " + o.config, "--config");
    std::ostringstream ss;
    ss << in.rdbuf();
    toml::table t = spqa::parse_toml(ss.str(), o.config);
    if (o.seed) {
      if (*o.seed > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
        throw spqa::ConfigurationError("seed must fit in a signed 64-bit TOML integer", "--seed");
      }
      t = spqa::with_integer_override(t, "experiment.seed", static_cast<std::int64_t>(*o.seed));
    }
    if (o.samples) t = spqa::with_integer_override(t, "output.samples", *o.samples);
    if (kind) t = spqa::with_override(t, "experiment.kind", spqa::to_string(*kind));
    return spqa::config_from_table(t);
  });
}

void print_summary(const spqa::ResultBundle& b) {
  std::cout << b.id << " -> " << b.directory.string() << "\n";
  for (const auto& [k, v] : b.summary) std::cout << "  " << k << " = " << spqa::format_number(v) << "\n";
}

int print_reports(const std::vector<spqa::ValidationReport>& reports) {
  bool ok = true;
  for (const auto& r : reports) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.check << " residual=" << spqa::format_number(r.residual)
              << " tolerance=" << spqa::format_number(r.tolerance) << "\n";
    ok = ok && r.pass;
  }
  return ok ? spqa::kExitOk : spqa::kExitValidation;
}

int run_single(const Common& o, spqa::ExperimentKind kind) {
  const spqa::ExperimentConfig c = load_with_overrides(o, kind);
  if (c.scan) {
    throw spqa::StageError("config", "scan: this config defines a scan; use the scan subcommand", spqa::kExitConfig);
  }
  spqa::RunOptions opt;
  if (!o.out.empty()) opt.out = o.out;
  opt.keep_traces = false;
  const spqa::ResultBundle b = spqa::run(c, opt);
  print_summary(b);
  return b.validations.empty() ? spqa::kExitOk : print_reports(b.validations);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symmetry-protected adiabatic sweeps: spectra, schedules, dynamics and oracle checks"};
  app.require_subcommand(1);
  Common o;
  std::string figure;

  auto add_common = [&](CLI::App* sub, bool need_config) {
    auto* cfg = sub->add_option("--config", o.config, "experiment TOML file")->check(CLI::ExistingFile);
    if (need_config) cfg->required();
    sub->add_option("--out", o.out, "output directory (overrides output.directory)");
    sub->add_option("--jobs", o.jobs, "concurrent runs for scans")->check(CLI::PositiveNumber);
    sub->add_option("--seed", o.seed, "master seed (overrides experiment.seed)");
    sub->add_option("--samples", o.samples, "stored samples (overrides output.samples)")->check(CLI::Range(2, 1 << 24));
  };
  CLI::App* spectrum = app.add_subcommand("spectrum", "lowest levels and sector labels along the sweep");
  CLI::App* schedule = app.add_subcommand("schedule", "build and tabulate the sweep schedule");
  CLI::App* evolve = app.add_subcommand("evolve", "propagate and trace instantaneous fidelities");
  CLI::App* scan = app.add_subcommand("scan", "run every point of the [scan] axis");
  CLI::App* reproduce = app.add_subcommand("reproduce", "run the canned configs of one figure");
  CLI::App* validate = app.add_subcommand("validate", "oracle checks (default battery, or those a config requests)");
  for (CLI::App* s : {spectrum, schedule, evolve, scan}) add_common(s, true);
  add_common(validate, false);
  reproduce->add_option("figure", figure, "fig1 ... fig9, optionally with a panel suffix (fig5a)")->required();
  reproduce->add_option("--out", o.out, "output root (default: out)");
  reproduce->add_option("--jobs", o.jobs, "concurrent runs for scans")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return spqa::kExitConfig;  // bad command line counts as a config error
  }

  try {
    if (spectrum->parsed()) return run_single(o, spqa::ExperimentKind::spectrum);
    if (schedule->parsed()) return run_single(o, spqa::ExperimentKind::schedule);
    if (evolve->parsed()) return run_single(o, spqa::ExperimentKind::dynamics);
    if (scan->parsed()) {
      const spqa::ExperimentConfig c = load_with_overrides(o, std::nullopt);
      const spqa::ScanResult r =
          spqa::scan(c, o.jobs, o.out.empty() ? std::nullopt : std::optional<std::filesystem::path>(o.out));
      std::cout << c.id << ": " << r.runs.size() << " runs over " << r.axis << " -> " << r.directory.string() << "\n";
      for (std::size_t i = 0; i < r.runs.size(); ++i) {
        if (!r.runs[i].validations.empty() && !r.runs[i].passed()) {
          std::cout << "  run " << i << ": validation failed\n";
        }
      }
      return r.passed() ? spqa::kExitOk : spqa::kExitValidation;
    }
    if (reproduce->parsed()) {
      const auto results = spqa::reproduce(figure, o.out.empty() ? "out" : o.out, o.jobs);
      bool ok = true;
      for (const auto& r : results) {
        std::cout << r.config << ": " << (r.passed() ? "done" : "validation failed") << "\n";
        if (r.run) print_summary(*r.run);
        ok = ok && r.passed();
      }
      return ok ? spqa::kExitOk : spqa::kExitValidation;
    }
    if (validate->parsed()) {
      if (o.config.empty()) {
        const auto reports = spqa::default_validation_battery();
        spqa::write_validation(o.out.empty() ? "out/validation" : o.out, reports);
        return print_reports(reports);
      }
      const spqa::ExperimentConfig c = load_with_overrides(o, std::nullopt);
      if (c.validation.checks.empty()) {
        throw spqa::StageError("config", "validation.checks: the config requests no checks", spqa::kExitConfig);
      }
      spqa::RunOptions opt;
      if (!o.out.empty()) opt.out = o.out;
      opt.keep_traces = false;
      return print_reports(spqa::run(c, opt).validations);
    }
  } catch (const spqa::StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const spqa::ConfigurationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return spqa::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return spqa::kExitEngine;
  }
  return spqa::kExitOk;
}
