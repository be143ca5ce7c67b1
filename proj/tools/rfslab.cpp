#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rfs/config.hpp"
#include "rfs/errors.hpp"
#include "rfs/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string format = "csv";
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& opt, bool needs_config) {
  auto* c = cmd->add_option("--config", opt.config_path, "Scenario config (JSON)");
  if (needs_config) c->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", opt.seed, "Master seed, overrides the config");
  cmd->add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--out", opt.out, "Output file (default stdout)");
}

rfs::ScenarioConfig load(const CommonOptions& opt) {
  rfs::ScenarioConfig cfg = rfs::load_config(opt.config_path);
  if (opt.seed) cfg.seed = *opt.seed;
  return cfg;
}

void emit(const std::string& text, const CommonOptions& opt) {
  if (opt.out.empty()) {
    std::cout << text;
  } else {
    rfs::write_text(text, opt.out);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite point process and multi-object filtering laboratory"};
  app.require_subcommand(1);

  CommonOptions sim_opt, filter_opt, demo_opt, verify_opt;
  bool oracle = false;
  double demo_mean = 1.0;
  std::vector<std::size_t> demo_s{10, 100, 1000};
  std::size_t demo_cells = 10;
  std::size_t demo_region_cells = 3;

  auto* sim = app.add_subcommand("simulate", "Simulate ground truth and measurement sets");
  add_common(sim, sim_opt, true);

  auto* filter = app.add_subcommand("filter", "Run the PHD filter (and optionally the exact oracle) on a simulated scenario");
  add_common(filter, filter_opt, true);
  filter->add_flag("--oracle", oracle, "Run the exact Bayes filter alongside");

  auto* demo = app.add_subcommand("demo-iid-variance", "Variance of i.i.d. processes with fixed mean and growing s");
  add_common(demo, demo_opt, false);
  demo->add_option("--mean", demo_mean, "Total expected number of points")->check(CLI::PositiveNumber);
  demo->add_option("--s", demo_s, "Values of s")->expected(1, -1);
  demo->add_option("--cells", demo_cells, "Cells on [0, cells)")->check(CLI::PositiveNumber);
  demo->add_option("--region-cells", demo_region_cells, "Region B = first cells")->check(CLI::PositiveNumber);

  auto* verify = app.add_subcommand("verify", "Check the PHD filter against the exact Bayes filter");
  add_common(verify, verify_opt, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (sim->parsed()) {
      const auto cfg = load(sim_opt);
      emit(rfs::format_simulation(rfs::run_simulation(cfg), rfs::parse_format(sim_opt.format)), sim_opt);
    } else if (filter->parsed()) {
      auto cfg = load(filter_opt);
      if (oracle) cfg.oracle = true;
      cfg.validate();
      const auto report = rfs::run_experiment(cfg);
      emit(rfs::format_report(report, rfs::parse_format(filter_opt.format)), filter_opt);
      const auto mae = rfs::mean_absolute_count_error(report);
      for (std::size_t r = 0; r < mae.size(); ++r)
        std::fprintf(stderr, "mean absolute count error %s: %.6g\n", report.region_names[r].c_str(), mae[r]);
    } else if (demo->parsed()) {
      if (demo_region_cells > demo_cells) throw rfs::ConfigError("--region-cells exceeds --cells");
      for (std::size_t s : demo_s)
        if (static_cast<double>(s) < demo_mean) throw rfs::ConfigError("every s must be at least --mean");
      const auto space = rfs::GridSpace::uniform(0.0, static_cast<double>(demo_cells), demo_cells);
      const auto region = rfs::Region::range(space, 0, demo_region_cells);
      const auto rows = rfs::iid_variance_demo(region, demo_mean, demo_s);
      emit(rfs::format_iid_demo(rows, rfs::parse_format(demo_opt.format)), demo_opt);
    } else if (verify->parsed()) {
      const auto checks = rfs::run_oracle_verification(verify_opt.seed.value_or(1));
      bool ok = true;
      std::string text;
      for (const auto& c : checks) {
        char line[256];
        std::snprintf(line, sizeof line, "%s %s max_error=%.3e tolerance=%.1e\n", c.passed ? "PASS" : "FAIL",
                      c.name.c_str(), c.max_error, c.tolerance);
        text += line;
        ok = ok && c.passed;
      }
      emit(text, verify_opt);
      return ok ? kExitOk : kExitNumerical;
    }
  } catch (const rfs::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const rfs::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const rfs::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitOk;
}
