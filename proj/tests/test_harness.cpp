#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "rfs/config.hpp"
#include "rfs/errors.hpp"
#include "rfs/harness.hpp"

using namespace rfs;

namespace {

const std::filesystem::path config_dir = RFS_CONFIG_DIR;
const std::filesystem::path golden_dir = RFS_GOLDEN_DIR;

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Compares against a stored file; RFS_BLESS=1 rewrites it instead.
void check_golden(const std::string& name, const std::string& actual) {
  const auto path = golden_dir / name;
  if (std::getenv("RFS_BLESS") != nullptr) {
    write_text(actual, path);
    return;
  }
  REQUIRE_MESSAGE(std::filesystem::exists(path), "missing golden file " << path.string());
  CHECK(read_file(path) == actual);
}

ScenarioConfig small_config() { return load_config(config_dir / "oracle_small.json"); }

ScenarioConfig trivial_config(double survival, double birth, double detection, double clutter) {
  ScenarioConfig cfg = small_config();
  const Space& g = cfg.state_space;
  const Space& zg = cfg.measurement_space;
  cfg.motion = MotionModel{Kernel::identity(g), Field::constant(g, survival), Poisson{Field::constant(g, birth)}};
  cfg.sensor.detection = Field::constant(g, detection);
  cfg.sensor.clutter = Field::constant(zg, clutter);
  cfg.oracle = false;
  return cfg;
}

}  // namespace

TEST_CASE("simulate_step examples") {
  const ScenarioConfig still = trivial_config(1.0, 0.0, 0.9, 0.2);
  const Philox master(5);
  const PointConfig state{0, 2, 2, 3};
  for (std::size_t step = 1; step <= 5; ++step) CHECK(simulate_step(state, still, step, master).state == state);

  const ScenarioConfig quiet = trivial_config(0.9, 0.0, 0.7, 0.0);
  for (std::size_t step = 1; step <= 5; ++step) CHECK(simulate_step({}, quiet, step, master).measurements.empty());

  const ScenarioConfig blind = trivial_config(1.0, 0.0, 0.0, 0.0);
  CHECK(simulate_step(state, blind, 1, master).measurements.empty());
  const ScenarioConfig sure = trivial_config(1.0, 0.0, 1.0, 0.0);
  CHECK(simulate_step(state, sure, 1, master).measurements.size() == 4);
}

TEST_CASE("simulation is deterministic and matches the golden run") {
  ScenarioConfig cfg = small_config();
  cfg.steps = 8;
  const auto a = run_simulation(cfg);
  const auto b = run_simulation(cfg);
  REQUIRE(a.size() == 8);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].step == i + 1);
    CHECK(a[i].state == b[i].state);
    CHECK(a[i].measurements == b[i].measurements);
  }
  const std::string csv = format_simulation(a, ReportFormat::Csv);
  CHECK(csv == format_simulation(b, ReportFormat::Csv));
  check_golden("simulation_small.csv", csv);
  cfg.seed += 1;
  CHECK(format_simulation(run_simulation(cfg), ReportFormat::Csv) != csv);
}

TEST_CASE("zero steps give an empty report") {
  ScenarioConfig cfg = small_config();
  cfg.steps = 0;
  const ExperimentReport r = run_experiment(cfg);
  CHECK(r.steps.empty());
  const std::string csv = format_report(r, ReportFormat::Csv);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1);
  CHECK(csv.rfind("step,true_count,measurement_count,log_evidence", 0) == 0);
  CHECK(format_report(r, ReportFormat::Json) == "[]\n");
}

TEST_CASE("one step report matches the golden CSV") {
  ScenarioConfig cfg = small_config();
  cfg.steps = 1;
  const std::string csv = format_report(run_experiment(cfg), ReportFormat::Csv);
  check_golden("report_one_step.csv", csv);
}

TEST_CASE("oracle and PHD agree when the predicted process is Poisson") {
  const ExperimentReport r = run_experiment(small_config());
  REQUIRE(r.oracle);
  REQUIRE(r.steps.size() == 3);
  for (const StepReport& s : r.steps) {
    REQUIRE(s.regions.size() == 3);
    for (const RegionReport& reg : s.regions) {
      REQUIRE(reg.oracle_mean.has_value());
      REQUIRE(reg.oracle_variance.has_value());
      CHECK(std::abs(*reg.oracle_mean - reg.phd_mean) < 1e-8);
      CHECK(std::abs(*reg.oracle_variance - reg.phd_variance) < 1e-8);
    }
  }
}

TEST_CASE("experiments are bitwise reproducible") {
  const ScenarioConfig cfg = load_config(config_dir / "tracking_50.json");
  const std::string a = format_report(run_experiment(cfg), ReportFormat::Json);
  const std::string b = format_report(run_experiment(cfg), ReportFormat::Json);
  CHECK(a == b);
}

TEST_CASE("report formats round trip") {
  const ExperimentReport r = run_experiment(small_config());
  const std::string json = format_report(r, ReportFormat::Json);
  const std::string csv = format_report(r, ReportFormat::Csv);
  const ExperimentReport from_json = parse_report(json, ReportFormat::Json);
  const ExperimentReport from_csv = parse_report(csv, ReportFormat::Csv);
  CHECK(from_json.region_names == from_csv.region_names);
  CHECK(from_json.oracle == from_csv.oracle);
  REQUIRE(from_json.steps.size() == from_csv.steps.size());
  for (std::size_t i = 0; i < from_json.steps.size(); ++i) {
    const StepReport& a = from_json.steps[i];
    const StepReport& b = from_csv.steps[i];
    CHECK(a.step == b.step);
    CHECK(a.true_count == b.true_count);
    CHECK(a.measurement_count == b.measurement_count);
    CHECK(a.log_evidence == b.log_evidence);
    REQUIRE(a.regions.size() == b.regions.size());
    for (std::size_t k = 0; k < a.regions.size(); ++k) {
      CHECK(a.regions[k].name == b.regions[k].name);
      CHECK(a.regions[k].true_count == b.regions[k].true_count);
      CHECK(a.regions[k].phd_mean == b.regions[k].phd_mean);
      CHECK(a.regions[k].phd_variance == b.regions[k].phd_variance);
      CHECK(a.regions[k].oracle_mean == b.regions[k].oracle_mean);
      CHECK(a.regions[k].oracle_variance == b.regions[k].oracle_variance);
    }
  }
  CHECK(format_report(from_json, ReportFormat::Csv) == csv);
  CHECK(format_report(from_csv, ReportFormat::Json) == json);
}

TEST_CASE("fifty step run matches the golden count error") {
  const ScenarioConfig cfg = load_config(config_dir / "tracking_50.json");
  const ExperimentReport r = run_experiment(cfg);
  REQUIRE(r.steps.size() == 50);
  const auto err = mean_absolute_count_error(r);
  REQUIRE(err.size() == 3);
  std::ostringstream out;
  for (std::size_t k = 0; k < err.size(); ++k) {
    CHECK(std::isfinite(err[k]));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s,%.12g\n", r.region_names[k].c_str(), err[k]);
    out << buf;
  }
  check_golden("count_error_tracking_50.csv", out.str());
  CHECK(mean_absolute_count_error(run_experiment(cfg)) == err);
}

TEST_CASE("reported variance is calibrated against forced Poisson truth") {
  const ScenarioConfig cfg = load_config(config_dir / "tracking_50.json");
  for (std::size_t region = 0; region < cfg.regions.size(); ++region) {
    const CalibrationResult c = variance_calibration(cfg, 400, 10, cfg.regions[region].region);
    CAPTURE(cfg.regions[region].name);
    CAPTURE(c.mean_squared_residual);
    CAPTURE(c.mean_reported_variance);
    CHECK(c.repetitions == 400);
    CHECK(c.standard_error > 0.0);
    CHECK(std::abs(c.mean_squared_residual - c.mean_reported_variance) < 4.0 * c.standard_error);
  }
  const Region b = cfg.regions[0].region;
  const CalibrationResult one = variance_calibration(cfg, 50, 5, b, 1);
  const CalibrationResult many = variance_calibration(cfg, 50, 5, b, 4);
  CHECK(one.mean_squared_residual == many.mean_squared_residual);
  CHECK(one.mean_reported_variance == many.mean_reported_variance);
  CHECK_THROWS_AS(variance_calibration(cfg, 50, 0, b), ConfigError);
  CHECK_THROWS_AS(variance_calibration(cfg, 1, 3, b), ConfigError);
}

TEST_CASE("iid variance demo grows without bound") {
  const Space g = GridSpace::uniform(0.0, 10.0, 10);
  const std::vector<std::size_t> s{10, 100, 1000};
  const auto rows = iid_variance_demo(Region::range(g, 0, 3), 1.0, s);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].s == s[i]);
    CHECK(rows[i].total_mean == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rows[i].region_mean == doctest::Approx(0.3).epsilon(1e-12));
    // var(B) = p(1-p)E[N] + p^2 var(N) with p = 0.3, E[N] = 1, var(N) = s - 1
    const double var = 0.3 * 0.7 + 0.09 * (static_cast<double>(s[i]) - 1.0);
    CHECK(rows[i].region_variance == doctest::Approx(var).epsilon(1e-12));
    CHECK(rows[i].excess_per_volume == doctest::Approx((var - 0.3) / 3.0).epsilon(1e-12));
    if (i > 0) CHECK(rows[i].excess_per_volume >= 10.0 * rows[i - 1].excess_per_volume);
  }
  const std::string csv = format_iid_demo(rows, ReportFormat::Csv);
  CHECK(csv.rfind("s,total_mean,region_mean,region_variance,excess_per_volume\n", 0) == 0);
}

TEST_CASE("output errors") {
  const ExperimentReport r = run_experiment(trivial_config(0.9, 0.1, 0.8, 0.1));
  CHECK_THROWS_AS(emit_report(r, ReportFormat::Csv, "/nonexistent-dir/report.csv"), Error);
  CHECK_THROWS_AS(parse_format("xml"), ConfigError);
  CHECK(parse_format("csv") == ReportFormat::Csv);
  CHECK(parse_format("json") == ReportFormat::Json);
  const auto path = std::filesystem::temp_directory_path() / "rfs_report_test.json";
  emit_report(r, ReportFormat::Json, path);
  CHECK(read_file(path) == format_report(r, ReportFormat::Json));
  std::filesystem::remove(path);
}

TEST_CASE("oracle truncation failures name the step") {
  ScenarioConfig cfg = small_config();
  cfg.oracle_nmax = 10;
  cfg.motion.birth = Poisson{Field::constant(cfg.state_space, 1.0)};
  try {
    run_experiment(cfg);
    FAIL("expected a truncation error");
  } catch (const TruncationError& e) {
    CHECK(std::string(e.what()).rfind("step 1: ", 0) == 0);
  }
  cfg = small_config();
  cfg.initial = ProcessModel(Poisson{Field::constant(cfg.state_space, 3.0)});
  CHECK_THROWS_AS(run_experiment(cfg), TruncationError);
}

TEST_CASE("oracle verification suite passes") {
  for (std::uint64_t seed : {1u, 2u}) {
    const auto checks = run_oracle_verification(seed);
    CHECK(checks.size() == 3);
    for (const auto& c : checks) {
      CAPTURE(c.name);
      CAPTURE(c.max_error);
      CHECK(c.passed);
      CHECK(c.max_error <= c.tolerance);
    }
  }
}
