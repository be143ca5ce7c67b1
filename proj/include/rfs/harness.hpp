#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfs/config.hpp"
#include "rfs/phd_filter.hpp"
#include "rfs/random.hpp"

namespace rfs {

/// Substream purposes for the scenario simulator.
enum class StreamPurpose : std::uint64_t {
  Initial = 1,
  Motion = 2,
  Birth = 3,
  Detection = 4,
  Clutter = 5,
  Repetition = 6,
  ForcedTruth = 7,
};

struct StepOutcome {
  PointConfig state;
  PointConfig measurements;
};

/// Targets survive, move, and are joined by Poisson births.
PointConfig simulate_motion(const PointConfig& state, const ScenarioConfig& cfg, std::size_t step, const Philox& master);
/// Independent detections (at most one per target) plus Poisson clutter.
PointConfig simulate_measurements(const PointConfig& state, const ScenarioConfig& cfg, std::size_t step,
                                  const Philox& master);
/// One step of the generative model. Draws come from substreams of `master`
/// keyed by (purpose, step, target index).
StepOutcome simulate_step(const PointConfig& state, const ScenarioConfig& cfg, std::size_t step, const Philox& master);

struct RegionReport {
  std::string name;
  std::size_t true_count = 0;
  double phd_mean = 0.0;
  double phd_variance = 0.0;
  std::optional<double> oracle_mean;
  std::optional<double> oracle_variance;
};

struct StepReport {
  std::size_t step = 0;
  std::size_t true_count = 0;
  std::size_t measurement_count = 0;
  double log_evidence = 0.0;
  std::vector<RegionReport> regions;
};

struct ExperimentReport {
  std::vector<std::string> region_names;
  bool oracle = false;
  std::vector<StepReport> steps;
};

/// Ground truth and measurement sets only.
struct SimulationRecord {
  std::size_t step = 0;
  PointConfig state;
  PointConfig measurements;
};

std::vector<SimulationRecord> run_simulation(const ScenarioConfig& cfg);

/// Runs the PHD filter (and the exact oracle when cfg.oracle) on a simulated
/// scenario. Oracle truncation failures are rethrown with the step index.
ExperimentReport run_experiment(const ScenarioConfig& cfg);

enum class ReportFormat { Csv, Json };

ReportFormat parse_format(const std::string& name);
std::string format_report(const ExperimentReport& report, ReportFormat format);
std::string format_simulation(const std::vector<SimulationRecord>& records, ReportFormat format);
/// Writes the formatted report. Throws Error when the path cannot be written.
void emit_report(const ExperimentReport& report, ReportFormat format, const std::filesystem::path& path);
void write_text(const std::string& text, const std::filesystem::path& path);

ExperimentReport parse_report(const std::string& text, ReportFormat format);

/// Mean absolute error between true counts and PHD expected counts, per region.
std::vector<double> mean_absolute_count_error(const ExperimentReport& report);

struct IidDemoRow {
  std::size_t s = 0;
  double total_mean = 0.0;
  double region_mean = 0.0;
  double region_variance = 0.0;
  /// (var(B) - mu(B)) / lambda(B).
  double excess_per_volume = 0.0;
};

/// Sweeps the two-point i.i.d. family rho_s(0) = 1 - mean/s, rho_s(s) = mean/s
/// with uniform spatial law.
std::vector<IidDemoRow> iid_variance_demo(const Region& region, double mean, std::span<const std::size_t> s_values);
std::string format_iid_demo(const std::vector<IidDemoRow>& rows, ReportFormat format);

struct CalibrationResult {
  std::size_t repetitions = 0;
  /// Mean of (N(B) - phd mean)^2 across repetitions.
  double mean_squared_residual = 0.0;
  double mean_reported_variance = 0.0;
  /// Standard error of the difference of the two means.
  double standard_error = 0.0;
};

/// Monte Carlo check of the PHD variance. In every repetition the truth is
/// redrawn each step from the Poisson process with the PHD predicted
/// intensity, so the filter's Poisson assumption holds exactly; at `step` the
/// squared residual of N(B) is compared with the reported variance.
CalibrationResult variance_calibration(const ScenarioConfig& cfg, std::size_t repetitions, std::size_t step,
                                       const Region& region, unsigned workers = 0);

struct VerificationCheck {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Oracle-equivalence suite: PHD update, PHD variance and PHD prediction
/// against the exact Bayes filter on random fixtures.
std::vector<VerificationCheck> run_oracle_verification(std::uint64_t seed);

}  // namespace rfs
