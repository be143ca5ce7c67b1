#include "rfs/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "rfs/errors.hpp"

namespace rfs {

using ordered_json = nlohmann::ordered_json;

namespace {

Philox substream(const Philox& master, StreamPurpose purpose, std::size_t step, std::size_t index) {
  return master.stream(stream_key(static_cast<std::uint64_t>(purpose), step, index));
}

std::vector<double> kernel_column(const Kernel& k, CellIndex from) {
  std::vector<double> w(k.to()->cell_count());
  for (CellIndex to = 0; to < w.size(); ++to) w[to] = k(to, from);
  return w;
}

PointConfig sample_poisson_field(const Field& intensity, Philox rng) {
  PointConfig out;
  const double vol = intensity.space()->cell_volume();
  for (CellIndex c = 0; c < intensity.size(); ++c) {
    const std::size_t k = sample_poisson(rng, intensity[c] * vol);
    for (std::size_t j = 0; j < k; ++j) out.insert(c);
  }
  return out;
}

std::string fmt12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

/// Value as printed with 12 significant digits, so JSON and CSV carry the same numbers.
double round12(double v) { return std::strtod(fmt12(v).c_str(), nullptr); }

template <typename Err>
[[noreturn]] void rethrow_at_step(const Err& e, std::size_t step) {
  throw Err("step " + std::to_string(step) + ": " + e.what());
}

std::uint64_t derived_seed(std::uint64_t seed, std::size_t repetition) {
  Philox rng(seed, stream_key(static_cast<std::uint64_t>(StreamPurpose::Repetition), 0, repetition));
  const std::uint64_t hi = rng();
  return (hi << 32) | rng();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

PointConfig simulate_motion(const PointConfig& state, const ScenarioConfig& cfg, std::size_t step,
                            const Philox& master) {
  PointConfig next;
  const auto cells = state.cells();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    Philox rng = substream(master, StreamPurpose::Motion, step, i);
    if (!sample_bernoulli(rng, cfg.motion.survival[cells[i]])) continue;
    next.insert(sample_categorical(rng, kernel_column(cfg.motion.markov, cells[i])));
  }
  next.merge(sample_poisson_field(cfg.motion.birth.intensity, substream(master, StreamPurpose::Birth, step, 0)));
  return next;
}

PointConfig simulate_measurements(const PointConfig& state, const ScenarioConfig& cfg, std::size_t step,
                                  const Philox& master) {
  PointConfig z;
  const auto cells = state.cells();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    Philox rng = substream(master, StreamPurpose::Detection, step, i);
    if (!sample_bernoulli(rng, cfg.sensor.detection[cells[i]])) continue;
    z.insert(sample_categorical(rng, kernel_column(cfg.sensor.likelihood, cells[i])));
  }
  z.merge(sample_poisson_field(cfg.sensor.clutter, substream(master, StreamPurpose::Clutter, step, 0)));
  return z;
}

StepOutcome simulate_step(const PointConfig& state, const ScenarioConfig& cfg, std::size_t step, const Philox& master) {
  StepOutcome out;
  out.state = simulate_motion(state, cfg, step, master);
  out.measurements = simulate_measurements(out.state, cfg, step, master);
  return out;
}

std::vector<SimulationRecord> run_simulation(const ScenarioConfig& cfg) {
  cfg.validate();
  const Philox master(cfg.seed);
  Philox init = substream(master, StreamPurpose::Initial, 0, 0);
  PointConfig state = sample(cfg.initial, init);
  std::vector<SimulationRecord> records;
  for (std::size_t k = 1; k <= cfg.steps; ++k) {
    auto [next, z] = simulate_step(state, cfg, k, master);
    records.push_back({k, next, z});
    state = std::move(next);
  }
  return records;
}

ExperimentReport run_experiment(const ScenarioConfig& cfg) {
  cfg.validate();
  ExperimentReport report;
  report.oracle = cfg.oracle;
  for (const auto& r : cfg.regions) report.region_names.push_back(r.name);

  const auto records = run_simulation(cfg);
  PhdState phd{first_moment(cfg.initial)};
  std::optional<TruncatedMOD> oracle;
  if (cfg.oracle) {
    oracle = TruncatedMOD::from_model(cfg.initial, cfg.oracle_nmax);
    if (oracle->deficit() > kMaxTruncationDeficit)
      throw TruncationError("initial process loses " + fmt12(oracle->deficit()) + " mass at oracle_nmax " +
                            std::to_string(cfg.oracle_nmax));
  }

  for (const auto& rec : records) {
    const PhdState predicted = phd_predict(phd, cfg.motion);
    const PhdState posterior = phd_update(predicted, rec.measurements, cfg.sensor);

    StepReport row;
    row.step = rec.step;
    row.true_count = rec.state.size();
    row.measurement_count = rec.measurements.size();
    row.log_evidence = posterior.log_evidence;

    std::optional<TruncatedMOD> oracle_post;
    if (oracle) {
      try {
        const TruncatedMOD pred = bayes_predict(*oracle, cfg.motion, {.output_nmax = cfg.oracle_nmax});
        const TruncatedMOD pois = TruncatedMOD::poisson(mod_first_moment(pred), cfg.oracle_nmax);
        if (pois.deficit() > kMaxTruncationDeficit)
          throw TruncationError("Poisson predicted process loses " + fmt12(pois.deficit()) + " mass");
        oracle_post = bayes_update(pois, rec.measurements, cfg.sensor);
      } catch (const TruncationError& e) {
        rethrow_at_step(e, rec.step);
      } catch (const ImpossibleMeasurementError& e) {
        rethrow_at_step(e, rec.step);
      }
    }

    for (const auto& r : cfg.regions) {
      RegionReport rr;
      rr.name = r.name;
      rr.true_count = counting_measure(rec.state, r.region);
      rr.phd_mean = integrate(posterior.intensity, r.region);
      rr.phd_variance = phd_variance_update(predicted, rec.measurements, cfg.sensor, r.region);
      if (oracle_post) {
        rr.oracle_mean = mod_expected_count(*oracle_post, r.region);
        rr.oracle_variance = mod_variance(*oracle_post, r.region);
      }
      row.regions.push_back(std::move(rr));
    }
    report.steps.push_back(std::move(row));
    phd = poisson_approximation(posterior);
    if (oracle_post) oracle = std::move(oracle_post);
  }
  return report;
}

ReportFormat parse_format(const std::string& name) {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json") return ReportFormat::Json;
  throw ConfigError("unknown format '" + name + "' (expected csv or json)");
}

std::string format_report(const ExperimentReport& report, ReportFormat format) {
  if (format == ReportFormat::Json) {
    ordered_json arr = ordered_json::array();
    for (const auto& s : report.steps) {
      ordered_json row;
      row["step"] = s.step;
      row["true_count"] = s.true_count;
      row["measurement_count"] = s.measurement_count;
      row["log_evidence"] = round12(s.log_evidence);
      ordered_json regions = ordered_json::object();
      for (const auto& r : s.regions) {
        ordered_json rj;
        rj["true_count"] = r.true_count;
        rj["phd_mean"] = round12(r.phd_mean);
        rj["phd_var"] = round12(r.phd_variance);
        if (report.oracle) {
          rj["oracle_mean"] = round12(r.oracle_mean.value_or(NAN));
          rj["oracle_var"] = round12(r.oracle_variance.value_or(NAN));
        }
        regions[r.name] = rj;
      }
      row["regions"] = regions;
      arr.push_back(row);
    }
    return arr.dump(2) + "\n";
  }
  std::ostringstream out;
  out << "step,true_count,measurement_count,log_evidence";
  for (const auto& name : report.region_names) {
    out << ",true_count_" << name << ",phd_mean_" << name << ",phd_var_" << name;
    if (report.oracle) out << ",oracle_mean_" << name << ",oracle_var_" << name;
  }
  out << "\n";
  for (const auto& s : report.steps) {
    out << s.step << "," << s.true_count << "," << s.measurement_count << "," << fmt12(s.log_evidence);
    for (const auto& r : s.regions) {
      out << "," << r.true_count << "," << fmt12(r.phd_mean) << "," << fmt12(r.phd_variance);
      if (report.oracle)
        out << "," << fmt12(r.oracle_mean.value_or(NAN)) << "," << fmt12(r.oracle_variance.value_or(NAN));
    }
    out << "\n";
  }
  return out.str();
}

std::string format_simulation(const std::vector<SimulationRecord>& records, ReportFormat format) {
  auto cells_of = [](const PointConfig& p) { return std::vector<CellIndex>(p.cells().begin(), p.cells().end()); };
  if (format == ReportFormat::Json) {
    ordered_json arr = ordered_json::array();
    for (const auto& r : records) {
      ordered_json row;
      row["step"] = r.step;
      row["state"] = cells_of(r.state);
      row["measurements"] = cells_of(r.measurements);
      arr.push_back(row);
    }
    return arr.dump(2) + "\n";
  }
  auto join = [](const PointConfig& p) {
    std::string s;
    for (CellIndex c : p.cells()) s += (s.empty() ? "" : ";") + std::to_string(c);
    return s;
  };
  std::ostringstream out;
  out << "step,true_count,measurement_count,state,measurements\n";
  for (const auto& r : records)
    out << r.step << "," << r.state.size() << "," << r.measurements.size() << "," << join(r.state) << ","
        << join(r.measurements) << "\n";
  return out.str();
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw Error("failed writing " + path.string());
}

void emit_report(const ExperimentReport& report, ReportFormat format, const std::filesystem::path& path) {
  write_text(format_report(report, format), path);
}

ExperimentReport parse_report(const std::string& text, ReportFormat format) {
  ExperimentReport report;
  if (format == ReportFormat::Json) {
    const auto arr = ordered_json::parse(text);
    for (const auto& row : arr) {
      StepReport s;
      s.step = row.at("step").get<std::size_t>();
      s.true_count = row.at("true_count").get<std::size_t>();
      s.measurement_count = row.at("measurement_count").get<std::size_t>();
      s.log_evidence = row.at("log_evidence").get<double>();
      const bool first = report.steps.empty();
      for (const auto& [name, rj] : row.at("regions").items()) {
        RegionReport r;
        r.name = name;
        r.true_count = rj.at("true_count").get<std::size_t>();
        r.phd_mean = rj.at("phd_mean").get<double>();
        r.phd_variance = rj.at("phd_var").get<double>();
        if (rj.contains("oracle_mean")) {
          report.oracle = true;
          r.oracle_mean = rj.at("oracle_mean").get<double>();
          r.oracle_variance = rj.at("oracle_var").get<double>();
        }
        if (first) report.region_names.push_back(name);
        s.regions.push_back(std::move(r));
      }
      report.steps.push_back(std::move(s));
    }
    return report;
  }
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error("empty report");
  const auto header = split(line, ',');
  if (header.size() < 4) throw Error("malformed report header");
  std::size_t per_region = 3;
  for (std::size_t c = 4; c < header.size(); ++c)
    if (header[c].rfind("oracle_mean_", 0) == 0) {
      report.oracle = true;
      per_region = 5;
      break;
    }
  if ((header.size() - 4) % per_region != 0) throw Error("malformed report header");
  for (std::size_t c = 4; c < header.size(); c += per_region)
    report.region_names.push_back(header[c].substr(std::string("true_count_").size()));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != header.size()) throw Error("report row has the wrong number of fields");
    StepReport s;
    s.step = std::stoull(f[0]);
    s.true_count = std::stoull(f[1]);
    s.measurement_count = std::stoull(f[2]);
    s.log_evidence = std::strtod(f[3].c_str(), nullptr);
    for (std::size_t r = 0; r < report.region_names.size(); ++r) {
      const std::size_t c = 4 + r * per_region;
      RegionReport rr;
      rr.name = report.region_names[r];
      rr.true_count = std::stoull(f[c]);
      rr.phd_mean = std::strtod(f[c + 1].c_str(), nullptr);
      rr.phd_variance = std::strtod(f[c + 2].c_str(), nullptr);
      if (report.oracle) {
        rr.oracle_mean = std::strtod(f[c + 3].c_str(), nullptr);
        rr.oracle_variance = std::strtod(f[c + 4].c_str(), nullptr);
      }
      s.regions.push_back(std::move(rr));
    }
    report.steps.push_back(std::move(s));
  }
  return report;
}

std::vector<double> mean_absolute_count_error(const ExperimentReport& report) {
  std::vector<double> err(report.region_names.size(), 0.0);
  if (report.steps.empty()) return err;
  for (const auto& s : report.steps)
    for (std::size_t r = 0; r < s.regions.size(); ++r)
      err[r] += std::abs(static_cast<double>(s.regions[r].true_count) - s.regions[r].phd_mean);
  for (double& e : err) e /= static_cast<double>(report.steps.size());
  return err;
}

std::vector<IidDemoRow> iid_variance_demo(const Region& region, double mean, std::span<const std::size_t> s_values) {
  const Field spatial = uniform_spatial(region.space());
  const double lambda = region.volume();
  if (!(lambda > 0.0)) throw ModelError("demo region must have positive volume");
  std::vector<IidDemoRow> rows;
  for (std::size_t s : s_values) {
    const ProcessModel m = iid_two_point_family(spatial, mean, s);
    IidDemoRow row;
    row.s = s;
    row.total_mean = integrate(first_moment(m));
    row.region_mean = integrate(first_moment(m), region);
    row.region_variance = variance_analytic(m, region);
    row.excess_per_volume = (row.region_variance - row.region_mean) / lambda;
    rows.push_back(row);
  }
  return rows;
}

std::string format_iid_demo(const std::vector<IidDemoRow>& rows, ReportFormat format) {
  if (format == ReportFormat::Json) {
    ordered_json arr = ordered_json::array();
    for (const auto& r : rows) {
      ordered_json o;
      o["s"] = r.s;
      o["total_mean"] = round12(r.total_mean);
      o["region_mean"] = round12(r.region_mean);
      o["region_variance"] = round12(r.region_variance);
      o["excess_per_volume"] = round12(r.excess_per_volume);
      arr.push_back(o);
    }
    return arr.dump(2) + "\n";
  }
  std::ostringstream out;
  out << "s,total_mean,region_mean,region_variance,excess_per_volume\n";
  for (const auto& r : rows)
    out << r.s << "," << fmt12(r.total_mean) << "," << fmt12(r.region_mean) << "," << fmt12(r.region_variance) << ","
        << fmt12(r.excess_per_volume) << "\n";
  return out.str();
}

CalibrationResult variance_calibration(const ScenarioConfig& cfg, std::size_t repetitions, std::size_t step,
                                       const Region& region, unsigned workers) {
  cfg.validate();
  if (step == 0 || step > cfg.steps) throw ConfigError("calibration step must be within 1..steps");
  if (repetitions < 2) throw ConfigError("calibration needs at least two repetitions");
  require_same_space(region.space(), cfg.state_space, "calibration region");

  std::vector<double> residual(repetitions), reported(repetitions);
  auto run_one = [&](std::size_t r) {
    const Philox master(derived_seed(cfg.seed, r));
    PhdState phd{first_moment(cfg.initial)};
    for (std::size_t k = 1; k <= step; ++k) {
      const PhdState predicted = phd_predict(phd, cfg.motion);
      const PointConfig truth =
          sample_poisson_field(predicted.intensity, substream(master, StreamPurpose::ForcedTruth, k, 0));
      const PointConfig z = simulate_measurements(truth, cfg, k, master);
      const PhdState posterior = phd_update(predicted, z, cfg.sensor);
      if (k == step) {
        const double d = static_cast<double>(counting_measure(truth, region)) - integrate(posterior.intensity, region);
        residual[r] = d * d;
        reported[r] = phd_variance_update(predicted, z, cfg.sensor, region);
      }
      phd = poisson_approximation(posterior);
    }
  };

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, repetitions));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t r = w; r < repetitions; r += workers) run_one(r);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  const double n = static_cast<double>(repetitions);
  CalibrationResult out;
  out.repetitions = repetitions;
  double mean_diff = 0.0;
  for (std::size_t r = 0; r < repetitions; ++r) {
    out.mean_squared_residual += residual[r] / n;
    out.mean_reported_variance += reported[r] / n;
    mean_diff += (residual[r] - reported[r]) / n;
  }
  double ss = 0.0;
  for (std::size_t r = 0; r < repetitions; ++r) {
    const double d = residual[r] - reported[r] - mean_diff;
    ss += d * d;
  }
  out.standard_error = std::sqrt(ss / (n - 1.0) / n);
  return out;
}

namespace {

Field random_field(const Space& s, Philox& rng, double lo, double hi) {
  std::vector<double> v(s->cell_count());
  for (double& x : v) x = lo + (hi - lo) * rng.uniform();
  return Field(s, std::move(v));
}

Kernel random_kernel(const Space& to, const Space& from, Philox& rng) {
  const std::size_t rows = to->cell_count();
  const std::size_t cols = from->cell_count();
  std::vector<double> v(rows * cols);
  for (std::size_t c = 0; c < cols; ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < rows; ++r) sum += v[r * cols + c] = 0.05 + rng.uniform();
    for (std::size_t r = 0; r < rows; ++r) v[r * cols + c] /= sum * to->cell_volume();
  }
  return Kernel(to, from, std::move(v));
}

double max_cell_error(const Field& a, const Field& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
  return e;
}

}  // namespace

std::vector<VerificationCheck> run_oracle_verification(std::uint64_t seed) {
  Philox rng(seed, stream_key(0xF, 0, 0));
  const Space xs = GridSpace::uniform(0.0, 4.0, 4);
  const Space zs = GridSpace::uniform(0.0, 3.0, 3);
  // Poisson truncation tail below 1e-10 at total mass 1.5.
  constexpr std::size_t kNmax = 14;
  const std::vector<PointConfig> measurement_sets{{}, {0}, {2}, {0, 1}, {1, 1}, {0, 2}};
  const std::vector<Region> regions{Region::cells(xs, {0}), Region::cells(xs, {1, 2}), Region::cells(xs, {2, 3}),
                                    Region::cells(xs, {0, 2, 3}), Region::all(xs)};

  VerificationCheck update{"phd_update vs exact posterior intensity", 0.0, 1e-8, false};
  VerificationCheck variance{"phd_variance_update vs exact posterior variance", 0.0, 1e-8, false};
  for (int trial = 0; trial < 4; ++trial) {
    Field shape = random_field(xs, rng, 0.2, 1.0);
    const Field intensity = (1.5 / integrate(shape)) * shape;
    const SensorModel sm{random_kernel(zs, xs, rng), random_field(xs, rng, 0.2, 0.95), random_field(zs, rng, 0.05, 0.5)};
    const PhdState predicted{intensity};
    const TruncatedMOD prior = TruncatedMOD::poisson(intensity, kNmax);
    for (const auto& z : measurement_sets) {
      const TruncatedMOD post = bayes_update(prior, z, sm);
      const PhdState phd = phd_update(predicted, z, sm);
      update.max_error = std::max(update.max_error, max_cell_error(phd.intensity, mod_first_moment(post)));
      for (const auto& b : regions)
        variance.max_error =
            std::max(variance.max_error, std::abs(phd_variance_update(predicted, z, sm, b) - mod_variance(post, b)));
    }
  }

  VerificationCheck predict{"phd_predict vs exact predicted intensity", 0.0, 1e-9, false};
  for (int trial = 0; trial < 10; ++trial) {
    TruncatedMOD prior(xs, 3);
    for (std::size_t id = 0; id < prior.index().total(); ++id) prior.set_probability_at(id, 0.05 + rng.uniform());
    prior.normalize();
    const MotionModel mm{random_kernel(xs, xs, rng), random_field(xs, rng, 0.3, 0.99),
                         Poisson{random_field(xs, rng, 0.0, 0.1)}};
    const TruncatedMOD exact = bayes_predict(prior, mm, {.output_nmax = kNmax});
    const PhdState phd = phd_predict(PhdState{mod_first_moment(prior)}, mm);
    predict.max_error = std::max(predict.max_error, max_cell_error(phd.intensity, mod_first_moment(exact)));
  }

  std::vector<VerificationCheck> checks{update, variance, predict};
  for (auto& c : checks) c.passed = c.max_error <= c.tolerance;
  return checks;
}

}  // namespace rfs
