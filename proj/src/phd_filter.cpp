#include "rfs/phd_filter.hpp"

#include <cmath>
#include <string>

#include "rfs/errors.hpp"

namespace rfs {
namespace {

// c(z) + integral of p_D L(z|.) mu.
double measurement_normalizer(const Field& mu, CellIndex z, const SensorModel& sm) {
  double acc = 0.0;
  for (CellIndex x = 0; x < mu.size(); ++x) acc += sm.detection[x] * sm.likelihood(z, x) * mu[x];
  acc *= mu.space()->cell_volume();
  const double denom = sm.clutter[z] + acc;
  if (!(denom > 0.0))
    throw ImpossibleMeasurementError("measurement in cell " + std::to_string(z) +
                                     " cannot be explained by clutter or any target");
  return denom;
}

void check_measurements(const PointConfig& z, const SensorModel& sm) {
  for (CellIndex c : z.cells())
    if (c >= sm.measurement_space()->cell_count()) throw SpaceMismatchError("measurement outside measurement grid");
}

}  // namespace

PhdState phd_predict(const PhdState& prior, const MotionModel& mm) {
  mm.validate();
  require_same_space(prior.intensity.space(), mm.markov.from(), "PHD prediction");
  const Field& mu = prior.intensity;
  const double vol = mu.space()->cell_volume();
  Field out = mm.birth.intensity;
  for (CellIndex x = 0; x < out.size(); ++x) {
    double acc = 0.0;
    for (CellIndex y = 0; y < mu.size(); ++y) acc += mm.survival[y] * mm.markov(x, y) * mu[y];
    out[x] += acc * vol;
  }
  PhdState next;
  next.intensity = std::move(out);
  next.step = prior.step + 1;
  next.poisson = prior.poisson;
  return next;
}

PhdState phd_update(const PhdState& predicted, const PointConfig& z, const SensorModel& sm) {
  sm.validate();
  require_same_space(predicted.intensity.space(), sm.state_space(), "PHD update");
  check_measurements(z, sm);
  const Field& mu = predicted.intensity;
  Field out = mu;
  for (CellIndex x = 0; x < mu.size(); ++x) out[x] = (1.0 - sm.detection[x]) * mu[x];
  double log_evidence = -integrate(sm.detection.times(mu)) - integrate(sm.clutter);
  for (CellIndex zc : z.cells()) {
    const double denom = measurement_normalizer(mu, zc, sm);
    for (CellIndex x = 0; x < mu.size(); ++x) out[x] += sm.detection[x] * sm.likelihood(zc, x) * mu[x] / denom;
    log_evidence += std::log(denom);
  }
  PhdState next;
  next.intensity = std::move(out);
  next.step = predicted.step;
  next.log_evidence = log_evidence;
  next.poisson = false;
  return next;
}

double detection_share(const PhdState& predicted, CellIndex z, const SensorModel& sm, const Region& region) {
  const Field& mu = predicted.intensity;
  require_same_space(mu.space(), region.space(), "detection share region");
  const double denom = measurement_normalizer(mu, z, sm);
  double num = 0.0;
  for (CellIndex x = 0; x < mu.size(); ++x)
    if (region.contains(x)) num += sm.detection[x] * sm.likelihood(z, x) * mu[x];
  return num * mu.space()->cell_volume() / denom;
}

double phd_variance_update(const PhdState& predicted, const PointConfig& z, const SensorModel& sm,
                           const Region& region) {
  sm.validate();
  require_same_space(predicted.intensity.space(), sm.state_space(), "PHD variance update");
  check_measurements(z, sm);
  const Field missed = (Field::constant(sm.detection.space(), 1.0) - sm.detection).times(predicted.intensity);
  double var = integrate(missed, region);
  for (CellIndex zc : z.cells()) {
    const double q = detection_share(predicted, zc, sm, region);
    var += q * (1.0 - q);
  }
  return var;
}

double poisson_variance(const PhdState& state, const Region& region) {
  const double var = integrate(state.intensity, region);
  const double bound = integrate(state.intensity);
  if (var > bound * (1.0 + 1e-12) + 1e-300)
    throw NumericalError("Poisson variance exceeds the total mean; the intensity is not a density");
  return var;
}

PhdState poisson_approximation(const PhdState& posterior) {
  PhdState out = posterior;
  out.poisson = true;
  return out;
}

}  // namespace rfs
