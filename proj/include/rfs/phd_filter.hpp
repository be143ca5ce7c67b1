#pragma once

#include <cstddef>
#include <limits>

#include "rfs/bayes_oracle.hpp"
#include "rfs/gridspace.hpp"

namespace rfs {

/// Filter state: the intensity (PHD) of the current multi-object estimate.
struct PhdState {
  Field intensity;
  std::size_t step = 0;
  /// log f_Z(Z) of the last update under the Poisson predicted process.
  double log_evidence = std::numeric_limits<double>::quiet_NaN();
  /// Set by poisson_approximation: the state now stands for a Poisson process.
  bool poisson = true;
};

/// mu_X(x) = mu_birth(x) + sum_y p_S(y) M(x|y) mu_Y(y) vol.
PhdState phd_predict(const PhdState& prior, const MotionModel& mm);

/// Missed-detection term plus one normalized detection term per measurement.
/// Throws ImpossibleMeasurementError when c(z) + sum_x p_D L(z|x) mu(x) vol = 0.
PhdState phd_update(const PhdState& predicted, const PointConfig& z, const SensorModel& sm);

/// Fraction of measurement z attributed to targets in B.
double detection_share(const PhdState& predicted, CellIndex z, const SensorModel& sm, const Region& region);

/// Variance of N(B) after the update, assuming a Poisson predicted process.
double phd_variance_update(const PhdState& predicted, const PointConfig& z, const SensorModel& sm,
                           const Region& region);

/// var(B) = mu(B) for a Poisson process.
double poisson_variance(const PhdState& state, const Region& region);

/// Replaces the posterior by the Poisson process with the same intensity.
/// This discards all higher-order information; it is what closes the recursion.
PhdState poisson_approximation(const PhdState& posterior);

}  // namespace rfs
