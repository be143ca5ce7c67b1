#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "rfs/gridspace.hpp"
#include "rfs/processes.hpp"

namespace rfs {

/// Single-object transition density k(to | from): a density in `to` for every
/// `from` cell, so each column sums (times the `to` cell volume) to one.
class Kernel {
 public:
  Kernel() = default;
  Kernel(Space to, Space from, std::vector<double> values);  // values[to * |from| + from]

  /// k(x | y) = delta_{xy} / vol.
  static Kernel identity(const Space& space);
  /// Discretized Gaussian around the `from` cell center, renormalized per column.
  static Kernel gaussian(const Space& to, const Space& from, double sigma);
  static Kernel uniform(const Space& to, const Space& from);

  const Space& to() const { return to_; }
  const Space& from() const { return from_; }
  double operator()(CellIndex to, CellIndex from) const { return values_[to * from_->cell_count() + from]; }
  std::span<const double> values() const { return values_; }

  /// Largest |column integral - 1|.
  double normalization_error() const;

 private:
  Space to_;
  Space from_;
  std::vector<double> values_;
};

/// Survival, single-target motion and Poisson birth.
struct MotionModel {
  Kernel markov;          // M(x | y)
  Field survival;         // p_S(y)
  Poisson birth;          // birth intensity on the state grid

  void validate() const;
};

/// Detection, single-target likelihood and Poisson clutter.
struct SensorModel {
  Kernel likelihood;      // L(z | x)
  Field detection;        // p_D(x)
  Field clutter;          // c(z) on the measurement grid

  const Space& measurement_space() const { return likelihood.to(); }
  const Space& state_space() const { return likelihood.from(); }
  void validate() const;
};

/// Rank/unrank of multisets (sorted tuples) of cells, for sizes 0..nmax.
class MultisetIndex {
 public:
  MultisetIndex(std::size_t cells, std::size_t nmax);

  std::size_t cells() const { return cells_; }
  std::size_t nmax() const { return nmax_; }
  /// Number of multisets of exactly size n.
  std::size_t count(std::size_t n) const { return offsets_[n + 1] - offsets_[n]; }
  /// Number of multisets of size <= nmax.
  std::size_t total() const { return offsets_.back(); }
  std::size_t offset(std::size_t n) const { return offsets_[n]; }

  /// Global id of a sorted tuple.
  std::size_t id(std::span<const CellIndex> sorted) const;
  std::span<const CellIndex> tuple(std::size_t id) const;
  std::size_t size_of(std::size_t id) const { return sizes_[id]; }
  /// prod over cells of (multiplicity)!.
  double multiplicity_factorial(std::size_t id) const { return mult_fact_[id]; }
  /// Id of the multiset with `cell` added, or npos when that exceeds nmax.
  std::size_t with(std::size_t id, CellIndex cell) const { return successor_[id * cells_ + cell]; }

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

 private:
  std::size_t cells_;
  std::size_t nmax_;
  std::vector<std::size_t> offsets_;
  std::vector<std::vector<double>> binom_;
  std::vector<CellIndex> flat_tuples_;
  std::vector<std::size_t> tuple_start_;
  std::vector<std::size_t> sizes_;
  std::vector<double> mult_fact_;
  std::vector<std::size_t> successor_;
};

/// A multi-object density truncated at cardinality nmax.
///
/// The density is symmetric, so one value is stored per multiset of cells
/// rather than per ordered tuple; any ordering of the same cells reads the same
/// entry.
class TruncatedMOD {
 public:
  TruncatedMOD(Space space, std::size_t nmax);

  /// All mass on the empty configuration.
  static TruncatedMOD empty_set(Space space, std::size_t nmax);
  /// Tables of a process model's density, normalized; the lost tail is recorded as deficit.
  static TruncatedMOD from_model(const ProcessModel& m, std::size_t nmax);
  static TruncatedMOD poisson(const Field& intensity, std::size_t nmax);

  /// Same density with a larger truncation order (new entries zero).
  TruncatedMOD extended(std::size_t nmax) const;
  /// Largest cardinality carrying nonzero mass.
  std::size_t support_order() const;

  const Space& space() const { return space_; }
  std::size_t nmax() const { return index_->nmax(); }
  const MultisetIndex& index() const { return *index_; }

  /// f(x_1..x_n) for any ordering; zero beyond nmax.
  double density(std::span<const CellIndex> cells) const;
  void set_density(std::span<const CellIndex> cells, double value);

  double density_at(std::size_t id) const { return values_[id]; }
  void set_density_at(std::size_t id, double value) { values_[id] = value; }
  /// Probability of the multiset with this id: f vol^n / prod(multiplicity!).
  double probability_at(std::size_t id) const;
  void set_probability_at(std::size_t id, double p);

  /// Set integral over the full space.
  double total_mass() const;
  /// Scales to unit mass and returns the mass deficit 1 - total before scaling.
  double normalize();
  std::vector<double> cardinality() const;
  SetDensity view() const;

  /// Mass lost to truncation before the last normalization.
  double deficit() const { return deficit_; }
  /// Evidence f_Z(Z) of the update that produced this density (NaN otherwise).
  double evidence() const { return evidence_; }
  void set_deficit(double d) { deficit_ = d; }
  void set_evidence(double e) { evidence_ = e; }

 private:
  Space space_;
  std::shared_ptr<const MultisetIndex> index_;
  std::vector<double> values_;
  double deficit_ = 0.0;
  double evidence_ = std::numeric_limits<double>::quiet_NaN();
};

/// Default abort threshold for truncation deficits.
inline constexpr double kMaxTruncationDeficit = 1e-6;

/// Generic association sum over theta: sources -> {0} + destinations, injective
/// on nonzero values, of prod_{theta(i)=0} miss(i) prod_{theta(i)=j} hit(i, j)
/// prod_{j unassigned} unassigned(j). Evaluated exactly by dynamic programming
/// over subsets of used destinations.
double association_sum(std::size_t sources, std::size_t destinations,
                       const std::function<double(std::size_t)>& miss,
                       const std::function<double(std::size_t, std::size_t)>& hit,
                       const std::function<double(std::size_t)>& unassigned);

/// Multi-object Markov density M(X | Y) with survival, motion and Poisson birth.
double markov_density(const MotionModel& mm, const PointConfig& x, const PointConfig& y);

/// Multi-object likelihood L(Z | X) with detection and Poisson clutter.
double likelihood_density(const SensorModel& sm, const PointConfig& z, const PointConfig& x);

struct PredictOptions {
  /// Truncation order of the predicted density; 0 keeps the prior's order.
  std::size_t output_nmax = 0;
  double max_deficit = kMaxTruncationDeficit;
};

/// Chapman-Kolmogorov prediction. Targets evolve independently (die or move),
/// then Poisson births are added. Throws TruncationError when the mass pushed
/// beyond the output order exceeds `max_deficit`.
TruncatedMOD bayes_predict(const TruncatedMOD& prior, const MotionModel& mm, const PredictOptions& options = {});

/// Bayes update with the full association likelihood. Throws
/// ImpossibleMeasurementError when the evidence vanishes.
TruncatedMOD bayes_update(const TruncatedMOD& predicted, const PointConfig& z, const SensorModel& sm);

/// Intensity of the truncated density.
Field mod_first_moment(const TruncatedMOD& f);

/// var(N(B)) = alpha2(B, B) + mu(B) - mu(B)^2.
double mod_variance(const TruncatedMOD& f, const Region& region);

/// E[N(B)].
double mod_expected_count(const TruncatedMOD& f, const Region& region);

}  // namespace rfs
