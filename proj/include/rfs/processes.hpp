#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rfs/gridspace.hpp"
#include "rfs/random.hpp"
#include "rfs/scalar_pgf.hpp"

namespace rfs {

/// Symmetric nonnegative density K^{(n)} over n-tuples of cells, stored densely
/// (cell_count^n entries, row-major). Values are per unit volume^n.
class Compound {
 public:
  Compound() = default;
  Compound(Space space, std::size_t order, std::vector<double> values);

  static Compound zeros(Space space, std::size_t order);
  static Compound constant(Space space, std::size_t order, double value);
  /// Order-1 compound holding a field.
  static Compound from_field(const Field& f);

  const Space& space() const { return space_; }
  std::size_t order() const { return order_; }
  std::span<const double> values() const { return values_; }
  double at(std::span<const CellIndex> cells) const { return values_[flat_index(cells)]; }
  double& at(std::span<const CellIndex> cells) { return values_[flat_index(cells)]; }
  std::size_t flat_index(std::span<const CellIndex> cells) const;
  std::vector<CellIndex> unflatten(std::size_t flat) const;

  /// Integral over all n-tuples.
  double total() const;
  /// y -> integral of K(y, x_2..x_n) over the remaining coordinates.
  Field marginal() const;
  bool is_symmetric(double tol = 1e-12) const;
  bool is_zero() const;

  Compound& operator+=(const Compound& other);

 private:
  Space space_;
  std::size_t order_ = 0;
  std::vector<double> values_;
};

struct Bernoulli {
  double existence = 0.0;
  Field spatial;  // normalized
};

struct Poisson {
  Field intensity;
};

struct IidCluster {
  std::vector<double> cardinality;  // pmf over n = 0..size-1
  Field spatial;                    // normalized
};

struct GaussPoisson {
  Field singles;    // K^{(1)}
  Compound pairs;   // K^{(2)}
};

/// Largest compound order supported for Khinchin processes.
inline constexpr std::size_t kMaxKhinchinOrder = 4;
/// Largest configurations the Khinchin / Gauss-Poisson and superposition densities evaluate.
inline constexpr std::size_t kMaxClusterPoints = 16;
inline constexpr std::size_t kMaxSuperpositionPoints = 20;

struct Khinchin {
  std::vector<Compound> compounds;  // compounds[k] has order k + 1
};

class ProcessModel;

/// Independent union of its parts.
struct Superposition {
  std::vector<ProcessModel> parts;
};

/// Point-process model on a grid. Construction validates the invariants of the
/// chosen family and throws ModelError on violation.
class ProcessModel {
 public:
  using Variant = std::variant<Bernoulli, Poisson, IidCluster, GaussPoisson, Khinchin, Superposition>;

  ProcessModel(Bernoulli m);
  ProcessModel(Poisson m);
  ProcessModel(IidCluster m);
  ProcessModel(GaussPoisson m);
  ProcessModel(Khinchin m);
  ProcessModel(Superposition m);

  const Variant& variant() const { return model_; }
  const Space& space() const;
  std::string kind() const;

  template <typename T>
  const T* as() const {
    return std::get_if<T>(&model_);
  }

 private:
  void validate() const;
  Variant model_;
};

/// Probabilities of n = 0..nmax points plus the mass beyond nmax.
struct CardinalityPMF {
  std::vector<double> probs;
  double tail = 0.0;
};

/// Exchangeable convenience constructors.
ProcessModel poisson_uniform(const Space& space, double total_mass);
Field uniform_spatial(const Space& space);

/// Multi-object (Janossy) density f(phi).
double density(const ProcessModel& m, const PointConfig& phi);
/// Same, evaluated on an arbitrary ordered tuple of cells.
double density(const ProcessModel& m, std::span<const CellIndex> cells);
/// Density as a SetDensity for set integrals.
SetDensity density_view(const ProcessModel& m);

/// Cardinality generating function as a truncated power series.
PowerSeries cardinality_pgf(const ProcessModel& m, std::size_t order);
CardinalityPMF cardinality_pmf(const ProcessModel& m, std::size_t nmax);

PointConfig sample(const ProcessModel& m, Philox& rng);

/// Intensity (first moment density).
Field first_moment(const ProcessModel& m);

/// Closed-form variance of N(B) for Poisson, i.i.d. cluster (incl. Bernoulli)
/// and Gauss-Poisson models. Throws UnsupportedModelError otherwise.
double variance_analytic(const ProcessModel& m, const Region& region);

/// Independent superposition, simplified to a closed family where possible.
ProcessModel superpose(const ProcessModel& a, const ProcessModel& b);

/// The exponential-family compounds of a Poisson, Gauss-Poisson or Khinchin
/// model (index k holds order k+1). Throws UnsupportedModelError otherwise.
std::vector<Compound> khinchin_compounds(const ProcessModel& m);
/// K^{(0)}: total mass of all compounds.
double khinchin_normalizer(const std::vector<Compound>& compounds);

/// i.i.d. cluster with rho(0) = 1 - mean/s, rho(s) = mean/s and spatial law
/// `spatial`; finite global mean, variance growing linearly in s.
ProcessModel iid_two_point_family(const Field& spatial, double mean, std::size_t s);

}  // namespace rfs
