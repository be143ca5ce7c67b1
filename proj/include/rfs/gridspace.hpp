#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <memory>
#include <span>
#include <vector>

namespace rfs {

using CellIndex = std::size_t;

/// Uniform rectangular discretization of a state or measurement space.
/// Cells are numbered row-major (last axis fastest); every cell has the same
/// volume and integrals become midpoint Riemann sums over cell centers.
class GridSpace {
 public:
  /// One-dimensional grid of `cells` equal cells covering [lower, upper).
  static std::shared_ptr<const GridSpace> uniform(double lower, double upper, std::size_t cells);
  /// Product grid; `counts[a]` cells along axis a.
  static std::shared_ptr<const GridSpace> uniform(std::vector<double> lower, std::vector<double> upper,
                                                  std::vector<std::size_t> counts);

  std::size_t cell_count() const { return cell_count_; }
  std::size_t dimension() const { return lower_.size(); }
  double cell_volume() const { return cell_volume_; }
  std::span<const double> center(CellIndex cell) const;
  std::span<const double> lower() const { return lower_; }
  std::span<const double> upper() const { return upper_; }
  std::span<const std::size_t> axis_counts() const { return counts_; }

  bool same_layout(const GridSpace& other) const;

 private:
  GridSpace(std::vector<double> lower, std::vector<double> upper, std::vector<std::size_t> counts);

  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<std::size_t> counts_;
  std::size_t cell_count_ = 0;
  double cell_volume_ = 0.0;
  std::vector<double> centers_;  // cell_count_ * dimension()
};

using Space = std::shared_ptr<const GridSpace>;

/// Throws SpaceMismatchError unless both spaces share the same layout.
void require_same_space(const Space& a, const Space& b, const char* what);

class Region;

/// A real-valued function sampled at cell centers (per-unit-volume values for densities).
class Field {
 public:
  Field() = default;
  Field(Space space, std::vector<double> values);

  static Field constant(Space space, double value);
  static Field zeros(Space space) { return constant(std::move(space), 0.0); }

  const Space& space() const { return space_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](CellIndex i) const { return values_[i]; }
  double& operator[](CellIndex i) { return values_[i]; }

  bool is_finite() const;
  /// Nonnegative and finite everywhere.
  bool is_density() const;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double scale);

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }
  friend Field operator*(Field a, double s) { return a *= s; }

  /// Pointwise product.
  Field times(const Field& other) const;
  /// Restriction: zero outside the region.
  Field restricted_to(const Region& region) const;
  Field map(const std::function<double(double)>& fn) const;

 private:
  Space space_;
  std::vector<double> values_;
};

/// Throws InvalidFieldError when the field has negative or non-finite entries.
void require_density(const Field& f, const char* what);

/// A measurable set B, as a cell mask.
class Region {
 public:
  Region() = default;
  Region(Space space, std::vector<bool> mask);

  static Region all(Space space);
  static Region none(Space space);
  static Region cells(Space space, std::initializer_list<CellIndex> cells);
  static Region cells(Space space, std::span<const CellIndex> cells);
  /// Cells with index in [first, last).
  static Region range(Space space, CellIndex first, CellIndex last);

  const Space& space() const { return space_; }
  bool contains(CellIndex cell) const { return mask_[cell]; }
  const std::vector<bool>& mask() const { return mask_; }
  std::vector<CellIndex> members() const;
  std::size_t count() const;
  bool empty() const { return count() == 0; }
  /// Lebesgue measure of the region.
  double volume() const;
  Field indicator() const;

  Region operator|(const Region& other) const;
  Region operator&(const Region& other) const;
  bool disjoint(const Region& other) const;

 private:
  Space space_;
  std::vector<bool> mask_;
};

/// A finite multiset of cells; a realization of a point process.
class PointConfig {
 public:
  PointConfig() = default;
  explicit PointConfig(std::vector<CellIndex> cells);
  PointConfig(std::initializer_list<CellIndex> cells);

  std::size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }
  std::span<const CellIndex> cells() const { return cells_; }
  void insert(CellIndex cell);
  void merge(const PointConfig& other);

  friend bool operator==(const PointConfig&, const PointConfig&) = default;

 private:
  std::vector<CellIndex> cells_;
};

/// Riemann sum of f over the whole grid. Throws InvalidFieldError on NaN/inf.
double integrate(const Field& f);
/// Riemann sum of f over B.
double integrate(const Field& f, const Region& region);

/// Number of points of `config` inside `region`, counting multiplicity.
std::size_t counting_measure(const PointConfig& config, const Region& region);

/// A symmetric multi-object density evaluated on ordered tuples of cells.
struct SetDensity {
  std::function<double(std::span<const CellIndex>)> eval;
  Space space;
  /// Largest cardinality the density can be evaluated at.
  std::size_t order = std::numeric_limits<std::size_t>::max();
};

/// Set integral sum_n 1/n! sum_{c in B^n} f(c) vol^n for n = 0..nmax.
/// Throws TruncationError when nmax exceeds f.order.
double set_integral(const SetDensity& f, const Region& region, std::size_t nmax);

/// Per-cardinality terms of set_integral; entry n is the n-th summand.
std::vector<double> set_integral_by_cardinality(const SetDensity& f, const Region& region,
                                                std::size_t nmax);

/// 1/|phi|!-weighted integral of f over the configurations (of size <= nmax)
/// selected by `subset`. Additive over disjoint subsets of configuration space.
double configuration_integral(const SetDensity& f,
                              const std::function<bool(std::span<const CellIndex>)>& subset,
                              std::size_t nmax);

/// Calls visit(sorted_tuple, inv_count_factorials) for every multiset of size n
/// drawn from `cells` (which must be sorted and distinct). The second argument
/// is 1 / prod_c (multiplicity of c)!; multiplying by n! gives the number of
/// ordered tuples that sort to this multiset.
void for_each_multiset(std::span<const CellIndex> cells, std::size_t n,
                       const std::function<void(std::span<const CellIndex>, double)>& visit);

double factorial(std::size_t n);

}  // namespace rfs
