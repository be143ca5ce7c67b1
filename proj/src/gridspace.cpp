#include "rfs/gridspace.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rfs/errors.hpp"

namespace rfs {

GridSpace::GridSpace(std::vector<double> lower, std::vector<double> upper, std::vector<std::size_t> counts)
    : lower_(std::move(lower)), upper_(std::move(upper)), counts_(std::move(counts)) {
  if (lower_.empty() || lower_.size() != upper_.size() || lower_.size() != counts_.size())
    throw ConfigError("grid bounds and counts must have the same nonzero dimension");
  cell_count_ = 1;
  cell_volume_ = 1.0;
  for (std::size_t a = 0; a < counts_.size(); ++a) {
    if (counts_[a] == 0) throw ConfigError("grid needs at least one cell per axis");
    if (!(upper_[a] > lower_[a]) || !std::isfinite(lower_[a]) || !std::isfinite(upper_[a]))
      throw ConfigError("grid bounds must be finite with upper > lower");
    cell_count_ *= counts_[a];
    cell_volume_ *= (upper_[a] - lower_[a]) / static_cast<double>(counts_[a]);
  }
  const std::size_t dim = counts_.size();
  centers_.resize(cell_count_ * dim);
  for (std::size_t cell = 0; cell < cell_count_; ++cell) {
    std::size_t rem = cell;
    for (std::size_t a = dim; a-- > 0;) {
      const std::size_t k = rem % counts_[a];
      rem /= counts_[a];
      const double width = (upper_[a] - lower_[a]) / static_cast<double>(counts_[a]);
      centers_[cell * dim + a] = lower_[a] + (static_cast<double>(k) + 0.5) * width;
    }
  }
}

std::shared_ptr<const GridSpace> GridSpace::uniform(double lower, double upper, std::size_t cells) {
  return uniform(std::vector<double>{lower}, std::vector<double>{upper}, std::vector<std::size_t>{cells});
}

std::shared_ptr<const GridSpace> GridSpace::uniform(std::vector<double> lower, std::vector<double> upper,
                                                    std::vector<std::size_t> counts) {
  return std::shared_ptr<const GridSpace>(new GridSpace(std::move(lower), std::move(upper), std::move(counts)));
}

std::span<const double> GridSpace::center(CellIndex cell) const {
  return std::span<const double>(centers_).subspan(cell * dimension(), dimension());
}

bool GridSpace::same_layout(const GridSpace& other) const {
  return lower_ == other.lower_ && upper_ == other.upper_ && counts_ == other.counts_;
}

void require_same_space(const Space& a, const Space& b, const char* what) {
  if (!a || !b) throw SpaceMismatchError(std::string(what) + ": missing grid");
  if (a != b && !a->same_layout(*b)) throw SpaceMismatchError(std::string(what) + ": grids differ");
}

// ---- Field ----

Field::Field(Space space, std::vector<double> values) : space_(std::move(space)), values_(std::move(values)) {
  if (!space_) throw InvalidFieldError("field without a grid");
  if (values_.size() != space_->cell_count())
    throw InvalidFieldError("field has " + std::to_string(values_.size()) + " values for " +
                            std::to_string(space_->cell_count()) + " cells");
}

Field Field::constant(Space space, double value) {
  const std::size_t n = space->cell_count();
  return Field(std::move(space), std::vector<double>(n, value));
}

bool Field::is_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

bool Field::is_density() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v) && v >= 0.0; });
}

Field& Field::operator+=(const Field& other) {
  require_same_space(space_, other.space_, "field addition");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_same_space(space_, other.space_, "field subtraction");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Field& Field::operator*=(double scale) {
  for (double& v : values_) v *= scale;
  return *this;
}

Field Field::times(const Field& other) const {
  require_same_space(space_, other.space_, "field product");
  Field out = *this;
  for (std::size_t i = 0; i < values_.size(); ++i) out.values_[i] *= other.values_[i];
  return out;
}

Field Field::restricted_to(const Region& region) const {
  require_same_space(space_, region.space(), "field restriction");
  Field out = *this;
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (!region.contains(i)) out.values_[i] = 0.0;
  return out;
}

Field Field::map(const std::function<double(double)>& fn) const {
  Field out = *this;
  for (double& v : out.values_) v = fn(v);
  return out;
}

void require_density(const Field& f, const char* what) {
  if (!f.is_density()) throw InvalidFieldError(std::string(what) + " must be finite and nonnegative");
}

// ---- Region ----

Region::Region(Space space, std::vector<bool> mask) : space_(std::move(space)), mask_(std::move(mask)) {
  if (!space_) throw InvalidFieldError("region without a grid");
  if (mask_.size() != space_->cell_count()) throw InvalidFieldError("region mask length differs from cell count");
}

Region Region::all(Space space) {
  const std::size_t n = space->cell_count();
  return Region(std::move(space), std::vector<bool>(n, true));
}

Region Region::none(Space space) {
  const std::size_t n = space->cell_count();
  return Region(std::move(space), std::vector<bool>(n, false));
}

Region Region::cells(Space space, std::initializer_list<CellIndex> cells) {
  return Region::cells(std::move(space), std::span<const CellIndex>(cells.begin(), cells.size()));
}

Region Region::cells(Space space, std::span<const CellIndex> cells) {
  std::vector<bool> mask(space->cell_count(), false);
  for (CellIndex c : cells) {
    if (c >= mask.size()) throw SpaceMismatchError("region cell " + std::to_string(c) + " outside grid");
    mask[c] = true;
  }
  return Region(std::move(space), std::move(mask));
}

Region Region::range(Space space, CellIndex first, CellIndex last) {
  std::vector<bool> mask(space->cell_count(), false);
  if (last > mask.size() || first > last) throw SpaceMismatchError("region range outside grid");
  for (CellIndex c = first; c < last; ++c) mask[c] = true;
  return Region(std::move(space), std::move(mask));
}

std::vector<CellIndex> Region::members() const {
  std::vector<CellIndex> out;
  for (std::size_t i = 0; i < mask_.size(); ++i)
    if (mask_[i]) out.push_back(i);
  return out;
}

std::size_t Region::count() const { return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), true)); }

double Region::volume() const { return static_cast<double>(count()) * space_->cell_volume(); }

Field Region::indicator() const {
  std::vector<double> v(mask_.size());
  for (std::size_t i = 0; i < mask_.size(); ++i) v[i] = mask_[i] ? 1.0 : 0.0;
  return Field(space_, std::move(v));
}

Region Region::operator|(const Region& other) const {
  require_same_space(space_, other.space_, "region union");
  std::vector<bool> m(mask_.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = mask_[i] || other.mask_[i];
  return Region(space_, std::move(m));
}

Region Region::operator&(const Region& other) const {
  require_same_space(space_, other.space_, "region intersection");
  std::vector<bool> m(mask_.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = mask_[i] && other.mask_[i];
  return Region(space_, std::move(m));
}

bool Region::disjoint(const Region& other) const { return (*this & other).empty(); }

// ---- PointConfig ----

PointConfig::PointConfig(std::vector<CellIndex> cells) : cells_(std::move(cells)) {
  std::sort(cells_.begin(), cells_.end());
}

PointConfig::PointConfig(std::initializer_list<CellIndex> cells) : PointConfig(std::vector<CellIndex>(cells)) {}

void PointConfig::insert(CellIndex cell) { cells_.insert(std::upper_bound(cells_.begin(), cells_.end(), cell), cell); }

void PointConfig::merge(const PointConfig& other) {
  std::vector<CellIndex> out;
  out.reserve(cells_.size() + other.cells_.size());
  std::merge(cells_.begin(), cells_.end(), other.cells_.begin(), other.cells_.end(), std::back_inserter(out));
  cells_ = std::move(out);
}

// ---- integration ----

double integrate(const Field& f) {
  if (!f.is_finite()) throw InvalidFieldError("cannot integrate a field with NaN or infinite values");
  double sum = 0.0;
  for (double v : f.values()) sum += v;
  return sum * f.space()->cell_volume();
}

double integrate(const Field& f, const Region& region) {
  require_same_space(f.space(), region.space(), "integrate over region");
  if (!f.is_finite()) throw InvalidFieldError("cannot integrate a field with NaN or infinite values");
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (region.contains(i)) sum += f[i];
  return sum * f.space()->cell_volume();
}

std::size_t counting_measure(const PointConfig& config, const Region& region) {
  std::size_t n = 0;
  for (CellIndex c : config.cells()) {
    if (c >= region.mask().size())
      throw SpaceMismatchError("point at cell " + std::to_string(c) + " lies outside the region's grid");
    if (region.contains(c)) ++n;
  }
  return n;
}

double factorial(std::size_t n) {
  double r = 1.0;
  for (std::size_t k = 2; k <= n; ++k) r *= static_cast<double>(k);
  return r;
}

namespace {

void multiset_recurse(std::span<const CellIndex> cells, std::size_t start, std::size_t remaining,
                      std::vector<CellIndex>& tuple, double inv_fact, std::size_t run,
                      const std::function<void(std::span<const CellIndex>, double)>& visit) {
  if (remaining == 0) {
    visit(tuple, inv_fact);
    return;
  }
  for (std::size_t k = start; k < cells.size(); ++k) {
    const bool repeat = !tuple.empty() && tuple.back() == cells[k];
    const std::size_t next_run = repeat ? run + 1 : 1;
    tuple.push_back(cells[k]);
    multiset_recurse(cells, k, remaining - 1, tuple, inv_fact / static_cast<double>(next_run), next_run, visit);
    tuple.pop_back();
  }
}

}  // namespace

void for_each_multiset(std::span<const CellIndex> cells, std::size_t n,
                       const std::function<void(std::span<const CellIndex>, double)>& visit) {
  std::vector<CellIndex> tuple;
  tuple.reserve(n);
  multiset_recurse(cells, 0, n, tuple, 1.0, 0, visit);
}

std::vector<double> set_integral_by_cardinality(const SetDensity& f, const Region& region, std::size_t nmax) {
  if (nmax > f.order)
    throw TruncationError("set integral to order " + std::to_string(nmax) + " exceeds density truncation " +
                          std::to_string(f.order));
  require_same_space(f.space, region.space(), "set integral");
  const std::vector<CellIndex> cells = region.members();
  const double vol = region.space()->cell_volume();
  std::vector<double> terms(nmax + 1, 0.0);
  for (std::size_t n = 0; n <= nmax; ++n) {
    double sum = 0.0;
    for_each_multiset(cells, n, [&](std::span<const CellIndex> tuple, double inv_fact) {
      sum += f.eval(tuple) * inv_fact;
    });
    terms[n] = sum * std::pow(vol, static_cast<double>(n));
  }
  return terms;
}

double set_integral(const SetDensity& f, const Region& region, std::size_t nmax) {
  double total = 0.0;
  for (double t : set_integral_by_cardinality(f, region, nmax)) total += t;
  return total;
}

double configuration_integral(const SetDensity& f, const std::function<bool(std::span<const CellIndex>)>& subset,
                              std::size_t nmax) {
  if (nmax > f.order) throw TruncationError("configuration integral beyond density truncation");
  const Region all = Region::all(f.space);
  const std::vector<CellIndex> cells = all.members();
  const double vol = f.space->cell_volume();
  double total = 0.0;
  for (std::size_t n = 0; n <= nmax; ++n) {
    double sum = 0.0;
    for_each_multiset(cells, n, [&](std::span<const CellIndex> tuple, double inv_fact) {
      if (subset(tuple)) sum += f.eval(tuple) * inv_fact;
    });
    total += sum * std::pow(vol, static_cast<double>(n));
  }
  return total;
}

}  // namespace rfs
