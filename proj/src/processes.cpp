#include "rfs/processes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "rfs/errors.hpp"

namespace rfs {
namespace {

constexpr double kNormTol = 1e-9;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) r *= base;
  return r;
}

bool all_zero(const Field& f) {
  return std::all_of(f.values().begin(), f.values().end(), [](double v) { return v == 0.0; });
}

void check_normalized(const Field& s, const char* what) {
  require_density(s, what);
  if (std::abs(integrate(s) - 1.0) > kNormTol) throw ModelError(std::string(what) + " must integrate to 1");
}

void check_pmf(const std::vector<double>& rho) {
  if (rho.empty()) throw ModelError("cardinality distribution is empty");
  double sum = 0.0;
  for (double r : rho) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw ModelError("cardinality probabilities must be nonnegative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > kNormTol) throw ModelError("cardinality distribution must sum to 1");
}

void check_compound(const Compound& k, std::size_t expected_order, const Space& space) {
  require_same_space(k.space(), space, "compound");
  if (k.order() != expected_order) throw ModelError("compound order mismatch");
  for (double v : k.values())
    if (!(v >= 0.0) || !std::isfinite(v)) throw ModelError("compound values must be finite and nonnegative");
  if (!k.is_symmetric()) throw ModelError("compound of order " + std::to_string(expected_order) + " is not symmetric");
}

// Distinct cells of a configuration and their multiplicities.
struct Multiplicities {
  std::vector<CellIndex> cells;
  std::vector<std::size_t> counts;
};

Multiplicities multiplicities(std::span<const CellIndex> config) {
  std::vector<CellIndex> sorted(config.begin(), config.end());
  std::sort(sorted.begin(), sorted.end());
  Multiplicities out;
  for (CellIndex c : sorted) {
    if (out.cells.empty() || out.cells.back() != c) {
      out.cells.push_back(c);
      out.counts.push_back(0);
    }
    ++out.counts.back();
  }
  return out;
}

double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

// Mixed-radix index over count vectors r with 0 <= r_i <= m_i.
class CountSpace {
 public:
  explicit CountSpace(const std::vector<std::size_t>& limits) : limits_(limits), stride_(limits.size()) {
    std::size_t s = 1;
    for (std::size_t i = 0; i < limits.size(); ++i) {
      stride_[i] = s;
      s *= limits[i] + 1;
    }
    size_ = s;
  }
  std::size_t size() const { return size_; }
  std::size_t index(const std::vector<std::size_t>& r) const {
    std::size_t id = 0;
    for (std::size_t i = 0; i < r.size(); ++i) id += r[i] * stride_[i];
    return id;
  }

 private:
  std::vector<std::size_t> limits_;
  std::vector<std::size_t> stride_;
  std::size_t size_ = 1;
};

// exp(-K0) sum over partitions of prod |w|! K^{(|w|)}(w). Points in the same
// cell are interchangeable, so the sum runs over count vectors: the block
// holding one fixed point of the lowest occupied cell is chosen first, weighted
// by the number of labeled blocks with the same counts.
class KhinchinSum {
 public:
  KhinchinSum(const std::vector<Compound>& compounds, const Multiplicities& m, bool pairs_only)
      : compounds_(compounds), m_(m), pairs_only_(pairs_only), space_(m.counts),
        memo_(space_.size(), -1.0) {}

  double operator()(const std::vector<std::size_t>& r) {
    const std::size_t id = space_.index(r);
    if (id == 0) return 1.0;
    double& slot = memo_[id];
    if (slot >= 0.0) return slot;
    std::size_t low = 0;
    while (r[low] == 0) ++low;
    const std::size_t max_block = pairs_only_ ? 2 : compounds_.size();
    std::vector<std::size_t> rest = r;
    std::array<CellIndex, kMaxKhinchinOrder> block{};
    double sum = 0.0;
    // Chooses b_i for cells i >= low; the lowest cell contributes at least one point.
    auto visit = [&](auto&& self, std::size_t i, std::size_t size, double ways) -> void {
      if (i == r.size()) {
        if (size == 0 || (pairs_only_ && size != 2)) return;
        const double k = compounds_[size - 1].at(std::span<const CellIndex>(block.data(), size));
        if (k != 0.0) sum += ways * factorial(size) * k * (*this)(rest);
        return;
      }
      const std::size_t first = i == low ? 1 : 0;
      for (std::size_t bi = first; bi <= r[i] && size + bi <= max_block; ++bi) {
        const double w = i == low ? binomial(r[i] - 1, bi - 1) : binomial(r[i], bi);
        for (std::size_t j = 0; j < bi; ++j) block[size + j] = m_.cells[i];
        rest[i] = r[i] - bi;
        self(self, i + 1, size + bi, ways * w);
      }
      rest[i] = r[i];
    };
    visit(visit, low, 0, 1.0);
    slot = sum;
    return sum;
  }

 private:
  const std::vector<Compound>& compounds_;
  const Multiplicities& m_;
  bool pairs_only_;
  CountSpace space_;
  std::vector<double> memo_;
};

double khinchin_density(const std::vector<Compound>& compounds, std::span<const CellIndex> cells, bool pairs_only) {
  const std::size_t n = cells.size();
  if (n > kMaxClusterPoints)
    throw SizeLimitError("Khinchin density limited to " + std::to_string(kMaxClusterPoints) + " points");
  const double norm = std::exp(-khinchin_normalizer(compounds));
  if (n == 0) return norm;
  if (pairs_only && n % 2 == 1) return 0.0;
  const Multiplicities m = multiplicities(cells);
  KhinchinSum sum(compounds, m, pairs_only);
  return norm * sum(m.counts);
}

// f(X) = sum over splits X = X1 + X2 of f1(X1) f2(X2); splits with the same
// counts per cell are grouped with their binomial weights.
double superposition_density(std::span<const ProcessModel> parts, std::span<const CellIndex> cells) {
  if (parts.size() == 1) return density(parts.front(), cells);
  const std::size_t n = cells.size();
  if (n > kMaxSuperpositionPoints)
    throw SizeLimitError("superposition density limited to " + std::to_string(kMaxSuperpositionPoints) + " points");
  const Multiplicities m = multiplicities(cells);
  std::vector<std::size_t> b(m.counts.size(), 0);
  std::vector<CellIndex> mine, rest;
  double sum = 0.0;
  while (true) {
    mine.clear();
    rest.clear();
    double ways = 1.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      ways *= binomial(m.counts[i], b[i]);
      mine.insert(mine.end(), b[i], m.cells[i]);
      rest.insert(rest.end(), m.counts[i] - b[i], m.cells[i]);
    }
    const double head = density(parts.front(), mine);
    if (head != 0.0) sum += ways * head * superposition_density(parts.subspan(1), rest);
    std::size_t i = 0;
    while (i < b.size() && b[i] == m.counts[i]) b[i++] = 0;
    if (i == b.size()) break;
    ++b[i];
  }
  return sum;
}

std::vector<double> scaled_weights(const Field& f) { return {f.values().begin(), f.values().end()}; }

void sample_compounds(const std::vector<Compound>& compounds, Philox& rng, PointConfig& out) {
  for (const Compound& k : compounds) {
    const double total = k.total();
    if (total <= 0.0) continue;
    const std::size_t count = sample_poisson(rng, total);
    for (std::size_t c = 0; c < count; ++c) {
      const std::size_t flat = sample_categorical(rng, k.values());
      for (CellIndex cell : k.unflatten(flat)) out.insert(cell);
    }
  }
}

bool is_null(const ProcessModel& m) {
  if (const auto* p = m.as<Poisson>()) return all_zero(p->intensity);
  return false;
}

bool is_exponential_family(const ProcessModel& m) {
  return m.as<Poisson>() || m.as<GaussPoisson>() || m.as<Khinchin>();
}

ProcessModel from_compounds(std::vector<Compound> compounds) {
  while (compounds.size() > 1 && compounds.back().is_zero()) compounds.pop_back();
  const Space space = compounds.front().space();
  if (compounds.size() == 1) {
    return Poisson{Field(space, {compounds[0].values().begin(), compounds[0].values().end()})};
  }
  if (compounds.size() == 2) {
    return GaussPoisson{Field(space, {compounds[0].values().begin(), compounds[0].values().end()}),
                        std::move(compounds[1])};
  }
  return Khinchin{std::move(compounds)};
}

}  // namespace

// ---- Compound ----

Compound::Compound(Space space, std::size_t order, std::vector<double> values)
    : space_(std::move(space)), order_(order), values_(std::move(values)) {
  if (!space_) throw ModelError("compound without a grid");
  if (order_ == 0 || order_ > kMaxKhinchinOrder)
    throw ModelError("compound order must be in 1.." + std::to_string(kMaxKhinchinOrder));
  if (values_.size() != ipow(space_->cell_count(), order_)) throw ModelError("compound has the wrong number of values");
}

Compound Compound::zeros(Space space, std::size_t order) { return constant(std::move(space), order, 0.0); }

Compound Compound::constant(Space space, std::size_t order, double value) {
  const std::size_t n = ipow(space->cell_count(), order);
  return Compound(std::move(space), order, std::vector<double>(n, value));
}

Compound Compound::from_field(const Field& f) {
  return Compound(f.space(), 1, {f.values().begin(), f.values().end()});
}

std::size_t Compound::flat_index(std::span<const CellIndex> cells) const {
  std::size_t idx = 0;
  const std::size_t k = space_->cell_count();
  for (CellIndex c : cells) idx = idx * k + c;
  return idx;
}

std::vector<CellIndex> Compound::unflatten(std::size_t flat) const {
  const std::size_t k = space_->cell_count();
  std::vector<CellIndex> cells(order_);
  for (std::size_t i = order_; i-- > 0;) {
    cells[i] = flat % k;
    flat /= k;
  }
  return cells;
}

double Compound::total() const {
  double sum = 0.0;
  for (double v : values_) sum += v;
  return sum * std::pow(space_->cell_volume(), static_cast<double>(order_));
}

Field Compound::marginal() const {
  const std::size_t k = space_->cell_count();
  const std::size_t stride = values_.size() / k;
  std::vector<double> m(k, 0.0);
  for (std::size_t y = 0; y < k; ++y)
    for (std::size_t r = 0; r < stride; ++r) m[y] += values_[y * stride + r];
  const double vol = std::pow(space_->cell_volume(), static_cast<double>(order_ - 1));
  for (double& v : m) v *= vol;
  return Field(space_, std::move(m));
}

bool Compound::is_symmetric(double tol) const {
  for (std::size_t flat = 0; flat < values_.size(); ++flat) {
    std::vector<CellIndex> cells = unflatten(flat);
    std::sort(cells.begin(), cells.end());
    const double ref = values_[flat_index(cells)];
    if (std::abs(values_[flat] - ref) > tol * std::max(1.0, std::abs(ref))) return false;
  }
  return true;
}

bool Compound::is_zero() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

Compound& Compound::operator+=(const Compound& other) {
  require_same_space(space_, other.space_, "compound addition");
  if (order_ != other.order_) throw ModelError("adding compounds of different orders");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

// ---- ProcessModel ----

ProcessModel::ProcessModel(Bernoulli m) : model_(std::move(m)) { validate(); }
ProcessModel::ProcessModel(Poisson m) : model_(std::move(m)) { validate(); }
ProcessModel::ProcessModel(IidCluster m) : model_(std::move(m)) { validate(); }
ProcessModel::ProcessModel(GaussPoisson m) : model_(std::move(m)) { validate(); }
ProcessModel::ProcessModel(Khinchin m) : model_(std::move(m)) { validate(); }
ProcessModel::ProcessModel(Superposition m) : model_(std::move(m)) { validate(); }

const Space& ProcessModel::space() const {
  return std::visit(overloaded{
                        [](const Bernoulli& m) -> const Space& { return m.spatial.space(); },
                        [](const Poisson& m) -> const Space& { return m.intensity.space(); },
                        [](const IidCluster& m) -> const Space& { return m.spatial.space(); },
                        [](const GaussPoisson& m) -> const Space& { return m.singles.space(); },
                        [](const Khinchin& m) -> const Space& { return m.compounds.front().space(); },
                        [](const Superposition& m) -> const Space& { return m.parts.front().space(); },
                    },
                    model_);
}

std::string ProcessModel::kind() const {
  static constexpr std::array<const char*, 6> names = {"bernoulli",     "poisson",  "iid_cluster",
                                                       "gauss_poisson", "khinchin", "superposition"};
  return names[model_.index()];
}

void ProcessModel::validate() const {
  std::visit(overloaded{
                 [](const Bernoulli& m) {
                   if (!(m.existence >= 0.0 && m.existence <= 1.0))
                     throw ModelError("Bernoulli existence probability must lie in [0, 1]");
                   check_normalized(m.spatial, "Bernoulli spatial density");
                 },
                 [](const Poisson& m) { require_density(m.intensity, "Poisson intensity"); },
                 [](const IidCluster& m) {
                   check_pmf(m.cardinality);
                   check_normalized(m.spatial, "i.i.d. cluster spatial density");
                 },
                 [](const GaussPoisson& m) {
                   require_density(m.singles, "Gauss-Poisson K1");
                   check_compound(m.pairs, 2, m.singles.space());
                 },
                 [](const Khinchin& m) {
                   if (m.compounds.empty()) throw ModelError("Khinchin process needs at least one compound");
                   if (m.compounds.size() > kMaxKhinchinOrder)
                     throw ModelError("Khinchin order limited to " + std::to_string(kMaxKhinchinOrder));
                   for (std::size_t k = 0; k < m.compounds.size(); ++k)
                     check_compound(m.compounds[k], k + 1, m.compounds.front().space());
                 },
                 [](const Superposition& m) {
                   if (m.parts.empty()) throw ModelError("superposition of nothing");
                   for (const auto& p : m.parts) require_same_space(p.space(), m.parts.front().space(), "superposition");
                 },
             },
             model_);
}

ProcessModel poisson_uniform(const Space& space, double total_mass) {
  return Poisson{Field::constant(space, total_mass / (static_cast<double>(space->cell_count()) * space->cell_volume()))};
}

Field uniform_spatial(const Space& space) {
  return Field::constant(space, 1.0 / (static_cast<double>(space->cell_count()) * space->cell_volume()));
}

// ---- density ----

double density(const ProcessModel& m, const PointConfig& phi) { return density(m, phi.cells()); }

double density(const ProcessModel& m, std::span<const CellIndex> cells) {
  for (CellIndex c : cells)
    if (c >= m.space()->cell_count()) throw SpaceMismatchError("configuration point outside the model grid");
  return std::visit(
      overloaded{
          [&](const Bernoulli& b) -> double {
            if (cells.empty()) return 1.0 - b.existence;
            if (cells.size() == 1) return b.existence * b.spatial[cells[0]];
            return 0.0;
          },
          [&](const Poisson& p) -> double {
            double v = std::exp(-integrate(p.intensity));
            for (CellIndex c : cells) v *= p.intensity[c];
            return v;
          },
          [&](const IidCluster& iid) -> double {
            const std::size_t n = cells.size();
            if (n >= iid.cardinality.size()) return 0.0;
            double v = iid.cardinality[n] * factorial(n);
            for (CellIndex c : cells) v *= iid.spatial[c];
            return v;
          },
          [&](const GaussPoisson& gp) -> double {
            return khinchin_density(khinchin_compounds(m), cells, all_zero(gp.singles));
          },
          [&](const Khinchin& k) -> double { return khinchin_density(k.compounds, cells, false); },
          [&](const Superposition& s) -> double { return superposition_density(s.parts, cells); },
      },
      m.variant());
}

SetDensity density_view(const ProcessModel& m) {
  SetDensity view;
  view.space = m.space();
  view.eval = [m](std::span<const CellIndex> cells) { return density(m, cells); };
  if (m.as<GaussPoisson>() || m.as<Khinchin>()) view.order = kMaxClusterPoints;
  if (const auto* s = m.as<Superposition>()) {
    view.order = kMaxSuperpositionPoints;
    for (const auto& part : s->parts) view.order = std::min(view.order, density_view(part).order);
  }
  return view;
}

// ---- cardinality ----

PowerSeries cardinality_pgf(const ProcessModel& m, std::size_t order) {
  return std::visit(overloaded{
                        [&](const Bernoulli& b) { return PowerSeries::bernoulli(b.existence, order).resized(order); },
                        [&](const Poisson& p) { return PowerSeries::poisson(integrate(p.intensity), order); },
                        [&](const IidCluster& iid) { return PowerSeries(iid.cardinality).resized(order); },
                        [&](const GaussPoisson&) {
                          const auto ks = khinchin_compounds(m);
                          std::vector<double> a(order + 1, 0.0);
                          a[0] = -khinchin_normalizer(ks);
                          for (std::size_t k = 0; k < ks.size() && k + 1 <= order; ++k) a[k + 1] = ks[k].total();
                          return series_exp(PowerSeries(std::move(a)));
                        },
                        [&](const Khinchin& kh) {
                          std::vector<double> a(order + 1, 0.0);
                          a[0] = -khinchin_normalizer(kh.compounds);
                          for (std::size_t k = 0; k < kh.compounds.size() && k + 1 <= order; ++k)
                            a[k + 1] = kh.compounds[k].total();
                          return series_exp(PowerSeries(std::move(a)));
                        },
                        [&](const Superposition& s) {
                          PowerSeries acc = PowerSeries::constant(1.0, order);
                          for (const auto& part : s.parts) acc = pgf_product(acc, cardinality_pgf(part, order));
                          return acc;
                        },
                    },
                    m.variant());
}

CardinalityPMF cardinality_pmf(const ProcessModel& m, std::size_t nmax) {
  const PowerSeries g = cardinality_pgf(m, nmax);
  CardinalityPMF out;
  out.probs = g.coeffs();
  out.tail = g.tail_mass();
  return out;
}

// ---- sampling ----

PointConfig sample(const ProcessModel& m, Philox& rng) {
  PointConfig out;
  std::visit(overloaded{
                 [&](const Bernoulli& b) {
                   if (sample_bernoulli(rng, b.existence)) out.insert(sample_categorical(rng, scaled_weights(b.spatial)));
                 },
                 [&](const Poisson& p) {
                   const double vol = p.intensity.space()->cell_volume();
                   for (CellIndex c = 0; c < p.intensity.size(); ++c) {
                     const std::size_t k = sample_poisson(rng, p.intensity[c] * vol);
                     for (std::size_t j = 0; j < k; ++j) out.insert(c);
                   }
                 },
                 [&](const IidCluster& iid) {
                   const std::size_t n = sample_categorical(rng, iid.cardinality);
                   const auto w = scaled_weights(iid.spatial);
                   for (std::size_t j = 0; j < n; ++j) out.insert(sample_categorical(rng, w));
                 },
                 [&](const GaussPoisson&) { sample_compounds(khinchin_compounds(m), rng, out); },
                 [&](const Khinchin& k) { sample_compounds(k.compounds, rng, out); },
                 [&](const Superposition& s) {
                   for (const auto& part : s.parts) out.merge(sample(part, rng));
                 },
             },
             m.variant());
  return out;
}

// ---- moments ----

Field first_moment(const ProcessModel& m) {
  return std::visit(overloaded{
                        [](const Bernoulli& b) { return b.existence * b.spatial; },
                        [](const Poisson& p) { return p.intensity; },
                        [](const IidCluster& iid) {
                          double mean = 0.0;
                          for (std::size_t n = 0; n < iid.cardinality.size(); ++n)
                            mean += static_cast<double>(n) * iid.cardinality[n];
                          return mean * iid.spatial;
                        },
                        [](const GaussPoisson& gp) { return gp.singles + 2.0 * gp.pairs.marginal(); },
                        [](const Khinchin& k) {
                          Field acc = Field::zeros(k.compounds.front().space());
                          for (const Compound& c : k.compounds)
                            acc += static_cast<double>(c.order()) * c.marginal();
                          return acc;
                        },
                        [](const Superposition& s) {
                          Field acc = Field::zeros(s.parts.front().space());
                          for (const auto& part : s.parts) acc += first_moment(part);
                          return acc;
                        },
                    },
                    m.variant());
}

namespace {

double iid_variance(const std::vector<double>& rho, double mu_b) {
  double mean = 0.0, second_factorial = 0.0;
  for (std::size_t n = 0; n < rho.size(); ++n) {
    const double dn = static_cast<double>(n);
    mean += dn * rho[n];
    second_factorial += dn * (dn - 1.0) * rho[n];
  }
  if (mean == 0.0) return 0.0;
  return mu_b + mu_b * mu_b * (second_factorial / (mean * mean) - 1.0);
}

}  // namespace

double variance_analytic(const ProcessModel& m, const Region& region) {
  require_same_space(m.space(), region.space(), "variance");
  const double mu_b = integrate(first_moment(m), region);
  return std::visit(
      overloaded{
          [&](const Bernoulli& b) { return iid_variance({1.0 - b.existence, b.existence}, mu_b); },
          [&](const Poisson&) { return mu_b; },
          [&](const IidCluster& iid) { return iid_variance(iid.cardinality, mu_b); },
          [&](const GaussPoisson& gp) {
            const auto cells = region.members();
            const double vol = region.space()->cell_volume();
            double pair_mass = 0.0;
            std::array<CellIndex, 2> ij{};
            for (CellIndex i : cells)
              for (CellIndex j : cells) {
                ij = {i, j};
                pair_mass += gp.pairs.at(ij);
              }
            return mu_b + 2.0 * pair_mass * vol * vol;
          },
          [&](const Khinchin&) -> double {
            throw UnsupportedModelError("no closed-form variance for a general Khinchin process; use Monte Carlo");
          },
          [&](const Superposition&) -> double {
            throw UnsupportedModelError("no closed-form variance for a composite process; use Monte Carlo");
          },
      },
      m.variant());
}

// ---- superposition ----

std::vector<Compound> khinchin_compounds(const ProcessModel& m) {
  if (const auto* p = m.as<Poisson>()) return {Compound::from_field(p->intensity)};
  if (const auto* gp = m.as<GaussPoisson>()) return {Compound::from_field(gp->singles), gp->pairs};
  if (const auto* k = m.as<Khinchin>()) return k->compounds;
  throw UnsupportedModelError(m.kind() + " is not an exponential-family (Khinchin) process");
}

double khinchin_normalizer(const std::vector<Compound>& compounds) {
  double k0 = 0.0;
  for (const Compound& c : compounds) k0 += c.total();
  return k0;
}

ProcessModel superpose(const ProcessModel& a, const ProcessModel& b) {
  require_same_space(a.space(), b.space(), "superpose");
  if (is_null(b)) return a;
  if (is_null(a)) return b;
  if (is_exponential_family(a) && is_exponential_family(b)) {
    std::vector<Compound> ka = khinchin_compounds(a);
    std::vector<Compound> kb = khinchin_compounds(b);
    if (kb.size() > ka.size()) std::swap(ka, kb);
    for (std::size_t k = 0; k < kb.size(); ++k) ka[k] += kb[k];
    return from_compounds(std::move(ka));
  }
  Superposition s;
  for (const ProcessModel* m : {&a, &b}) {
    if (const auto* inner = m->as<Superposition>())
      s.parts.insert(s.parts.end(), inner->parts.begin(), inner->parts.end());
    else
      s.parts.push_back(*m);
  }
  return s;
}

ProcessModel iid_two_point_family(const Field& spatial, double mean, std::size_t s) {
  if (s == 0 || mean > static_cast<double>(s)) throw ModelError("two-point family needs s >= mean > 0");
  std::vector<double> rho(s + 1, 0.0);
  rho[0] = 1.0 - mean / static_cast<double>(s);
  rho[s] = mean / static_cast<double>(s);
  return IidCluster{std::move(rho), spatial};
}

}  // namespace rfs
