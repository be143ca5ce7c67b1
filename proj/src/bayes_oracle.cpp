#include "rfs/bayes_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rfs/errors.hpp"

namespace rfs {
namespace {

constexpr double kKernelTol = 1e-9;

void check_probability_field(const Field& f, const char* what) {
  for (double v : f.values())
    if (!(v >= 0.0 && v <= 1.0)) throw ModelError(std::string(what) + " must lie in [0, 1]");
}

std::string describe(const PointConfig& z) {
  std::ostringstream out;
  out << "{";
  for (std::size_t i = 0; i < z.size(); ++i) out << (i ? ", " : "") << z.cells()[i];
  out << "}";
  return out.str();
}

}  // namespace

// ---- Kernel ----

Kernel::Kernel(Space to, Space from, std::vector<double> values)
    : to_(std::move(to)), from_(std::move(from)), values_(std::move(values)) {
  if (!to_ || !from_) throw ModelError("kernel without grids");
  if (values_.size() != to_->cell_count() * from_->cell_count()) throw ModelError("kernel has the wrong size");
  for (double v : values_)
    if (!(v >= 0.0) || !std::isfinite(v)) throw ModelError("kernel values must be finite and nonnegative");
}

Kernel Kernel::identity(const Space& space) {
  const std::size_t k = space->cell_count();
  std::vector<double> v(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) v[i * k + i] = 1.0 / space->cell_volume();
  return Kernel(space, space, std::move(v));
}

Kernel Kernel::gaussian(const Space& to, const Space& from, double sigma) {
  if (!(sigma > 0.0)) throw ModelError("Gaussian kernel width must be positive");
  if (to->dimension() != from->dimension()) throw SpaceMismatchError("kernel grids differ in dimension");
  const std::size_t nt = to->cell_count();
  const std::size_t nf = from->cell_count();
  std::vector<double> v(nt * nf, 0.0);
  for (std::size_t y = 0; y < nf; ++y) {
    double col = 0.0;
    for (std::size_t x = 0; x < nt; ++x) {
      double d2 = 0.0;
      const auto cx = to->center(x);
      const auto cy = from->center(y);
      for (std::size_t a = 0; a < cx.size(); ++a) d2 += (cx[a] - cy[a]) * (cx[a] - cy[a]);
      v[x * nf + y] = std::exp(-0.5 * d2 / (sigma * sigma));
      col += v[x * nf + y];
    }
    for (std::size_t x = 0; x < nt; ++x) v[x * nf + y] /= col * to->cell_volume();
  }
  return Kernel(to, from, std::move(v));
}

Kernel Kernel::uniform(const Space& to, const Space& from) {
  const double value = 1.0 / (static_cast<double>(to->cell_count()) * to->cell_volume());
  return Kernel(to, from, std::vector<double>(to->cell_count() * from->cell_count(), value));
}

double Kernel::normalization_error() const {
  const std::size_t nt = to_->cell_count();
  const std::size_t nf = from_->cell_count();
  double worst = 0.0;
  for (std::size_t y = 0; y < nf; ++y) {
    double col = 0.0;
    for (std::size_t x = 0; x < nt; ++x) col += values_[x * nf + y];
    worst = std::max(worst, std::abs(col * to_->cell_volume() - 1.0));
  }
  return worst;
}

void MotionModel::validate() const {
  require_same_space(markov.to(), markov.from(), "motion kernel");
  require_same_space(markov.from(), survival.space(), "survival probability");
  require_same_space(markov.to(), birth.intensity.space(), "birth intensity");
  if (markov.normalization_error() > kKernelTol) throw ModelError("motion kernel columns must integrate to 1");
  check_probability_field(survival, "survival probability");
  require_density(birth.intensity, "birth intensity");
}

void SensorModel::validate() const {
  require_same_space(likelihood.from(), detection.space(), "detection probability");
  require_same_space(likelihood.to(), clutter.space(), "clutter intensity");
  if (likelihood.normalization_error() > kKernelTol) throw ModelError("likelihood columns must integrate to 1");
  check_probability_field(detection, "detection probability");
  require_density(clutter, "clutter intensity");
}

// ---- MultisetIndex ----

MultisetIndex::MultisetIndex(std::size_t cells, std::size_t nmax) : cells_(cells), nmax_(nmax) {
  if (cells == 0) throw ModelError("multiset index needs at least one cell");
  const std::size_t top = cells + nmax + 1;
  binom_.assign(top + 1, std::vector<double>(top + 1, 0.0));
  for (std::size_t a = 0; a <= top; ++a) {
    binom_[a][0] = 1.0;
    for (std::size_t b = 1; b <= a; ++b) binom_[a][b] = binom_[a - 1][b - 1] + (b <= a - 1 ? binom_[a - 1][b] : 0.0);
  }
  offsets_.assign(nmax + 2, 0);
  for (std::size_t n = 0; n <= nmax; ++n)
    offsets_[n + 1] = offsets_[n] + static_cast<std::size_t>(binom_[cells + n - 1][n]);
  const std::size_t total_ids = offsets_.back();
  sizes_.assign(total_ids, 0);
  mult_fact_.assign(total_ids, 1.0);
  tuple_start_.assign(total_ids + 1, 0);
  for (std::size_t n = 0; n <= nmax; ++n)
    for (std::size_t r = offsets_[n]; r < offsets_[n + 1]; ++r) sizes_[r] = n;
  for (std::size_t id = 0; id < total_ids; ++id) tuple_start_[id + 1] = tuple_start_[id] + sizes_[id];
  flat_tuples_.assign(tuple_start_.back(), 0);

  std::vector<CellIndex> cells_list(cells);
  for (std::size_t c = 0; c < cells; ++c) cells_list[c] = c;
  for (std::size_t n = 0; n <= nmax; ++n) {
    for_each_multiset(cells_list, n, [&](std::span<const CellIndex> tuple, double inv_fact) {
      const std::size_t g = id(tuple);
      std::copy(tuple.begin(), tuple.end(), flat_tuples_.begin() + static_cast<std::ptrdiff_t>(tuple_start_[g]));
      mult_fact_[g] = 1.0 / inv_fact;
    });
  }

  successor_.assign(total_ids * cells, npos);
  std::vector<CellIndex> scratch;
  for (std::size_t g = 0; g < total_ids; ++g) {
    if (sizes_[g] == nmax) continue;
    const auto t = tuple(g);
    for (CellIndex c = 0; c < cells; ++c) {
      scratch.assign(t.begin(), t.end());
      scratch.insert(std::upper_bound(scratch.begin(), scratch.end(), c), c);
      successor_[g * cells + c] = id(scratch);
    }
  }
}

std::size_t MultisetIndex::id(std::span<const CellIndex> sorted) const {
  const std::size_t n = sorted.size();
  // Strictly increasing b_i = a_i + i, ranked in the combinatorial number system.
  double rank = 0.0;
  for (std::size_t i = 0; i < n; ++i) rank += binom_[sorted[i] + i][i + 1];
  return offsets_[n] + static_cast<std::size_t>(rank);
}

std::span<const CellIndex> MultisetIndex::tuple(std::size_t id) const {
  return std::span<const CellIndex>(flat_tuples_).subspan(tuple_start_[id], sizes_[id]);
}

// ---- TruncatedMOD ----

TruncatedMOD::TruncatedMOD(Space space, std::size_t nmax)
    : space_(std::move(space)), index_(std::make_shared<MultisetIndex>(space_->cell_count(), nmax)) {
  values_.assign(index_->total(), 0.0);
}

TruncatedMOD TruncatedMOD::empty_set(Space space, std::size_t nmax) {
  TruncatedMOD f(std::move(space), nmax);
  f.values_[0] = 1.0;
  return f;
}

TruncatedMOD TruncatedMOD::from_model(const ProcessModel& m, std::size_t nmax) {
  TruncatedMOD f(m.space(), nmax);
  for (std::size_t g = 0; g < f.values_.size(); ++g) f.values_[g] = rfs::density(m, f.index_->tuple(g));
  f.deficit_ = f.normalize();
  return f;
}

TruncatedMOD TruncatedMOD::poisson(const Field& intensity, std::size_t nmax) {
  return from_model(ProcessModel(Poisson{intensity}), nmax);
}

TruncatedMOD TruncatedMOD::extended(std::size_t new_nmax) const {
  if (new_nmax < nmax()) throw TruncationError("cannot shrink a truncated density by extension");
  TruncatedMOD out(space_, new_nmax);
  for (std::size_t g = 0; g < values_.size(); ++g) out.values_[g] = values_[g];  // ids of smaller sizes coincide
  out.deficit_ = deficit_;
  out.evidence_ = evidence_;
  return out;
}

std::size_t TruncatedMOD::support_order() const {
  std::size_t top = 0;
  for (std::size_t g = 0; g < values_.size(); ++g)
    if (values_[g] != 0.0) top = std::max(top, index_->size_of(g));
  return top;
}

double TruncatedMOD::density(std::span<const CellIndex> cells) const {
  if (cells.size() > nmax()) return 0.0;
  std::vector<CellIndex> sorted(cells.begin(), cells.end());
  std::sort(sorted.begin(), sorted.end());
  if (!sorted.empty() && sorted.back() >= space_->cell_count()) throw SpaceMismatchError("cell outside grid");
  return values_[index_->id(sorted)];
}

void TruncatedMOD::set_density(std::span<const CellIndex> cells, double value) {
  if (cells.size() > nmax()) throw TruncationError("configuration larger than the truncation order");
  std::vector<CellIndex> sorted(cells.begin(), cells.end());
  std::sort(sorted.begin(), sorted.end());
  values_[index_->id(sorted)] = value;
}

double TruncatedMOD::probability_at(std::size_t id) const {
  const double n = static_cast<double>(index_->size_of(id));
  return values_[id] * std::pow(space_->cell_volume(), n) / index_->multiplicity_factorial(id);
}

void TruncatedMOD::set_probability_at(std::size_t id, double p) {
  const double n = static_cast<double>(index_->size_of(id));
  values_[id] = p * index_->multiplicity_factorial(id) / std::pow(space_->cell_volume(), n);
}

double TruncatedMOD::total_mass() const {
  double sum = 0.0;
  for (std::size_t g = 0; g < values_.size(); ++g) sum += probability_at(g);
  return sum;
}

double TruncatedMOD::normalize() {
  const double mass = total_mass();
  if (!(mass > 0.0)) throw TruncationError("multi-object density has no mass to normalize");
  for (double& v : values_) v /= mass;
  return 1.0 - mass;
}

std::vector<double> TruncatedMOD::cardinality() const {
  std::vector<double> out(nmax() + 1, 0.0);
  for (std::size_t g = 0; g < values_.size(); ++g) out[index_->size_of(g)] += probability_at(g);
  return out;
}

SetDensity TruncatedMOD::view() const {
  SetDensity v;
  v.space = space_;
  v.order = nmax();
  v.eval = [self = *this](std::span<const CellIndex> cells) { return self.density(cells); };
  return v;
}

// ---- association sums ----

double association_sum(std::size_t sources, std::size_t destinations, const std::function<double(std::size_t)>& miss,
                       const std::function<double(std::size_t, std::size_t)>& hit,
                       const std::function<double(std::size_t)>& unassigned) {
  if (destinations > 24) throw SizeLimitError("association sums limited to 24 destinations");
  const std::size_t states = std::size_t{1} << destinations;
  std::vector<double> dp(states, 0.0), next(states, 0.0);
  dp[0] = 1.0;
  for (std::size_t i = 0; i < sources; ++i) {
    std::fill(next.begin(), next.end(), 0.0);
    const double m = miss(i);
    for (std::size_t mask = 0; mask < states; ++mask) {
      const double w = dp[mask];
      if (w == 0.0) continue;
      next[mask] += w * m;
      for (std::size_t j = 0; j < destinations; ++j) {
        if (mask & (std::size_t{1} << j)) continue;
        next[mask | (std::size_t{1} << j)] += w * hit(i, j);
      }
    }
    dp.swap(next);
  }
  std::vector<double> free_factor(destinations);
  for (std::size_t j = 0; j < destinations; ++j) free_factor[j] = unassigned(j);
  double total = 0.0;
  for (std::size_t mask = 0; mask < states; ++mask) {
    if (dp[mask] == 0.0) continue;
    double w = dp[mask];
    for (std::size_t j = 0; j < destinations; ++j)
      if (!(mask & (std::size_t{1} << j))) w *= free_factor[j];
    total += w;
  }
  return total;
}

double markov_density(const MotionModel& mm, const PointConfig& x, const PointConfig& y) {
  const auto xs = x.cells();
  const auto ys = y.cells();
  const Field& birth = mm.birth.intensity;
  const double base = std::exp(-integrate(birth));
  return base * association_sum(
                    ys.size(), xs.size(), [&](std::size_t i) { return 1.0 - mm.survival[ys[i]]; },
                    [&](std::size_t i, std::size_t j) { return mm.survival[ys[i]] * mm.markov(xs[j], ys[i]); },
                    [&](std::size_t j) { return birth[xs[j]]; });
}

double likelihood_density(const SensorModel& sm, const PointConfig& z, const PointConfig& x) {
  const auto zs = z.cells();
  const auto xs = x.cells();
  const double base = std::exp(-integrate(sm.clutter));
  return base * association_sum(
                    xs.size(), zs.size(), [&](std::size_t i) { return 1.0 - sm.detection[xs[i]]; },
                    [&](std::size_t i, std::size_t j) { return sm.detection[xs[i]] * sm.likelihood(zs[j], xs[i]); },
                    [&](std::size_t j) { return sm.clutter[zs[j]]; });
}

// ---- prediction ----

namespace {

// Predicted p.g.f. G_X(h) = sum_Y P(Y) prod_{y in Y} q_y(h) with
// q_y(h) = 1 - p_S(y) + p_S(y) sum_x M(x|y) vol h_x. The sum is evaluated in
// Horner form over the trie of prior multisets: the suffix polynomial of a
// node is P(node) + sum_{c >= last cell} q_c S(node + c). Coefficients are
// indexed by multiset id; terms above the output order are dropped.
struct PredictionHorner {
  const TruncatedMOD& prior;
  const MultisetIndex& idx;
  // move[y][d]: probability a target at y ends at destination d; d = cells means death.
  std::vector<std::vector<double>> move;
  std::size_t depth_limit;
  std::vector<std::vector<double>> buffers;  // one per trie depth

  std::size_t length(std::size_t n) const {
    return idx.offset(std::min(depth_limit - n, idx.nmax()) + 1);
  }

  void suffix(std::size_t prior_id, std::size_t n) {
    std::vector<double>& out = buffers[n];
    std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(length(n)), 0.0);
    out[0] = prior.probability_at(prior_id);
    if (n >= depth_limit) return;
    const auto tuple = idx.tuple(prior_id);
    const CellIndex first = tuple.empty() ? 0 : tuple.back();
    const std::size_t child_len = length(n + 1);
    const std::vector<double>& child = buffers[n + 1];
    for (CellIndex y = first; y < idx.cells(); ++y) {
      suffix(idx.with(prior_id, y), n + 1);
      const auto& mv = move[y];
      for (std::size_t s = 0; s < child_len; ++s) {
        const double w = child[s];
        if (w == 0.0) continue;
        out[s] += w * mv[idx.cells()];
        for (CellIndex d = 0; d < idx.cells(); ++d) {
          const std::size_t t = idx.with(s, d);
          if (t != MultisetIndex::npos) out[t] += w * mv[d];
        }
      }
    }
  }
};

}  // namespace

TruncatedMOD bayes_predict(const TruncatedMOD& prior_in, const MotionModel& mm, const PredictOptions& options) {
  mm.validate();
  require_same_space(prior_in.space(), mm.markov.from(), "prediction prior");
  const std::size_t out_nmax = std::max(options.output_nmax, prior_in.nmax());
  const TruncatedMOD prior = out_nmax == prior_in.nmax() ? prior_in : prior_in.extended(out_nmax);
  const MultisetIndex& idx = prior.index();
  const std::size_t k = idx.cells();
  const double vol = prior.space()->cell_volume();

  const std::size_t depth = prior.support_order();
  PredictionHorner walk{prior, idx, std::vector<std::vector<double>>(k, std::vector<double>(k + 1, 0.0)), depth,
                        std::vector<std::vector<double>>(depth + 1, std::vector<double>(idx.total(), 0.0))};
  for (CellIndex y = 0; y < k; ++y) {
    for (CellIndex x = 0; x < k; ++x) walk.move[y][x] = mm.survival[y] * mm.markov(x, y) * vol;
    walk.move[y][k] = 1.0 - mm.survival[y];
  }
  walk.suffix(0, 0);

  // Poisson births: independent Poisson counts per cell.
  std::vector<double> dist = std::move(walk.buffers[0]);
  std::vector<double> next(dist.size());
  for (CellIndex x = 0; x < k; ++x) {
    const double lambda = mm.birth.intensity[x] * vol;
    if (lambda == 0.0) continue;
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t s = 0; s < dist.size(); ++s) {
      if (dist[s] == 0.0) continue;
      double pk = std::exp(-lambda);
      std::size_t target = s;
      for (std::size_t c = 0; target != MultisetIndex::npos; ++c) {
        next[target] += dist[s] * pk;
        pk *= lambda / static_cast<double>(c + 1);
        target = idx.with(target, x);
      }
    }
    dist.swap(next);
  }

  TruncatedMOD out(prior.space(), prior.nmax());
  for (std::size_t g = 0; g < dist.size(); ++g) out.set_probability_at(g, dist[g]);
  const double mass_in = prior.total_mass();
  const double deficit = 1.0 - out.total_mass() / mass_in;
  if (deficit > options.max_deficit) {
    std::ostringstream msg;
    msg << "prediction pushed mass " << deficit << " beyond cardinality " << prior.nmax();
    throw TruncationError(msg.str());
  }
  out.normalize();
  out.set_deficit(deficit);
  return out;
}

// ---- update ----

TruncatedMOD bayes_update(const TruncatedMOD& predicted, const PointConfig& z, const SensorModel& sm) {
  sm.validate();
  require_same_space(predicted.space(), sm.state_space(), "update prior");
  for (CellIndex c : z.cells())
    if (c >= sm.measurement_space()->cell_count()) throw SpaceMismatchError("measurement outside measurement grid");
  const MultisetIndex& idx = predicted.index();
  TruncatedMOD out(predicted.space(), predicted.nmax());
  double evidence = 0.0;
  for (std::size_t g = 0; g < idx.total(); ++g) {
    const double f = predicted.density_at(g);
    if (f == 0.0) continue;
    const auto t = idx.tuple(g);
    const double l = likelihood_density(sm, z, PointConfig(std::vector<CellIndex>(t.begin(), t.end())));
    out.set_density_at(g, l * f);
    evidence += out.probability_at(g);
  }
  if (!(evidence > 0.0)) throw ImpossibleMeasurementError("measurement set " + describe(z) + " has zero evidence");
  out.normalize();
  out.set_evidence(evidence);
  return out;
}

// ---- moments ----

Field mod_first_moment(const TruncatedMOD& f) {
  const MultisetIndex& idx = f.index();
  std::vector<double> mu(idx.cells(), 0.0);
  for (std::size_t g = 0; g < idx.total(); ++g) {
    const double p = f.probability_at(g);
    if (p == 0.0) continue;
    for (CellIndex c : idx.tuple(g)) mu[c] += p;
  }
  const double vol = f.space()->cell_volume();
  for (double& v : mu) v /= vol;
  return Field(f.space(), std::move(mu));
}

double mod_expected_count(const TruncatedMOD& f, const Region& region) {
  return integrate(mod_first_moment(f), region);
}

double mod_variance(const TruncatedMOD& f, const Region& region) {
  require_same_space(f.space(), region.space(), "variance region");
  const MultisetIndex& idx = f.index();
  double mean = 0.0, second_factorial = 0.0;
  for (std::size_t g = 0; g < idx.total(); ++g) {
    const double p = f.probability_at(g);
    if (p == 0.0) continue;
    double nb = 0.0;
    for (CellIndex c : idx.tuple(g))
      if (region.contains(c)) nb += 1.0;
    mean += p * nb;
    second_factorial += p * nb * (nb - 1.0);
  }
  return second_factorial + mean - mean * mean;
}

}  // namespace rfs
