#include "rfs/functionals.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "rfs/errors.hpp"

namespace rfs {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// integral of h^{(x)k} K^{(k)}: contract one axis at a time.
double contract(const Compound& k, const Field& h) {
  const std::size_t cells = k.space()->cell_count();
  const double vol = k.space()->cell_volume();
  std::vector<double> cur(k.values().begin(), k.values().end());
  for (std::size_t axis = 0; axis < k.order(); ++axis) {
    std::vector<double> next(cur.size() / cells, 0.0);
    for (std::size_t i = 0; i < next.size(); ++i)
      for (std::size_t c = 0; c < cells; ++c) next[i] += cur[i * cells + c] * h[c] * vol;
    cur = std::move(next);
  }
  return cur.front();
}

double exponential_family_pgfl(const std::vector<Compound>& compounds, const Field& h) {
  double exponent = -khinchin_normalizer(compounds);
  for (const Compound& k : compounds) exponent += contract(k, h);
  return std::exp(exponent);
}

Field add_scaled(const Field& base, const Field& dir, double eps) { return base + eps * dir; }

double nested(const Functional& F, const Field& base, std::span<const Field> dirs, double eps) {
  if (dirs.empty()) {
    const double v = F(base);
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "functional evaluation is not finite at perturbed argument (";
      for (std::size_t i = 0; i < base.size(); ++i) msg << (i ? ", " : "") << base[i];
      msg << ")";
      throw DifferencingError(msg.str());
    }
    return v;
  }
  const Field& d = dirs.back();
  const auto rest = dirs.first(dirs.size() - 1);
  return (nested(F, add_scaled(base, d, eps), rest, eps) - nested(F, add_scaled(base, d, -eps), rest, eps)) /
         (2.0 * eps);
}

double step_for(std::size_t order) { return order <= 1 ? kFirstOrderStep : kNestedStep; }

std::vector<Field> indicators(std::span<const Region> regions, const Space& space) {
  if (regions.size() > kMaxDirections) throw SizeLimitError("at most three differentiation directions");
  std::vector<Field> out;
  for (const Region& r : regions) {
    require_same_space(r.space(), space, "moment region");
    out.push_back(r.indicator());
  }
  return out;
}

}  // namespace

double pgfl_eval(const ProcessModel& m, const Field& h) {
  require_same_space(m.space(), h.space(), "p.g.fl. argument");
  return std::visit(overloaded{
                        [&](const Bernoulli& b) { return 1.0 - b.existence + b.existence * integrate(h.times(b.spatial)); },
                        [&](const Poisson& p) { return std::exp(integrate((h - Field::constant(h.space(), 1.0)).times(p.intensity))); },
                        [&](const IidCluster& iid) {
                          const double x = integrate(h.times(iid.spatial));
                          double acc = 0.0;
                          for (std::size_t n = iid.cardinality.size(); n-- > 0;) acc = acc * x + iid.cardinality[n];
                          return acc;
                        },
                        [&](const GaussPoisson&) { return exponential_family_pgfl(khinchin_compounds(m), h); },
                        [&](const Khinchin& k) { return exponential_family_pgfl(k.compounds, h); },
                        [&](const Superposition& s) {
                          double prod = 1.0;
                          for (const auto& part : s.parts) prod *= pgfl_eval(part, h);
                          return prod;
                        },
                    },
                    m.variant());
}

TruncatedSum pgfl_janossy(const ProcessModel& m, const Field& h, std::size_t nmax) {
  require_same_space(m.space(), h.space(), "p.g.fl. argument");
  SetDensity weighted = density_view(m);
  auto base = weighted.eval;
  weighted.eval = [base, &h](std::span<const CellIndex> cells) {
    double w = base(cells);
    for (CellIndex c : cells) w *= h[c];
    return w;
  };
  TruncatedSum out;
  out.value = set_integral(weighted, Region::all(m.space()), nmax);
  out.tail_bound = std::max(0.0, cardinality_pmf(m, nmax).tail);
  return out;
}

double laplace_eval(const ProcessModel& m, const Field& f) {
  return pgfl_eval(m, f.map([](double v) { return std::exp(-v); }));
}

Functional make_functional(const ProcessModel& m, FunctionalKind kind) {
  if (kind == FunctionalKind::PGFL) return [m](const Field& h) { return pgfl_eval(m, h); };
  return [m](const Field& f) { return laplace_eval(m, f); };
}

double fd_derivative(const Functional& F, const Field& base, std::span<const Field> directions, double eps) {
  if (directions.size() > kMaxDirections) throw SizeLimitError("at most three differentiation directions");
  if (!(eps > 0.0)) throw DifferencingError("finite-difference step must be positive");
  for (const Field& d : directions) require_same_space(base.space(), d.space(), "derivative direction");
  return nested(F, base, directions, eps);
}

double factorial_moment(const ProcessModel& m, std::span<const Region> regions) {
  const auto dirs = indicators(regions, m.space());
  return fd_derivative(make_functional(m, FunctionalKind::PGFL), Field::constant(m.space(), 1.0), dirs,
                       step_for(dirs.size()));
}

double moment_via_laplace(const ProcessModel& m, std::span<const Region> regions) {
  const auto dirs = indicators(regions, m.space());
  const double sign = dirs.size() % 2 == 0 ? 1.0 : -1.0;
  return sign * fd_derivative(make_functional(m, FunctionalKind::Laplace), Field::zeros(m.space()), dirs,
                              step_for(dirs.size()));
}

double variance_via_laplace(const ProcessModel& m, const Region& region) {
  const Region one[] = {region};
  const Region two[] = {region, region};
  const double mu1 = moment_via_laplace(m, one);
  return moment_via_laplace(m, two) - mu1 * mu1;
}

}  // namespace rfs
