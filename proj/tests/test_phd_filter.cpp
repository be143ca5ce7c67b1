#include <doctest.h>

#include <cmath>
#include <vector>

#include "rfs/bayes_oracle.hpp"
#include "rfs/errors.hpp"
#include "rfs/phd_filter.hpp"
#include "rfs/random.hpp"

using namespace rfs;

namespace {

Space grid(std::size_t cells, double width = 1.0) { return GridSpace::uniform(0.0, width * cells, cells); }

Kernel random_kernel(const Space& to, const Space& from, Philox& rng) {
  const std::size_t nt = to->cell_count();
  const std::size_t nf = from->cell_count();
  std::vector<double> v(nt * nf);
  for (std::size_t y = 0; y < nf; ++y) {
    double s = 0.0;
    for (std::size_t x = 0; x < nt; ++x) s += v[x * nf + y] = 0.05 + rng.uniform();
    for (std::size_t x = 0; x < nt; ++x) v[x * nf + y] /= s * to->cell_volume();
  }
  return Kernel(to, from, v);
}

Field random_field(const Space& g, Philox& rng, double lo, double hi) {
  std::vector<double> v(g->cell_count());
  for (auto& x : v) x = lo + (hi - lo) * rng.uniform();
  return Field(g, v);
}

SensorModel random_sensor(const Space& state, const Space& meas, Philox& rng) {
  return SensorModel{random_kernel(meas, state, rng), random_field(state, rng, 0.3, 0.95),
                     random_field(meas, rng, 0.05, 0.4)};
}

double max_abs_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::vector<Region> region_fixtures(const Space& g) {
  return {Region::cells(g, {0}), Region::cells(g, {1, 2}), Region::cells(g, {2, 3}), Region::cells(g, {0, 2, 3}),
          Region::all(g)};
}

std::vector<PointConfig> measurement_fixtures() { return {{}, {0}, {2}, {0, 1}, {1, 1}, {0, 2}}; }

}  // namespace

TEST_CASE("prediction examples") {
  const Space g = grid(3, 0.5);
  Philox rng(2);
  const Field mu(g, {0.4, 1.2, 0.7});
  const MotionModel still{Kernel::identity(g), Field::constant(g, 1.0), Poisson{Field::zeros(g)}};
  CHECK(max_abs_diff(phd_predict(PhdState{mu}, still).intensity, mu) < 1e-15);

  const Field birth(g, {0.1, 0.0, 0.3});
  const MotionModel born{random_kernel(g, g, rng), random_field(g, rng, 0.1, 0.9), Poisson{birth}};
  CHECK(max_abs_diff(phd_predict(PhdState{Field::zeros(g)}, born).intensity, birth) < 1e-15);

  const Space two = grid(2, 1.0);
  const MotionModel mm{Kernel::uniform(two, two), Field::constant(two, 0.5), Poisson{Field::constant(two, 0.1)}};
  const PhdState out = phd_predict(PhdState{Field(two, {1.0, 2.0}), 3}, mm);
  // 0.1 + 0.5 * 0.5 * (1 + 2)
  CHECK(out.intensity[0] == doctest::Approx(0.85).epsilon(1e-15));
  CHECK(out.intensity[1] == doctest::Approx(0.85).epsilon(1e-15));
  CHECK(out.step == 4);
}

TEST_CASE("update examples") {
  const Space g = grid(3, 0.5);
  const Space zg = grid(2, 0.5);
  Philox rng(3);
  const Field mu(g, {0.4, 1.2, 0.7});
  SensorModel sm = random_sensor(g, zg, rng);

  SensorModel blind = sm;
  blind.detection = Field::zeros(g);
  CHECK(max_abs_diff(phd_update(PhdState{mu}, {0, 1}, blind).intensity, mu) < 1e-15);

  const PhdState missed = phd_update(PhdState{mu}, {}, sm);
  for (CellIndex c = 0; c < 3; ++c)
    CHECK(missed.intensity[c] == doctest::Approx((1.0 - sm.detection[c]) * mu[c]).epsilon(1e-15));

  const Space one = grid(1);
  const SensorModel scalar{Kernel::identity(one), Field::constant(one, 0.5), Field::constant(one, 0.3)};
  const PhdState pred{Field::constant(one, 2.0)};
  const PhdState post = phd_update(pred, {0}, scalar);
  CHECK(post.intensity[0] == doctest::Approx(1.0 + 1.0 / 1.3).epsilon(1e-14));
  CHECK(post.intensity[0] == doctest::Approx(1.76923).epsilon(1e-5));
}

TEST_CASE("variance examples") {
  const Space g = grid(3, 0.5);
  const Space zg = grid(2, 0.5);
  Philox rng(4);
  const Field mu(g, {0.4, 1.2, 0.7});
  const SensorModel sm = random_sensor(g, zg, rng);
  const Region b = Region::cells(g, {0, 2});
  const double missed = (1.0 - sm.detection[0]) * mu[0] * 0.5 + (1.0 - sm.detection[2]) * mu[2] * 0.5;
  CHECK(phd_variance_update(PhdState{mu}, {}, sm, b) == doctest::Approx(missed).epsilon(1e-14));

  const SensorModel perfect{random_kernel(zg, g, rng), Field::constant(g, 1.0), Field::zeros(zg)};
  CHECK(std::abs(phd_variance_update(PhdState{mu}, {1}, perfect, Region::all(g))) < 1e-15);

  const Space one = grid(1);
  const SensorModel scalar{Kernel::identity(one), Field::constant(one, 0.5), Field::constant(one, 0.3)};
  const double q = 1.0 / 1.3;
  const double v = phd_variance_update(PhdState{Field::constant(one, 2.0)}, {0}, scalar, Region::all(one));
  CHECK(v == doctest::Approx(1.0 + q * (1.0 - q)).epsilon(1e-14));
  CHECK(v == doctest::Approx(1.17752).epsilon(1e-5));
}

TEST_CASE("poisson variance examples") {
  const Space g = grid(4, 0.5);
  const Field mu(g, {1.0, 2.0, 2.0, 1.0});
  CHECK(poisson_variance(PhdState{mu}, Region::all(g)) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(poisson_variance(PhdState{mu}, Region::none(g)) == 0.0);
  const Field flat = Field::constant(g, 2.0);
  CHECK(poisson_variance(PhdState{flat}, Region::range(g, 0, 2)) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("impossible measurement") {
  const Space g = grid(2);
  const Space zg = grid(2);
  const SensorModel blind{Kernel::identity(g), Field::zeros(g), Field::zeros(zg)};
  CHECK_THROWS_AS(phd_update(PhdState{Field::constant(g, 1.0)}, {1}, blind), ImpossibleMeasurementError);
  CHECK_THROWS_AS(phd_variance_update(PhdState{Field::constant(g, 1.0)}, {0}, blind, Region::all(g)),
                  ImpossibleMeasurementError);
  CHECK_NOTHROW(phd_update(PhdState{Field::constant(g, 1.0)}, {}, blind));
}

TEST_CASE("update is exact under a Poisson prior") {
  const Space g = grid(4, 0.5);
  const Space zg = grid(3, 0.5);
  Philox rng(5);
  for (int trial = 0; trial < 4; ++trial) {
    const SensorModel sm = random_sensor(g, zg, rng);
    Field mu = random_field(g, rng, 0.1, 1.0);
    mu *= 1.5 / integrate(mu);
    const TruncatedMOD prior = TruncatedMOD::poisson(mu, 14);
    for (const PointConfig& z : measurement_fixtures()) {
      const TruncatedMOD post = bayes_update(prior, z, sm);
      const PhdState phd = phd_update(PhdState{mu}, z, sm);
      CHECK(max_abs_diff(mod_first_moment(post), phd.intensity) < 1e-8);
      CHECK(std::log(post.evidence()) == doctest::Approx(phd.log_evidence).epsilon(1e-9));
      for (const Region& b : region_fixtures(g))
        CHECK(std::abs(mod_variance(post, b) - phd_variance_update(PhdState{mu}, z, sm, b)) < 1e-8);
    }
  }
}

TEST_CASE("update bounds") {
  const Space g = grid(4, 0.5);
  const Space zg = grid(3, 0.5);
  Philox rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const SensorModel sm = random_sensor(g, zg, rng);
    const Field mu = random_field(g, rng, 0.0, 2.0);
    for (const PointConfig& z : measurement_fixtures()) {
      const PhdState post = phd_update(PhdState{mu}, z, sm);
      for (CellIndex c = 0; c < 4; ++c) CHECK(post.intensity[c] >= (1.0 - sm.detection[c]) * mu[c]);
      for (const Region& b : region_fixtures(g)) {
        double missed = 0.0;
        for (CellIndex c : b.members()) missed += (1.0 - sm.detection[c]) * mu[c] * g->cell_volume();
        const double measured = phd_variance_update(PhdState{mu}, z, sm, b) - missed;
        CHECK(measured >= -1e-15);
        CHECK(measured <= 0.25 * static_cast<double>(z.size()) + 1e-15);
        for (CellIndex zc : z.cells()) {
          const double q = detection_share(PhdState{mu}, zc, sm, b);
          CHECK(q >= 0.0);
          CHECK(q <= 1.0);
        }
      }
    }
  }
}

TEST_CASE("variance is not additive over disjoint regions") {
  const Space g = grid(2);
  const Space zg = grid(1);
  const SensorModel sm{Kernel::uniform(zg, g), Field::constant(g, 1.0), Field::constant(zg, 0.2)};
  const PhdState pred{Field::constant(g, 0.5)};
  const Region b1 = Region::cells(g, {0});
  const Region b2 = Region::cells(g, {1});
  const double v1 = phd_variance_update(pred, {0}, sm, b1);
  const double v2 = phd_variance_update(pred, {0}, sm, b2);
  const double v12 = phd_variance_update(pred, {0}, sm, b1 | b2);
  CHECK(b1.disjoint(b2));
  CHECK(v12 != doctest::Approx(v1 + v2));
  // each half claims q = 5/12 of the shared measurement; the union claims 5/6
  CHECK(v1 == doctest::Approx(5.0 / 12.0 * 7.0 / 12.0).epsilon(1e-14));
  CHECK(v12 == doctest::Approx(5.0 / 6.0 * 1.0 / 6.0).epsilon(1e-14));
}

TEST_CASE("poisson approximation keeps the intensity") {
  const Space g = grid(3);
  PhdState s{Field(g, {0.1, 0.2, 0.3}), 5, -1.5, false};
  const PhdState p = poisson_approximation(s);
  CHECK(max_abs_diff(p.intensity, s.intensity) == 0.0);
  CHECK(p.poisson);
  CHECK(p.step == 5);
}
