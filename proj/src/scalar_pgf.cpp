#include "rfs/scalar_pgf.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>

#include "rfs/errors.hpp"

namespace rfs {
namespace {

double falling(double k, std::size_t r) {
  double out = 1.0;
  for (std::size_t j = 0; j < r; ++j) out *= k - static_cast<double>(j);
  return out;
}

}  // namespace

PowerSeries::PowerSeries(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  if (coeffs_.empty()) coeffs_.push_back(0.0);
}

PowerSeries PowerSeries::constant(double c, std::size_t order) {
  std::vector<double> v(order + 1, 0.0);
  v[0] = c;
  return PowerSeries(std::move(v));
}

PowerSeries PowerSeries::identity(std::size_t order) {
  std::vector<double> v(order + 1, 0.0);
  if (order >= 1) v[1] = 1.0;
  return PowerSeries(std::move(v));
}

PowerSeries PowerSeries::poisson(double mean, std::size_t order) {
  std::vector<double> v(order + 1, 0.0);
  double term = std::exp(-mean);
  for (std::size_t k = 0; k <= order; ++k) {
    v[k] = term;
    term *= mean / static_cast<double>(k + 1);
  }
  return PowerSeries(std::move(v));
}

PowerSeries PowerSeries::bernoulli(double p, std::size_t order) {
  std::vector<double> v(std::max<std::size_t>(order, 1) + 1, 0.0);
  v[0] = 1.0 - p;
  v[1] = p;
  return PowerSeries(std::move(v));
}

PowerSeries PowerSeries::resized(std::size_t order) const {
  std::vector<double> v(order + 1, 0.0);
  std::copy_n(coeffs_.begin(), std::min(coeffs_.size(), v.size()), v.begin());
  return PowerSeries(std::move(v));
}

double PowerSeries::tail_mass() const {
  double sum = 0.0;
  for (double c : coeffs_) sum += c;
  return 1.0 - sum;
}

bool PowerSeries::is_pmf(double slack) const {
  return std::all_of(coeffs_.begin(), coeffs_.end(), [](double c) { return c >= 0.0; }) && tail_mass() >= -slack;
}

PowerSeries PowerSeries::derivative(std::size_t r) const {
  if (r > order()) return PowerSeries::constant(0.0, 0);
  std::vector<double> v(coeffs_.size() - r);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = coeffs_[k + r] * falling(static_cast<double>(k + r), r);
  return PowerSeries(std::move(v));
}

double pgf_eval(const PowerSeries& g, double s) {
  const auto& c = g.coeffs();
  double acc = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) acc = acc * s + c[k];
  return acc;
}

double factorial_moment_scalar(const PowerSeries& g, std::size_t r) {
  if (r > g.order()) throw SizeLimitError("factorial moment order exceeds series truncation");
  if (g.tail_mass() > 1e-9)
    std::cerr << "warning: factorial moment of a series with tail mass " << g.tail_mass() << '\n';
  return pgf_eval(g.derivative(r), 1.0);
}

double pmf_from_derivative(const PowerSeries& g, std::size_t k) {
  double fact = 1.0;
  for (std::size_t j = 2; j <= k; ++j) fact *= static_cast<double>(j);
  return pgf_eval(g.derivative(k), 0.0) / fact;
}

PowerSeries pgf_product(const PowerSeries& f, const PowerSeries& g) {
  const std::size_t order = std::min(f.order(), g.order());
  std::vector<double> v(order + 1, 0.0);
  for (std::size_t i = 0; i <= order; ++i)
    for (std::size_t j = 0; i + j <= order; ++j) v[i + j] += f[i] * g[j];
  return PowerSeries(std::move(v));
}

PowerSeries pgf_compose(const PowerSeries& f, const PowerSeries& g) {
  const std::size_t order = f.order();
  const PowerSeries inner = g.resized(order);
  PowerSeries acc = PowerSeries::constant(f[order], order);
  for (std::size_t k = order; k-- > 0;) {
    std::vector<double> v = pgf_product(acc, inner).coeffs();
    v[0] += f[k];
    acc = PowerSeries(std::move(v));
  }
  return acc;
}

PowerSeries series_exp(const PowerSeries& a) {
  // B = exp(A) satisfies B' = A' B, i.e. n b_n = sum_{k=1}^n k a_k b_{n-k}.
  const std::size_t order = a.order();
  std::vector<double> b(order + 1, 0.0);
  b[0] = std::exp(a[0]);
  for (std::size_t n = 1; n <= order; ++n) {
    double acc = 0.0;
    for (std::size_t k = 1; k <= n; ++k) acc += static_cast<double>(k) * a[k] * b[n - k];
    b[n] = acc / static_cast<double>(n);
  }
  return PowerSeries(std::move(b));
}

// ---- bivariate ----

BivariateSeries::BivariateSeries(std::size_t t_order, std::size_t s_order)
    : coeffs_(t_order + 1, std::vector<double>(s_order + 1, 0.0)) {}

BivariateSeries::BivariateSeries(std::vector<std::vector<double>> coeffs) : coeffs_(std::move(coeffs)) {
  if (coeffs_.empty() || coeffs_.front().empty()) throw SizeLimitError("empty bivariate series");
  for (const auto& row : coeffs_)
    if (row.size() != coeffs_.front().size()) throw SizeLimitError("ragged bivariate series");
}

double BivariateSeries::partial(std::size_t m, std::size_t n, double t, double s) const {
  double total = 0.0;
  for (std::size_t i = m; i <= t_order(); ++i) {
    const double t_part = falling(static_cast<double>(i), m) * std::pow(t, static_cast<double>(i - m));
    if (t_part == 0.0) continue;
    for (std::size_t j = n; j <= s_order(); ++j)
      total += coeffs_[i][j] * t_part * falling(static_cast<double>(j), n) * std::pow(s, static_cast<double>(j - n));
  }
  return total;
}

BivariateSeries detection_joint_series(const PowerSeries& targets, double p_detect, const PowerSeries& clutter,
                                       std::size_t order) {
  // Inner part: sum_n p(n) s^n (1 - pd + pd t)^n.
  BivariateSeries inner(order, order);
  std::vector<double> binom_row{1.0};  // coefficients of (1 - pd + pd t)^n in t
  for (std::size_t n = 0; n <= order; ++n) {
    if (n > 0) {
      std::vector<double> next(binom_row.size() + 1, 0.0);
      for (std::size_t i = 0; i < binom_row.size(); ++i) {
        next[i] += binom_row[i] * (1.0 - p_detect);
        next[i + 1] += binom_row[i] * p_detect;
      }
      binom_row = std::move(next);
    }
    for (std::size_t i = 0; i < binom_row.size() && i <= order; ++i) inner(i, n) += targets[n] * binom_row[i];
  }
  BivariateSeries joint(order, order);
  for (std::size_t a = 0; a <= order; ++a)
    for (std::size_t i = 0; a + i <= order; ++i)
      for (std::size_t n = 0; n <= order; ++n) joint(a + i, n) += clutter[a] * inner(i, n);
  return joint;
}

namespace {

double marginal_derivative(const BivariateSeries& joint, std::size_t m) {
  if (m > joint.t_order()) throw SizeLimitError("conditioning count beyond series truncation");
  const double denom = joint.partial(m, 0, 0.0, 1.0);
  if (!(denom > 0.0))
    throw NullConditioningError("conditioning on Z = " + std::to_string(m) + ", an event of probability zero");
  return denom;
}

}  // namespace

double conditional_factorial_moment(const BivariateSeries& joint, std::size_t m, std::size_t n) {
  const double denom = marginal_derivative(joint, m);
  return joint.partial(m, n, 0.0, 1.0) / denom;
}

double conditional_pmf(const BivariateSeries& joint, std::size_t n, std::size_t m) {
  const double denom = marginal_derivative(joint, m);
  double n_fact = 1.0;
  for (std::size_t j = 2; j <= n; ++j) n_fact *= static_cast<double>(j);
  return joint.partial(m, n, 0.0, 0.0) / n_fact / denom;
}

}  // namespace rfs
