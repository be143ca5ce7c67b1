#pragma once

#include <cstddef>
#include <vector>

namespace rfs {

inline constexpr std::size_t kDefaultSeriesOrder = 64;

/// Truncated power series sum_k coeffs[k] s^k, k = 0..order().
/// Used for probability generating functions of counting variables.
class PowerSeries {
 public:
  PowerSeries() : coeffs_(1, 0.0) {}
  explicit PowerSeries(std::vector<double> coeffs);

  static PowerSeries constant(double c, std::size_t order = kDefaultSeriesOrder);
  /// G(s) = s.
  static PowerSeries identity(std::size_t order = kDefaultSeriesOrder);
  static PowerSeries poisson(double mean, std::size_t order = kDefaultSeriesOrder);
  static PowerSeries bernoulli(double p, std::size_t order = kDefaultSeriesOrder);

  std::size_t order() const { return coeffs_.size() - 1; }
  const std::vector<double>& coeffs() const { return coeffs_; }
  double operator[](std::size_t k) const { return k < coeffs_.size() ? coeffs_[k] : 0.0; }

  /// Same series truncated or zero-padded to `order`.
  PowerSeries resized(std::size_t order) const;
  /// 1 - sum of coefficients; the probability mass lost to truncation for a pmf series.
  double tail_mass() const;
  bool is_pmf(double slack = 1e-9) const;

  /// r-th formal derivative.
  PowerSeries derivative(std::size_t r = 1) const;

 private:
  std::vector<double> coeffs_;
};

/// Horner evaluation.
double pgf_eval(const PowerSeries& g, double s);

/// E[X (X-1) ... (X-r+1)] = G^{(r)}(1). Warns on stderr when the series tail
/// mass exceeds 1e-9.
double factorial_moment_scalar(const PowerSeries& g, std::size_t r);

/// k-th coefficient recovered as G^{(k)}(0) / k!.
double pmf_from_derivative(const PowerSeries& g, std::size_t k);

/// Cauchy product truncated at the smaller order of the factors.
PowerSeries pgf_product(const PowerSeries& f, const PowerSeries& g);

/// F(G(s)) truncated at the order of F. Horner-style, O(order^3).
PowerSeries pgf_compose(const PowerSeries& f, const PowerSeries& g);

/// exp(A(s)) truncated at the order of A.
PowerSeries series_exp(const PowerSeries& a);

/// Joint series sum p(m, n) t^m s^n; row index is the power of t.
class BivariateSeries {
 public:
  BivariateSeries(std::size_t t_order, std::size_t s_order);
  explicit BivariateSeries(std::vector<std::vector<double>> coeffs);

  std::size_t t_order() const { return coeffs_.size() - 1; }
  std::size_t s_order() const { return coeffs_.front().size() - 1; }
  double operator()(std::size_t m, std::size_t n) const { return coeffs_[m][n]; }
  double& operator()(std::size_t m, std::size_t n) { return coeffs_[m][n]; }

  /// Formal partial derivative d^{m+n} / dt^m ds^n evaluated at (t, s).
  double partial(std::size_t m, std::size_t n, double t, double s) const;

 private:
  std::vector<std::vector<double>> coeffs_;
};

/// Joint generating function of (measurement count Z, target count X) for
/// targets with count pgf `targets`, each detected independently with
/// probability `p_detect`, plus independent clutter with count pgf `clutter`:
/// G(t, s) = G_clutter(t) G_targets(s (1 - p_detect + p_detect t)).
BivariateSeries detection_joint_series(const PowerSeries& targets, double p_detect, const PowerSeries& clutter,
                                       std::size_t order);

/// n-th factorial moment of X given Z = m. Throws NullConditioningError when P(Z = m) = 0.
double conditional_factorial_moment(const BivariateSeries& joint, std::size_t m, std::size_t n);

/// P(X = n | Z = m). Throws NullConditioningError when P(Z = m) = 0.
double conditional_pmf(const BivariateSeries& joint, std::size_t n, std::size_t m);

}  // namespace rfs
