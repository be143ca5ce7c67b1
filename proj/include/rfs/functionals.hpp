#pragma once

#include <functional>
#include <span>

#include "rfs/gridspace.hpp"
#include "rfs/processes.hpp"

namespace rfs {

enum class FunctionalKind { PGFL, Laplace };

/// A real functional of a field, e.g. h -> G[h].
using Functional = std::function<double(const Field&)>;

/// Step sizes for nested central differences.
inline constexpr double kFirstOrderStep = 1e-3;
inline constexpr double kNestedStep = 3e-3;
inline constexpr std::size_t kMaxDirections = 3;

/// Closed-form p.g.fl. G[h] = E[prod_{x in Phi} h(x)]. Superpositions evaluate
/// as the product of their parts.
double pgfl_eval(const ProcessModel& m, const Field& h);

/// Result of summing the Janossy expansion of a p.g.fl. to a finite order.
struct TruncatedSum {
  double value = 0.0;
  /// Upper bound on the omitted terms for |h| <= 1: the cardinality mass beyond nmax.
  double tail_bound = 0.0;
};

/// Generic route: sum_{n<=nmax} 1/n! sum h(x_1)..h(x_n) f(x_1..x_n) vol^n.
TruncatedSum pgfl_janossy(const ProcessModel& m, const Field& h, std::size_t nmax);

/// L[f] = G[exp(-f)].
double laplace_eval(const ProcessModel& m, const Field& f);

Functional make_functional(const ProcessModel& m, FunctionalKind kind);

/// Nested central difference of F at `base` along `directions` (at most three).
/// Each level uses (F(b + eps d) - F(b - eps d)) / (2 eps).
/// Throws DifferencingError if any evaluation is not finite.
double fd_derivative(const Functional& F, const Field& base, std::span<const Field> directions, double eps);

/// alpha^{(n)}(B_1, ..., B_n): derivative of G at h = 1 along the indicators 1_{B_i}.
double factorial_moment(const ProcessModel& m, std::span<const Region> regions);

/// mu^{(n)}(B_1, ..., B_n): (-1)^n times the derivative of L at f = 0 along 1_{B_i}.
double moment_via_laplace(const ProcessModel& m, std::span<const Region> regions);

/// var(B) = mu^{(2)}(B, B) - mu^{(1)}(B)^2 from Laplace-functional differencing.
double variance_via_laplace(const ProcessModel& m, const Region& region);

}  // namespace rfs
