#pragma once

#include <cstddef>
#include <functional>
#include <memory>

namespace risdet {

struct QuadratureSpec {
  double rel_tol = 1e-8;
  double abs_tol = 0.0;
  double outer_truncation_mult = 40.0;
  double inner_truncation_mult = 40.0;
  std::size_t max_subdivisions = 200;
  // When nonzero, the service transforms use a fixed Gauss-Legendre product
  // rule with this many nodes per axis instead of adaptive integration.
  // The tolerances above are then ignored; the error estimate is the
  // difference to a rule with half as many nodes.
  std::size_t fixed_nodes = 0;

  void validate() const;
};

struct QuadResult {
  double value = 0.0;
  double abs_error = 0.0;
};

/// Adaptive Gauss-Kronrod integration of f over [a, b]. Reentrant: every
/// call owns its workspace. Throws NumericalError when the tolerance cannot
/// be met within `max_subdivisions`.
QuadResult integrate(const std::function<double(double)>& f, double a, double b, double rel_tol, double abs_tol,
                     std::size_t max_subdivisions);

}  // namespace risdet
