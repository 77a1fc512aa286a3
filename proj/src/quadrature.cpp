#include "risdet/quadrature.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>

#include <string>

#include "risdet/errors.hpp"

namespace risdet {

namespace {

struct WorkspaceDeleter {
  void operator()(gsl_integration_workspace* w) const { gsl_integration_workspace_free(w); }
};

double trampoline(double x, void* params) { return (*static_cast<const std::function<double(double)>*>(params))(x); }

// GSL aborts on errors by default; switch that off once per process.
struct DisableGslAbort {
  DisableGslAbort() { gsl_set_error_handler_off(); }
};
const DisableGslAbort kDisableGslAbort;

}  // namespace

void QuadratureSpec::validate() const {
  if (!(rel_tol > 0.0) || abs_tol < 0.0) throw DomainError("quadrature tolerances must be positive");
  if (!(outer_truncation_mult >= 20.0) || !(inner_truncation_mult >= 20.0))
    throw DomainError("quadrature truncation multipliers must be >= 20");
  if (max_subdivisions < 1) throw DomainError("max_subdivisions must be >= 1");
  if (fixed_nodes != 0 && fixed_nodes < 8) throw DomainError("fixed_nodes must be 0 or >= 8");
}

QuadResult integrate(const std::function<double(double)>& f, double a, double b, double rel_tol, double abs_tol,
                     std::size_t max_subdivisions) {
  if (!(b > a)) return {};
  std::unique_ptr<gsl_integration_workspace, WorkspaceDeleter> ws(gsl_integration_workspace_alloc(max_subdivisions));
  gsl_function fn;
  fn.function = &trampoline;
  fn.params = const_cast<std::function<double(double)>*>(&f);
  QuadResult r;
  const int status = gsl_integration_qag(&fn, a, b, abs_tol, rel_tol, max_subdivisions, GSL_INTEG_GAUSS21, ws.get(),
                                         &r.value, &r.abs_error);
  if (status != GSL_SUCCESS) {
    // Round-off limited results are still usable when the estimate is tiny.
    if (status == GSL_EROUND && r.abs_error <= std::max(abs_tol, 10.0 * rel_tol * std::abs(r.value))) return r;
    throw NumericalError(std::string("quadrature did not converge: ") + gsl_strerror(status));
  }
  return r;
}

}  // namespace risdet
