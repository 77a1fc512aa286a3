#include "risdet/fbc_secrecy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "risdet/errors.hpp"

namespace risdet {

namespace {

// Acklam's rational approximation of the standard normal quantile; relative
// error about 1.15e-9 before refinement.
double normal_quantile_guess(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

void SecrecyParams::validate() const {
  if (!(epsilon_e > 0.0 && epsilon_e < 1.0)) throw DomainError("epsilon_e must lie in (0, 1)");
  if (!(sigma_leak > 0.0 && sigma_leak < 1.0)) throw DomainError("sigma_leak must lie in (0, 1)");
  if (!(blocklength >= 1.0)) throw DomainError("blocklength must be >= 1");
}

double q_func(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double q_inv(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("q_inv: probability outside (0, 1)");
  if (p == 0.5) return 0.0;
  // Q(z) = p  <=>  Phi(-z) = p.
  double z = -normal_quantile_guess(p);
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  for (int it = 0; it < 8; ++it) {
    const double err = q_func(z) - p;
    const double density = inv_sqrt_2pi * std::exp(-0.5 * z * z);
    if (density == 0.0) break;
    // Halley step on Q(z) - p with Q' = -phi and Q'' = z * phi.
    const double newton = -err / density;
    const double step = newton / (1.0 + 0.5 * z * newton);
    z -= step;
    if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z))) break;
  }
  return z;
}

double dispersion(double gamma) {
  const double inv = 1.0 / (1.0 + gamma);
  return 1.0 - inv * inv;
}

double secrecy_capacity(double gamma_user, double gamma_eve) {
  return std::log2((1.0 + gamma_user) / (1.0 + gamma_eve));
}

double fbc_secrecy_rate(double gamma_user, double gamma_eve, const SecrecyParams& params, DispersionMode mode) {
  const double log2e = std::numbers::log2e;
  const double v_user = mode == DispersionMode::user_approx_one ? 1.0 : dispersion(gamma_user);
  const double v_eve = dispersion(gamma_eve);
  const double n = params.blocklength;
  const double rate = secrecy_capacity(gamma_user, gamma_eve) -
                      std::sqrt(v_user / n) * q_inv(params.epsilon_e) * log2e -
                      std::sqrt(v_eve / n) * q_inv(params.sigma_leak) * log2e;
  return std::max(0.0, rate);
}

}  // namespace risdet
