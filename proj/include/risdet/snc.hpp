#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "risdet/fbc_secrecy.hpp"
#include "risdet/geometry_channel.hpp"
#include "risdet/quadrature.hpp"

namespace risdet {

// Stochastic-network-calculus delay analysis.
//
// Units: a slot's service increment is the secrecy rate R in bits per
// channel use, so the service transforms below are E[exp(-s R)]. Arrivals in
// bits are therefore divided by the blocklength before they are combined
// with the service (see `per_channel_use`). The infimum over s is invariant
// under this rescaling, so the bounds are the same as for bits per slot.

enum class ArrivalVariant { paper_literal, standard_compound };

struct ArrivalModel {
  double lambda_pkts = 0.2;  // mean packets per slot
  double pkt_bits = 256.0;   // packet size in the unit of the service
  ArrivalVariant variant = ArrivalVariant::standard_compound;

  void validate() const;
};

/// Same arrival stream with packet size expressed in channel uses of a
/// `blocklength`-long code.
ArrivalModel per_channel_use(const ArrivalModel& bits, double blocklength);

/// Mellin transform of the exponentiated per-slot arrival.
///   paper_literal:     exp(x * lambda * (e^{s-1} - 1))
///   standard_compound: exp(lambda * (e^{(s-1) x} - 1))
/// Throws NumericalError when the result overflows a double.
double arrival_mellin(double s, const ArrivalModel& model);

/// Natural log of arrival_mellin; +inf instead of throwing.
double log_arrival_mellin(double s, const ArrivalModel& model);

/// Which user-SNR law the service transforms integrate against.
///   paper:  the high-SNR density (sub-normalised) over the wedge
///           gamma_user > gamma_eve only, exactly as in the closed form.
///   rician: the non-central law the density approximates (Bessel factor
///           kept), plus the probability mass of gamma_user <= gamma_eve
///           where the clamped rate is zero. This is a proper transform
///           (equal to one at s = 0), so the resulting bound is a true
///           upper bound on the delay-violation probability.
enum class ServiceDensity { paper, rician };

enum class InnerMethod { closed_form, quadrature };

struct ServiceModel {
  LinkStats stats;
  SecrecyParams secrecy;
  QuadratureSpec quadrature;
  ServiceDensity density = ServiceDensity::paper;

  void validate() const;
};

struct MellinValue {
  double value = 0.0;
  double abs_error = 0.0;
};

/// The double integral H(s): outer over gamma_eve against the exponential
/// Eve law, inner over gamma_user >= gamma_eve, exponents +-s/ln2, user
/// dispersion approximated by one. `inner` selects the incomplete-gamma
/// closed form of the inner integral (paper density only) or nested
/// adaptive quadrature.
MellinValue service_mellin_u(double s, const ServiceModel& model, InnerMethod inner = InnerMethod::closed_form);

/// Mellin transform of u(gamma_user, gamma_eve) at a general argument p,
/// E[u^{p-1}] restricted as described for ServiceDensity. Always nested
/// quadrature.
MellinValue mellin_u(double p, const ServiceModel& model);

/// Service-process transform (1 - eps) * M_u(1 + (s_arg - 1)/ln2) + eps.
MellinValue service_mellin(double s_arg, const ServiceModel& model);

/// [M_service]^horizon / (1 - M_arrival * M_service) from transform values.
/// Throws StabilityError when M_arrival * M_service >= 1.
double kernel_from_transforms(double m_arrival, double m_service, double horizon);

/// Steady-state kernel composed from arrival_mellin(1+s) and
/// service_mellin(1-s); the arrival is converted per channel use here.
double kernel(double s, double horizon, const ArrivalModel& arrival, const ServiceModel& service);

/// The same kernel written directly in terms of H(s):
/// [(1-eps)H + eps]^T / (1 - M_arrival(1+s) [(1-eps)H + eps]).
double closed_form_kernel(double s, double horizon, const ArrivalModel& arrival, const ServiceModel& service);

struct SearchSpec {
  std::size_t grid_points = 200;
  double s_floor = 1e-4;
  double s_cap = 1e3;
  double bisection_width = 1e-8;
  double golden_rel_tol = 1e-6;
  std::size_t golden_max_iter = 60;
  InnerMethod inner = InnerMethod::closed_form;
};

struct ViolationBound {
  double bound = 1.0;
  double s_star = 0.0;
  bool clamped = false;
  double h_abs_error = 0.0;
};

struct StabilityInterval {
  double s_max = 0.0;  // upper end of the stable s range; 0 when empty
  bool empty = true;
};

/// Bisection for the largest s with M_arrival(1+s) * M_service(1-s) < 1.
StabilityInterval stability_interval(const ArrivalModel& arrival, const ServiceModel& service,
                                     const SearchSpec& search);

/// min(1, inf_s kernel(s, horizon)) over the stability interval for each
/// horizon. The grid and transform evaluations are shared across horizons.
std::vector<ViolationBound> violation_bounds(std::span<const std::uint32_t> horizons, const ArrivalModel& arrival,
                                             const ServiceModel& service, const SearchSpec& search,
                                             StabilityInterval* interval = nullptr);

ViolationBound violation_bound(std::uint32_t horizon, const ArrivalModel& arrival, const ServiceModel& service,
                               const SearchSpec& search);

struct DelayWindow {
  std::uint32_t t_min = 2;
  std::uint32_t t_max = 8;

  void validate() const;
};

struct DeterminacyResult {
  double varpi = 0.0;
  double bound_tmin = 1.0;
  double bound_tmax = 1.0;
  double s_star_tmin = 0.0;
  double s_star_tmax = 0.0;
  double s_max = 0.0;
  bool ordering_ok = true;
  bool clamped_tmin = false;
  bool clamped_tmax = false;
  bool vacuous = false;  // empty stability interval
  double quadrature_error_estimate = 0.0;

  /// "tmin|tmax|vacuous" style flag list, "-" when none.
  std::string clamped_flags() const;
};

DeterminacyResult delay_determinacy(const DelayWindow& window, const ArrivalModel& arrival,
                                    const ServiceModel& service, const SearchSpec& search);

}  // namespace risdet
