#include "risdet/snc.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>
#include <gsl/gsl_sf_bessel.h>
#include <gsl/gsl_sf_gamma.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <numbers>
#include <string>

#include "risdet/errors.hpp"

namespace risdet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLn2 = std::numbers::ln2;

// Everything the H integrand needs, with b = rho*delta^2 and c = rho*upsilon.
struct Integrand {
  double a = 0.0;  // exponent s/ln2 (or 1 - p)
  double b = 0.0;
  double c = 0.0;
  double lam = 0.0;
  double n = 1.0;
  double q_eps = 0.0;
  double q_sigma = 0.0;
  ServiceDensity density = ServiceDensity::paper;

  Integrand(double exponent, const ServiceModel& m)
      : a(exponent),
        b(m.stats.rho * m.stats.delta_k_sq),
        c(m.stats.rho * m.stats.upsilon_k),
        lam(m.stats.lambda_eve),
        n(m.secrecy.blocklength),
        q_eps(q_inv(m.secrecy.epsilon_e)),
        q_sigma(q_inv(m.secrecy.sigma_leak)),
        density(m.density) {}

  double log_pen_user() const { return a * q_eps / std::sqrt(n); }
  double log_pen_eve(double g_eve) const { return a * std::sqrt(dispersion(g_eve) / n) * q_sigma; }

  double user_density(double g) const {
    if (g < 0.0) return 0.0;
    if (density == ServiceDensity::paper) return std::exp(-(g + c) / b) / b;
    const double d = std::sqrt(g) - std::sqrt(c);
    const double z = 2.0 * std::sqrt(g * c) / b;
    return std::exp(-d * d / b) * gsl_sf_bessel_I0_scaled(z) / b;
  }

  // Upper limit of the inner integral.
  double inner_upper(double g_eve, double mult) const {
    if (density == ServiceDensity::paper) return g_eve + mult * b;
    const double r = std::sqrt(c) + std::sqrt(mult * b);
    return g_eve + r * r;
  }

  // Bound on the user-law mass beyond `u`.
  double inner_tail(double u) const {
    if (density == ServiceDensity::paper) return std::exp(-(u + c) / b);
    // Chernoff bound with t = (1 - eta)/b; eta = sqrt(c/u) is the optimum.
    const double eta = std::max(std::sqrt(c / u), 1e-3);
    if (eta >= 1.0) return 1.0;
    return std::exp((1.0 - eta) * (c / eta - u) / b) / eta;
  }

  // Largest value of the combined penalty factor over gamma_eve >= 0.
  double log_pen_max() const { return log_pen_user() + std::max(0.0, a) * q_sigma / std::sqrt(n); }

  // Pr{gamma_user <= gamma_eve} under the Rician law and Exp(lam) Eve SNR:
  // E[exp(-lam * gamma_user)] for the non-central law.
  double complement_mass() const {
    const double t = lam * b;
    return std::exp(-lam * c / (1.0 + t)) / (1.0 + t);
  }
};

// log Gamma(c, x) for x > 0, any real c.
double log_upper_gamma(double cc, double x) {
  if (x > 60.0 + 2.0 * std::abs(cc)) {
    // Asymptotic series x^{c-1} e^{-x} sum_k (c-1)...(c-k) / x^k.
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 40; ++k) {
      const double next = term * (cc - k) / x;
      if (std::abs(next) > std::abs(term)) break;
      term = next;
      sum += term;
      if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return (cc - 1.0) * std::log(x) - x + std::log(sum);
  }
  gsl_sf_result r;
  const int status = gsl_sf_gamma_inc_e(cc, x, &r);
  if (status != GSL_SUCCESS || !(r.val > 0.0) || !std::isfinite(r.val)) return std::numeric_limits<double>::quiet_NaN();
  return std::log(r.val);
}

// Inner integral (1+g_eve)^a * int_{g_eve}^inf (1+g)^-a f(g) dg for the `paper`
// density through the upper incomplete gamma function. NaN when the closed
// form is not representable.
double inner_closed_form(const Integrand& in, double g_eve) {
  const double x = (1.0 + g_eve) / in.b;
  const double lg = log_upper_gamma(1.0 - in.a, x);
  if (std::isnan(lg)) return lg;
  const double log_val = in.a * std::log1p(g_eve) - in.c / in.b + 1.0 / in.b - in.a * std::log(in.b) + lg;
  return std::exp(log_val);
}

MellinValue inner_quadrature(const Integrand& in, double g_eve, const QuadratureSpec& q) {
  const double upper = in.inner_upper(g_eve, q.inner_truncation_mult);
  const double log_top = std::log1p(g_eve);
  auto f = [&](double g) { return std::exp(in.a * (log_top - std::log1p(g))) * in.user_density(g); };
  const QuadResult r = integrate(f, g_eve, upper, q.rel_tol, q.rel_tol * 1e-12, q.max_subdivisions);
  // (1+g_eve)/(1+g) <= 1 on the tail when a >= 0.
  const double tail = in.a >= 0.0 ? in.inner_tail(upper) : 0.0;
  return {r.value, r.abs_error + tail};
}

// Outer integral over gamma_eve; the wedge part of H.
MellinValue wedge_integral(const Integrand& in, const QuadratureSpec& q, bool closed_form_inner) {
  const double upper = q.outer_truncation_mult / in.lam;
  const double log_pen_user = in.log_pen_user();
  double inner_err_max = 0.0;
  auto outer = [&](double g_eve) {
    double inner = kInf;
    if (closed_form_inner) inner = inner_closed_form(in, g_eve);
    if (!closed_form_inner || !std::isfinite(inner)) {
      const MellinValue iv = inner_quadrature(in, g_eve, q);
      inner = iv.value;
      inner_err_max = std::max(inner_err_max, iv.abs_error);
    }
    if (inner == 0.0) return 0.0;
    return in.lam * std::exp(-in.lam * g_eve + log_pen_user + in.log_pen_eve(g_eve)) * inner;
  };
  const QuadResult r = integrate(outer, 0.0, upper, q.rel_tol, q.abs_tol, q.max_subdivisions);

  // Tail of the outer integral: ((1+g_e)/(1+g))^a <= 1 and the remaining
  // user mass is at most m*exp(-g_e/b) (paper) or 1 (rician).
  const double pen_max = std::exp(in.log_pen_max());
  double outer_tail = 0.0;
  if (in.density == ServiceDensity::paper) {
    const double rate = in.lam + 1.0 / in.b;
    outer_tail = in.lam * pen_max * std::exp(-in.c / in.b - rate * upper) / rate;
  } else {
    outer_tail = pen_max * std::exp(-in.lam * upper);
  }
  // The Eve weight integrates to at most one, so inner errors add at most
  // pen_max times their largest value.
  const double err = r.abs_error + outer_tail + pen_max * inner_err_max;
  return {r.value, err};
}

// Fixed Gauss-Legendre product rule for the wedge integral, tabulated so
// that wedge(a) = sum_j w_j exp(a l_j). The weights carry the Eve law, the
// user density and the Jacobians; l_j is the log of the penalised SNR ratio.
// Outer variable u = 1 - exp(-lam g_eve) on [0, 1]; the Rician inner
// variable is the amplitude sqrt(g_user).
class ProductRule {
 public:
  ProductRule(const Integrand& in, const QuadratureSpec& q, std::size_t m) {
    struct TableDeleter {
      void operator()(gsl_integration_glfixed_table* t) const { gsl_integration_glfixed_table_free(t); }
    };
    std::unique_ptr<gsl_integration_glfixed_table, TableDeleter> table(gsl_integration_glfixed_table_alloc(m));
    if (!table) throw NumericalError("product rule: cannot allocate Gauss-Legendre table");
    std::vector<double> x(m), w(m);
    for (std::size_t i = 0; i < m; ++i) gsl_integration_glfixed_point(0.0, 1.0, i, &x[i], &w[i], table.get());

    const double pen_user = in.q_eps / std::sqrt(in.n);
    const double sc = std::sqrt(in.c);
    const double reach = std::sqrt(q.inner_truncation_mult * in.b);
    w_.reserve(m * m);
    l_.reserve(m * m);
    for (std::size_t i = 0; i < m; ++i) {
      const double g_eve = -std::log1p(-x[i]) / in.lam;
      const double base = std::log1p(g_eve) + pen_user + std::sqrt(dispersion(g_eve) / in.n) * in.q_sigma;
      if (in.density == ServiceDensity::paper) {
        // g_user = g_eve - b log(1 - v): the exponential density becomes
        // the constant exp(-(g_eve + c)/b) in v.
        const double mass = std::exp(-(g_eve + in.c) / in.b);
        if (!(mass > 0.0)) continue;
        for (std::size_t j = 0; j < m; ++j) {
          const double g_user = g_eve - in.b * std::log1p(-x[j]);
          w_.push_back(w[i] * w[j] * mass);
          l_.push_back(base - std::log1p(g_user));
        }
        continue;
      }
      const double lo = std::max(std::sqrt(g_eve), sc - reach);
      const double hi = sc + reach;
      if (!(hi > lo)) continue;
      for (std::size_t j = 0; j < m; ++j) {
        const double r = lo + (hi - lo) * x[j];
        const double weight = w[i] * w[j] * (hi - lo) * 2.0 * r * in.user_density(r * r);
        if (!(weight > 0.0)) continue;
        w_.push_back(weight);
        l_.push_back(base - std::log1p(r * r));
      }
    }
  }

  double wedge(double a) const {
    double sum = 0.0;
    for (std::size_t j = 0; j < w_.size(); ++j) sum += w_[j] * std::exp(a * l_[j]);
    return sum;
  }

 private:
  std::vector<double> w_;
  std::vector<double> l_;
};

// Companion rule whose disagreement serves as the error estimate.
std::size_t coarse_nodes(const QuadratureSpec& q) { return std::max<std::size_t>(8, q.fixed_nodes / 2); }

MellinValue transform(const Integrand& in, const QuadratureSpec& q, bool closed_form_inner) {
  MellinValue v;
  if (q.fixed_nodes > 0) {
    v.value = ProductRule(in, q, q.fixed_nodes).wedge(in.a);
    v.abs_error = std::abs(v.value - ProductRule(in, q, coarse_nodes(q)).wedge(in.a));
  } else
    v = wedge_integral(in, q, closed_form_inner);
  if (in.density == ServiceDensity::rician) v.value += in.complement_mass();
  return v;
}

double log_service_term(double h, double eps) { return std::log((1.0 - eps) * h + eps); }

}  // namespace

void ArrivalModel::validate() const {
  if (!(lambda_pkts > 0.0) || !std::isfinite(lambda_pkts)) throw DomainError("arrival rate must be positive");
  if (!(pkt_bits > 0.0) || !std::isfinite(pkt_bits)) throw DomainError("packet size must be positive");
}

ArrivalModel per_channel_use(const ArrivalModel& bits, double blocklength) {
  if (!(blocklength > 0.0)) throw DomainError("per_channel_use: blocklength must be positive");
  ArrivalModel out = bits;
  out.pkt_bits = bits.pkt_bits / blocklength;
  return out;
}

double log_arrival_mellin(double s, const ArrivalModel& model) {
  const double x = model.pkt_bits;
  const double lam = model.lambda_pkts;
  if (model.variant == ArrivalVariant::paper_literal) return x * lam * std::expm1(s - 1.0);
  const double e = (s - 1.0) * x;
  if (e > 700.0) return kInf;
  return lam * std::expm1(e);
}

double arrival_mellin(double s, const ArrivalModel& model) {
  const double lm = log_arrival_mellin(s, model);
  if (!(lm < 709.0)) throw NumericalError("arrival_mellin overflow at s = " + std::to_string(s));
  return std::exp(lm);
}

void ServiceModel::validate() const {
  stats.validate();
  secrecy.validate();
  quadrature.validate();
}

MellinValue service_mellin_u(double s, const ServiceModel& model, InnerMethod inner) {
  const Integrand in(s / kLn2, model);
  const bool closed = inner == InnerMethod::closed_form && model.density == ServiceDensity::paper;
  return transform(in, model.quadrature, closed);
}

MellinValue mellin_u(double p, const ServiceModel& model) {
  // E[u^{p-1}]: the Eve factor carries exponent 1-p, the user factor p-1.
  const Integrand in(1.0 - p, model);
  return transform(in, model.quadrature, false);
}

MellinValue service_mellin(double s_arg, const ServiceModel& model) {
  const double eps = model.secrecy.epsilon_e;
  if (eps >= 1.0) return {1.0, 0.0};
  const MellinValue mu = mellin_u(1.0 + (s_arg - 1.0) / kLn2, model);
  return {(1.0 - eps) * mu.value + eps, (1.0 - eps) * mu.abs_error};
}

double kernel_from_transforms(double m_arrival, double m_service, double horizon) {
  const double product = m_arrival * m_service;
  if (!(product < 1.0)) throw StabilityError("kernel: stability condition violated", product);
  return std::pow(m_service, horizon) / (1.0 - product);
}

double kernel(double s, double horizon, const ArrivalModel& arrival, const ServiceModel& service) {
  const ArrivalModel a = per_channel_use(arrival, service.secrecy.blocklength);
  const double m_a = std::exp(std::min(log_arrival_mellin(1.0 + s, a), 709.0));
  return kernel_from_transforms(m_a, service_mellin(1.0 - s, service).value, horizon);
}

double closed_form_kernel(double s, double horizon, const ArrivalModel& arrival, const ServiceModel& service) {
  const double eps = service.secrecy.epsilon_e;
  const double h = service_mellin_u(s, service, InnerMethod::closed_form).value;
  const double bracket = (1.0 - eps) * h + eps;
  const double x = arrival.pkt_bits / service.secrecy.blocklength;
  const double lam = arrival.lambda_pkts;
  const double arr = arrival.variant == ArrivalVariant::paper_literal ? std::exp(x * lam * (std::exp(s) - 1.0))
                                                                      : std::exp(lam * (std::exp(s * x) - 1.0));
  const double product = arr * bracket;
  if (!(product < 1.0)) throw StabilityError("closed_form_kernel: stability condition violated", product);
  return std::pow(bracket, horizon) / (1.0 - product);
}

namespace {

// Memoises H(s) within one bound computation.
class TransformCache {
 public:
  TransformCache(const ArrivalModel& arrival, const ServiceModel& service, InnerMethod inner)
      : arrival_(per_channel_use(arrival, service.secrecy.blocklength)), service_(service), inner_(inner) {
    if (service.quadrature.fixed_nodes > 0) {
      const Integrand in(0.0, service);
      rule_.emplace(in, service.quadrature, service.quadrature.fixed_nodes);
      coarse_.emplace(in, service.quadrature, coarse_nodes(service.quadrature));
      if (service.density == ServiceDensity::rician) complement_ = in.complement_mass();
    }
  }

  const MellinValue& h(double s) {
    auto it = cache_.find(s);
    if (it != cache_.end()) return it->second;
    MellinValue v;
    if (rule_) {
      const double a = s / kLn2;
      const double fine = rule_->wedge(a);
      v = {fine + complement_, std::abs(fine - coarse_->wedge(a))};
    } else {
      v = service_mellin_u(s, service_, inner_);
    }
    return cache_.emplace(s, v).first->second;
  }

  double log_service(double s) { return log_service_term(h(s).value, service_.secrecy.epsilon_e); }

  // log of M_arrival(1+s) * M_service(1-s).
  double log_product(double s) { return log_arrival_mellin(1.0 + s, arrival_) + log_service(s); }

  // Kernel in log form; +inf outside the stability region.
  double log_kernel(double s, double horizon) {
    const double lp = log_product(s);
    if (!(lp < 0.0)) return kInf;
    return horizon * log_service(s) - std::log(-std::expm1(lp));
  }

 private:
  ArrivalModel arrival_;
  const ServiceModel& service_;
  InnerMethod inner_;
  std::optional<ProductRule> rule_;
  std::optional<ProductRule> coarse_;
  double complement_ = 0.0;
  std::map<double, MellinValue> cache_;
};

StabilityInterval find_interval(TransformCache& tc, const SearchSpec& search) {
  StabilityInterval iv;
  double lo = search.s_floor;
  if (!(tc.log_product(lo) < 0.0)) return iv;
  double hi = 2.0 * lo;
  while (tc.log_product(hi) < 0.0) {
    lo = hi;
    if (hi >= search.s_cap) {
      iv.s_max = search.s_cap;
      iv.empty = false;
      return iv;
    }
    hi = std::min(2.0 * hi, search.s_cap);
  }
  while (hi - lo > search.bisection_width) {
    const double mid = 0.5 * (lo + hi);
    if (tc.log_product(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  iv.s_max = lo;
  iv.empty = false;
  return iv;
}

// Golden-section search for the minimum of log_kernel over [lo, hi] in log s.
std::pair<double, double> golden(TransformCache& tc, double horizon, double lo, double hi, double best_s,
                                 double best_val, const SearchSpec& search) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::log(lo);
  double b = std::log(hi);
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = tc.log_kernel(std::exp(c), horizon);
  double fd = tc.log_kernel(std::exp(d), horizon);
  for (std::size_t it = 0; it < search.golden_max_iter && (b - a) > search.golden_rel_tol; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = tc.log_kernel(std::exp(c), horizon);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = tc.log_kernel(std::exp(d), horizon);
    }
  }
  if (fc < best_val) {
    best_val = fc;
    best_s = std::exp(c);
  }
  if (fd < best_val) {
    best_val = fd;
    best_s = std::exp(d);
  }
  return {best_s, best_val};
}

}  // namespace

StabilityInterval stability_interval(const ArrivalModel& arrival, const ServiceModel& service,
                                     const SearchSpec& search) {
  arrival.validate();
  service.validate();
  TransformCache tc(arrival, service, search.inner);
  return find_interval(tc, search);
}

std::vector<ViolationBound> violation_bounds(std::span<const std::uint32_t> horizons, const ArrivalModel& arrival,
                                             const ServiceModel& service, const SearchSpec& search,
                                             StabilityInterval* interval_out) {
  arrival.validate();
  service.validate();
  if (search.grid_points < 3) throw DomainError("violation_bounds: need at least 3 grid points");
  TransformCache tc(arrival, service, search.inner);
  const StabilityInterval iv = find_interval(tc, search);
  if (interval_out) *interval_out = iv;

  std::vector<ViolationBound> out(horizons.size());
  if (iv.empty) {
    for (auto& vb : out) vb.clamped = true;
    return out;
  }

  const double s_top = iv.s_max * (1.0 - 1e-6);
  const double s_bottom = std::min(search.s_floor, 0.5 * s_top);
  std::vector<double> grid(search.grid_points);
  const double l0 = std::log(s_bottom);
  const double l1 = std::log(s_top);
  for (std::size_t i = 0; i < grid.size(); ++i)
    grid[i] = std::exp(l0 + (l1 - l0) * static_cast<double>(i) / static_cast<double>(grid.size() - 1));

  for (std::size_t h = 0; h < horizons.size(); ++h) {
    const double horizon = horizons[h];
    std::size_t best = 0;
    double best_val = kInf;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double v = tc.log_kernel(grid[i], horizon);
      if (v < best_val) {
        best_val = v;
        best = i;
      }
    }
    double s_star = grid[best];
    if (std::isfinite(best_val)) {
      const double lo = grid[best == 0 ? 0 : best - 1];
      const double hi = grid[std::min(best + 1, grid.size() - 1)];
      if (hi > lo) std::tie(s_star, best_val) = golden(tc, horizon, lo, hi, s_star, best_val, search);
    }
    ViolationBound& vb = out[h];
    vb.s_star = s_star;
    vb.h_abs_error = tc.h(s_star).abs_error;
    if (best_val >= 0.0 || !std::isfinite(best_val)) {
      vb.bound = 1.0;
      vb.clamped = true;
    } else {
      vb.bound = std::exp(best_val);
    }
  }
  return out;
}

ViolationBound violation_bound(std::uint32_t horizon, const ArrivalModel& arrival, const ServiceModel& service,
                               const SearchSpec& search) {
  const std::uint32_t h[] = {horizon};
  return violation_bounds(h, arrival, service, search).front();
}

void DelayWindow::validate() const {
  if (!(t_min < t_max)) throw DomainError("delay window requires t_min < t_max");
}

std::string DeterminacyResult::clamped_flags() const {
  std::string s;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!s.empty()) s += '|';
    s += name;
  };
  add(clamped_tmin, "tmin");
  add(clamped_tmax, "tmax");
  add(vacuous, "vacuous");
  return s.empty() ? "-" : s;
}

DeterminacyResult delay_determinacy(const DelayWindow& window, const ArrivalModel& arrival,
                                    const ServiceModel& service, const SearchSpec& search) {
  window.validate();
  const std::uint32_t horizons[] = {window.t_min, window.t_max};
  StabilityInterval iv;
  const auto vb = violation_bounds(horizons, arrival, service, search, &iv);

  DeterminacyResult r;
  r.s_max = iv.s_max;
  r.vacuous = iv.empty;
  r.bound_tmin = vb[0].bound;
  r.s_star_tmin = vb[0].s_star;
  r.clamped_tmin = vb[0].clamped;
  r.bound_tmax = vb[1].bound;
  r.s_star_tmax = vb[1].s_star;
  r.clamped_tmax = vb[1].clamped;
  if (!iv.empty && r.bound_tmax > r.bound_tmin) {
    // The kernel is pointwise nonincreasing in the horizon, so evaluating
    // the longer horizon at the shorter one's optimiser can only help.
    TransformCache tc(arrival, service, search.inner);
    const double alt = std::exp(tc.log_kernel(r.s_star_tmin, window.t_max));
    if (alt < r.bound_tmax) {
      r.bound_tmax = std::min(1.0, alt);
      r.s_star_tmax = r.s_star_tmin;
      r.clamped_tmax = alt >= 1.0;
    }
  }
  r.ordering_ok = r.bound_tmax <= r.bound_tmin;
  r.varpi = std::clamp(r.bound_tmin - r.bound_tmax, 0.0, 1.0);
  r.quadrature_error_estimate = std::max(vb[0].h_abs_error, vb[1].h_abs_error);
  return r;
}

}  // namespace risdet
