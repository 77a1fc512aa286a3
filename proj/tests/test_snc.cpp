#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "risdet/snc.hpp"

using namespace risdet;

namespace {

ServiceModel model(ServiceDensity d, double n = 400.0) {
  ServiceModel m;
  m.stats = LinkStats{30.0, 20.0, 1.0, 1.0 / 30.0};
  m.secrecy = SecrecyParams{2e-6, 1e-3, n};
  m.density = d;
  m.quadrature.rel_tol = 1e-10;
  return m;
}

// Monte-Carlo E[exp(-s R')] with R' the clamped rate the transform uses:
// log2((1+gu)/(1+ge)) - (q_eps + sqrt(V(ge)) q_sigma) / (sqrt(n) ln 2) on
// the wedge gu > ge, zero rate (factor one) elsewhere for the Rician law.
double mc_h(double s, const ServiceModel& m, int draws, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double b = m.stats.rho * m.stats.delta_k_sq;
  const double c = m.stats.rho * m.stats.upsilon_k;
  std::exponential_distribution<double> eve(m.stats.lambda_eve);
  std::exponential_distribution<double> user_exp(1.0 / b);
  std::normal_distribution<double> gauss(0.0, std::sqrt(b / 2.0));
  const double qe = q_inv(m.secrecy.epsilon_e);
  const double qs = q_inv(m.secrecy.sigma_leak);
  const double a = s / std::numbers::ln2;
  double acc = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double ge = eve(rng);
    double gu;
    if (m.density == ServiceDensity::paper) {
      gu = user_exp(rng);
    } else {
      const double re = std::sqrt(c) + gauss(rng);
      const double im = gauss(rng);
      gu = re * re + im * im;
    }
    if (gu > ge) {
      const double l = std::log1p(ge) - std::log1p(gu) + (qe + std::sqrt(dispersion(ge)) * qs) / std::sqrt(m.secrecy.blocklength);
      acc += std::exp(a * l);
    } else if (m.density == ServiceDensity::rician) {
      acc += 1.0;
    }
  }
  double h = acc / draws;
  if (m.density == ServiceDensity::paper) h *= std::exp(-c / b);
  return h;
}

}  // namespace

TEST_CASE("arrival transform") {
  for (auto v : {ArrivalVariant::paper_literal, ArrivalVariant::standard_compound})
    CHECK(arrival_mellin(1.0, ArrivalModel{0.7, 13.0, v}) == doctest::Approx(1.0));
  CHECK(arrival_mellin(2.0, ArrivalModel{1.0, 1.0, ArrivalVariant::paper_literal}) ==
        doctest::Approx(std::exp(std::numbers::e - 1.0)).epsilon(1e-12));

  const double theta = 0.01;
  const double lambda = 0.5;
  const double x = 32.0;
  std::mt19937_64 rng(17);
  std::poisson_distribution<int> pois(lambda);
  double acc = 0.0;
  const int draws = 1000000;
  for (int i = 0; i < draws; ++i) acc += std::exp(theta * x * pois(rng));
  const double mc = acc / draws;
  const double v = arrival_mellin(1.0 + theta, ArrivalModel{lambda, x, ArrivalVariant::standard_compound});
  CHECK(std::abs(v / mc - 1.0) < 0.01);
  CHECK_THROWS_AS(arrival_mellin(100.0, ArrivalModel{1.0, 100.0, ArrivalVariant::standard_compound}), NumericalError);
}

TEST_CASE("per-channel-use arrival scaling") {
  const ArrivalModel a{0.2, 256.0, ArrivalVariant::standard_compound};
  CHECK(per_channel_use(a, 128.0).pkt_bits == doctest::Approx(2.0));
  CHECK_THROWS_AS(per_channel_use(a, 0.0), DomainError);
}

TEST_CASE("H at s = 0") {
  const ServiceModel p = model(ServiceDensity::paper);
  const double b = p.stats.rho * p.stats.delta_k_sq;
  const double c = p.stats.rho * p.stats.upsilon_k;
  const double lam = p.stats.lambda_eve;
  // Exponential user law shifted by c: mass exp(-c/b) times Pr{Exp(b) > Exp(lam)}.
  const double wedge = std::exp(-c / b) * lam * b / (lam * b + 1.0);
  CHECK(service_mellin_u(0.0, p, InnerMethod::closed_form).value == doctest::Approx(wedge).epsilon(1e-8));
  CHECK(service_mellin_u(0.0, p, InnerMethod::quadrature).value == doctest::Approx(wedge).epsilon(1e-8));
  // The Rician form is a proper transform.
  CHECK(service_mellin_u(0.0, model(ServiceDensity::rician), InnerMethod::quadrature).value ==
        doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("H against Monte Carlo") {
  for (auto d : {ServiceDensity::paper, ServiceDensity::rician}) {
    ServiceModel m = model(d, 300.0);
    m.secrecy.epsilon_e = 0.5;
    m.secrecy.sigma_leak = 0.5;
    const double h = service_mellin_u(0.5, m, InnerMethod::quadrature).value;
    CHECK(std::abs(h / mc_h(0.5, m, 1000000, 3) - 1.0) < 0.02);
  }
}

TEST_CASE("user penalty prefactor decreases in blocklength") {
  const double qe = q_inv(2e-6);
  for (double s : {0.1, 1.0, 3.0}) {
    double prev = INFINITY;
    for (double n = 50.0; n <= 6400.0; n *= 2.0) {
      const double v = std::pow(std::exp(qe / std::sqrt(n)), s / std::numbers::ln2);
      CHECK(v < prev);
      prev = v;
    }
  }
  // and H follows it
  const double h1 = service_mellin_u(1.0, model(ServiceDensity::rician, 100.0)).value;
  const double h2 = service_mellin_u(1.0, model(ServiceDensity::rician, 1000.0)).value;
  CHECK(h2 < h1);
}

TEST_CASE("service transform mixture") {
  ServiceModel m = model(ServiceDensity::rician);
  const double eps = m.secrecy.epsilon_e;
  for (double sa : {0.2, 0.5, 0.9}) {
    const double mu = mellin_u(1.0 + (sa - 1.0) / std::numbers::ln2, m).value;
    CHECK(service_mellin(sa, m).value == doctest::Approx((1.0 - eps) * mu + eps).epsilon(1e-14));
  }
  ServiceModel sure = m;
  sure.secrecy.epsilon_e = 1.0;
  for (double sa : {-1.0, 0.3, 2.0}) CHECK(service_mellin(sa, sure).value == 1.0);
  // service_mellin(1-s) equals the bracket of the closed form.
  for (auto [s, n] : {std::pair{0.3, 200.0}, std::pair{1.0, 500.0}, std::pair{2.0, 1500.0}}) {
    ServiceModel q = model(ServiceDensity::paper, n);
    const double bracket = (1.0 - eps) * service_mellin_u(s, q, InnerMethod::closed_form).value + eps;
    CHECK(service_mellin(1.0 - s, q).value == doctest::Approx(bracket).epsilon(1e-7));
  }
}

TEST_CASE("fixed product rule agrees with adaptive quadrature") {
  for (auto d : {ServiceDensity::paper, ServiceDensity::rician})
    for (double s : {0.05, 0.5, 2.0}) {
      ServiceModel a = model(d);
      ServiceModel f = a;
      f.quadrature.fixed_nodes = 96;
      const double ref = service_mellin_u(s, a, InnerMethod::quadrature).value;
      const MellinValue v = service_mellin_u(s, f, InnerMethod::quadrature);
      CHECK(v.value == doctest::Approx(ref).epsilon(1e-5));
      CHECK(v.abs_error >= std::abs(v.value - ref) * 0.1);
    }
}

TEST_CASE("kernel arithmetic") {
  CHECK(kernel_from_transforms(1.2, 0.5, 3.0) == doctest::Approx(0.3125));
  CHECK(kernel_from_transforms(1.2, 0.5, 0.0) == doctest::Approx(1.0 / (1.0 - 0.6)));
  CHECK_THROWS_AS(kernel_from_transforms(2.0, 0.5, 1.0), StabilityError);
  const ServiceModel m = model(ServiceDensity::paper);
  const ArrivalModel a{0.2, 256.0, ArrivalVariant::standard_compound};
  for (double s : {0.2, 0.8})
    CHECK(kernel(s, 0.0, a, m) ==
          doctest::Approx(1.0 / (1.0 - arrival_mellin(1.0 + s, per_channel_use(a, m.secrecy.blocklength)) *
                                           service_mellin(1.0 - s, m).value)));
}

TEST_CASE("closed form and composed kernel agree") {
  const ArrivalModel a{0.2, 256.0, ArrivalVariant::standard_compound};
  for (auto [s, t] : {std::pair{0.3, 2.0}, std::pair{1.0, 8.0}, std::pair{1.5, 4.0}}) {
    const ServiceModel m = model(ServiceDensity::paper);
    CHECK(closed_form_kernel(s, t, a, m) == doctest::Approx(kernel(s, t, a, m)).epsilon(1e-6));
  }
}

TEST_CASE("violation bound") {
  const ArrivalModel a{0.2, 256.0, ArrivalVariant::standard_compound};
  ServiceModel m = model(ServiceDensity::rician, 500.0);
  m.quadrature.rel_tol = 1e-6;
  const SearchSpec spec;
  CHECK(violation_bound(0, a, m, spec).bound == 1.0);

  double prev = 1.0;
  for (std::uint32_t t : {1u, 2u, 4u, 8u, 16u}) {
    const ViolationBound vb = violation_bound(t, a, m, spec);
    CHECK(vb.bound <= prev);
    CHECK(vb.bound >= 0.0);
    prev = vb.bound;
  }
  CHECK(prev < 0.5);

  const ArrivalModel flood{50.0, 256.0, ArrivalVariant::standard_compound};
  StabilityInterval iv;
  const std::uint32_t h[] = {4};
  const auto vb = violation_bounds(h, flood, m, spec, &iv);
  CHECK(iv.empty);
  CHECK(vb[0].bound == 1.0);
  CHECK(vb[0].clamped);
  const DeterminacyResult r = delay_determinacy(DelayWindow{2, 8}, flood, m, spec);
  CHECK(r.vacuous);
  CHECK(r.varpi == 0.0);
  CHECK(r.clamped_flags().find("vacuous") != std::string::npos);
}

TEST_CASE("delay determinacy") {
  const ArrivalModel a{0.2, 256.0, ArrivalVariant::standard_compound};
  ServiceModel m = model(ServiceDensity::rician, 800.0);
  m.quadrature.fixed_nodes = 64;
  const SearchSpec spec;

  const DeterminacyResult zero = delay_determinacy(DelayWindow{0, 8}, a, m, spec);
  CHECK(zero.varpi == doctest::Approx(1.0 - zero.bound_tmax).epsilon(1e-14));

  double prev = 2.0;
  for (std::uint32_t tmin : {2u, 4u, 6u, 8u}) {
    const double v = delay_determinacy(DelayWindow{tmin, 10}, a, m, spec).varpi;
    CHECK(v <= prev + 1e-12);
    prev = v;
  }
  prev = -1.0;
  for (std::uint32_t tmax : {4u, 6u, 8u, 10u}) {
    const DeterminacyResult r = delay_determinacy(DelayWindow{2, tmax}, a, m, spec);
    CHECK(r.varpi >= prev - 1e-12);
    CHECK(r.ordering_ok);
    CHECK(r.varpi >= 0.0);
    CHECK(r.varpi <= 1.0);
    prev = r.varpi;
  }
  CHECK_THROWS_AS(delay_determinacy(DelayWindow{5, 3}, a, m, spec), DomainError);
  CHECK_THROWS_AS(delay_determinacy(DelayWindow{3, 3}, a, m, spec), DomainError);
}
