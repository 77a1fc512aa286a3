#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "risdet/geometry_channel.hpp"
#include "risdet/quadrature.hpp"

using namespace risdet;

namespace {

Topology small_topology(std::size_t n_elements, std::size_t n_users, std::uint64_t seed = 7) {
  Topology t;
  t.n_elements = n_elements;
  Rng rng = make_stream(seed, 0);
  place_users(t, n_users, rng);
  return t;
}

}  // namespace

TEST_CASE("path loss") {
  CHECK(path_loss(1.0, 4.0, -30.0) == doctest::Approx(1e-3).epsilon(1e-14));
  for (double a : {2.0, 2.2, 3.5, 4.0}) CHECK(path_loss(1.0, a, -27.0) == doctest::Approx(std::pow(10.0, -2.7)));
  CHECK(path_loss(10.0, 2.0, -30.0) == doctest::Approx(1e-5).epsilon(1e-14));
  CHECK_THROWS_AS(path_loss(0.0, 2.0, -30.0), DomainError);
}

TEST_CASE("user placement stays inside the disk around Eve") {
  Topology t;
  Rng rng = make_stream(3, 0);
  place_users(t, 500, rng);
  for (const auto& u : t.user_pos) CHECK(distance(u, t.eve_pos) <= t.user_radius);
  CHECK_NOTHROW(t.validate());
}

TEST_CASE("sample_channels: infinite Rician factor leaves pure LoS") {
  Topology t = small_topology(16, 2);
  FadingParams f;
  f.rician_k_r = std::numeric_limits<double>::infinity();
  Rng rng = make_stream(1, 1);
  const ChannelRealization ch = sample_channels(t, f, rng);
  const double pl = path_loss(distance(t.ap_pos, t.ris_pos), f.alpha_ris, f.pl0_db);
  for (const auto& g : ch.g_ris) CHECK(std::norm(g) == doctest::Approx(pl).epsilon(1e-12));
}

TEST_CASE("sample_channels: second moment of the RIS link equals its path loss") {
  Topology t = small_topology(4, 1);
  FadingParams f;
  const double pl = path_loss(distance(t.ap_pos, t.ris_pos), f.alpha_ris, f.pl0_db);
  Rng rng = make_stream(2, 1);
  const int draws = 100000;
  std::vector<double> acc(t.n_elements, 0.0);
  for (int i = 0; i < draws; ++i) {
    const ChannelRealization ch = sample_channels(t, f, rng);
    for (std::size_t n = 0; n < t.n_elements; ++n) acc[n] += std::norm(ch.g_ris[n]);
  }
  for (double a : acc) CHECK(std::abs(a / draws / pl - 1.0) < 0.02);
}

TEST_CASE("sample_channels is reproducible for equal seeds") {
  Topology t = small_topology(8, 3);
  FadingParams f;
  Rng a = make_stream(11, 4);
  Rng b = make_stream(11, 4);
  const ChannelRealization x = sample_channels(t, f, a);
  const ChannelRealization y = sample_channels(t, f, b);
  CHECK(x.g_ris == y.g_ris);
  CHECK(x.f_user == y.f_user);
  CHECK(x.h_direct == y.h_direct);
  CHECK(x.h_direct_eve == y.h_direct_eve);
}

TEST_CASE("composite gain") {
  PhaseShiftConfig pi1{{std::numbers::pi}};
  const ComplexVector one{Complex{1.0, 0.0}};
  CHECK(std::abs(composite_gain(Complex{1.0, 0.0}, one, pi1, one)) < 1e-15);

  const ComplexVector zero(3, Complex{});
  const ComplexVector g{Complex{0.3, 1.0}, Complex{-2.0, 0.1}, Complex{0.5, -0.5}};
  const Complex h{0.7, -0.2};
  CHECK(composite_gain(h, zero, PhaseShiftConfig::zeros(3), g) == h);
  CHECK_THROWS_AS(composite_gain(h, zero, PhaseShiftConfig::zeros(2), g), ContractViolation);
}

TEST_CASE("aligned phases beat every point of a 16-level grid") {
  const Complex h{0.4, 0.9};
  const ComplexVector f{Complex{1.0, -0.5}, Complex{0.2, 0.8}, Complex{-0.6, -0.3}};
  const ComplexVector g{Complex{0.3, 0.3}, Complex{-1.0, 0.4}, Complex{0.7, -0.9}};
  const double aligned = std::abs(composite_gain(h, f, align_phases(h, f, g), g));
  double best = 0.0;
  const double step = 2.0 * std::numbers::pi / 16.0;
  for (int a = 0; a < 16; ++a)
    for (int b = 0; b < 16; ++b)
      for (int c = 0; c < 16; ++c) {
        const PhaseShiftConfig th{{a * step, b * step, c * step}};
        best = std::max(best, std::abs(composite_gain(h, f, th, g)));
      }
  CHECK(aligned >= best - 1e-12);
  // The aligned value is the sum of magnitudes.
  double sum = std::abs(h);
  for (std::size_t n = 0; n < 3; ++n) sum += std::abs(f[n]) * std::abs(g[n]);
  CHECK(aligned == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("snr") {
  CHECK(snr(Complex{1.0, 0.0}, 1.0, 1e-3) == doctest::Approx(1e3));
  CHECK(snr(Complex{0.3, 0.4}, 0.0, 1e-3) == 0.0);
  PhaseShiftConfig pi1{{std::numbers::pi}};
  const ComplexVector one{Complex{1.0, 0.0}};
  CHECK(snr(composite_gain(Complex{1.0, 0.0}, one, pi1, one), 1.0, 1e-3) < 1e-25);
  CHECK_THROWS_AS(snr(Complex{1.0, 0.0}, 1.0, 0.0), DomainError);
}

TEST_CASE("delta_sq: direct term and linear RIS term") {
  FadingParams f;
  Topology t0 = small_topology(0, 1);
  const double direct = path_loss(distance(t0.ap_pos, t0.user_pos[0]), f.alpha_direct, f.pl0_db);
  CHECK(delta_sq(t0, f, 0) == doctest::Approx(direct).epsilon(1e-15));

  Topology t16 = small_topology(16, 1);
  Topology t32 = small_topology(32, 1);
  CHECK(delta_sq(t32, f, 0) - direct == doctest::Approx(2.0 * (delta_sq(t16, f, 0) - direct)).epsilon(1e-12));
}

TEST_CASE("delta_sq matches the Monte-Carlo variance of the composite gain") {
  Topology t = small_topology(16, 1, 21);
  FadingParams f;
  Rng rng = make_stream(5, 2);
  const PhaseShiftConfig theta = PhaseShiftConfig::random(t.n_elements, rng);
  const int draws = 100000;
  Complex mean{};
  double second = 0.0;
  for (int i = 0; i < draws; ++i) {
    const ChannelRealization ch = sample_channels(t, f, rng);
    const Complex g = composite_gain(ch.h_direct[0], ch.f_user[0], theta, ch.g_ris);
    mean += g;
    second += std::norm(g);
  }
  mean /= static_cast<double>(draws);
  const double variance = second / draws - std::norm(mean);
  CHECK(std::abs(variance / delta_sq(t, f, 0) - 1.0) < 0.05);

  // The LoS mean is the deterministic part used for upsilon.
  const LosComponents los = los_components(t, f);
  const double upsilon = std::norm(composite_gain(Complex{}, los.f_user[0], theta, los.g_ris));
  CHECK(std::abs(std::norm(mean) - upsilon) < 0.05 * (upsilon + delta_sq(t, f, 0)));
}

TEST_CASE("user SNR density") {
  LinkStats s{1.0, 0.0, 1.0, 1.0};
  CHECK(user_snr_pdf(0.0, s) == doctest::Approx(1.0));
  CHECK(user_snr_pdf(-1.0, s) == 0.0);
  const auto mass = [](const LinkStats& st) {
    return integrate([&](double g) { return user_snr_pdf(g, st); }, 0.0, 200.0 * st.rho * st.delta_k_sq, 1e-12, 0.0,
                     500)
        .value;
  };
  CHECK(mass(LinkStats{2.0, 0.0, 3.0, 1.0}) == doctest::Approx(1.0).epsilon(1e-10));
  const LinkStats s2{2.0, 1.5, 3.0, 1.0};
  CHECK(mass(s2) == doctest::Approx(std::exp(-s2.upsilon_k / s2.delta_k_sq)).epsilon(1e-10));
}

TEST_CASE("link_stats requires a calibrated eavesdropper") {
  Topology t = small_topology(8, 1);
  FadingParams f;
  CHECK_THROWS_AS(link_stats(t, f, PhaseShiftConfig::zeros(8), 0, 1.0), DomainError);
  Rng rng = make_stream(9, 9);
  f.eve_mean_gain = calibrate_eve_gain(t, f, 2000, rng);
  const LinkStats s = link_stats(t, f, PhaseShiftConfig::zeros(8), 0, 2.0);
  CHECK(s.rho == doctest::Approx(2.0 / f.noise_watts()));
  CHECK(s.lambda_eve * s.rho * f.eve_mean_gain == doctest::Approx(1.0));
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("wrap_phase") {
  CHECK(wrap_phase(-0.5) == doctest::Approx(2.0 * std::numbers::pi - 0.5));
  CHECK(wrap_phase(7.0) == doctest::Approx(7.0 - 2.0 * std::numbers::pi));
  CHECK(wrap_phase(2.0 * std::numbers::pi) == 0.0);
}
