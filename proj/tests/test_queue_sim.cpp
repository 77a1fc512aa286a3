#include <doctest.h>

#include <cmath>

#include "risdet/queue_sim.hpp"

using namespace risdet;

TEST_CASE("no arrivals gives an empty sample") {
  Rng rng = make_stream(1, 0);
  const ArrivalModel none{0.0, 64.0, ArrivalVariant::standard_compound};
  QueueSimOptions o;
  o.warmup_slots = 10;
  o.max_slots = 5000;
  const DelayDistribution d = simulate_queue(none, [](Rng&) { return 1.0; }, 16, 100, rng, o);
  CHECK(d.n_packets == 0);
  std::uint64_t total = 0;
  for (auto c : d.histogram) total += c;
  CHECK(total == 0);
}

TEST_CASE("overwhelming deterministic service delivers every packet in one slot") {
  Rng rng = make_stream(2, 0);
  const ArrivalModel a{0.5, 64.0, ArrivalVariant::standard_compound};
  const double bits = 64.0 * 0.5 * 10.0 * 100.0;
  const DelayDistribution d = simulate_queue(a, [bits](Rng&) { return bits; }, 16, 20000, rng);
  CHECK(d.n_packets == 20000);
  CHECK(d.histogram[1] == 20000);
  CHECK(d.exceed(1).p == 0.0);
  CHECK(d.exceed(4).hi < 1e-3);
}

TEST_CASE("a slow deterministic server builds up delay") {
  // One packet of 64 bits per slot on average; 32 bits of service per slot.
  Rng rng = make_stream(3, 0);
  const ArrivalModel a{0.4, 64.0, ArrivalVariant::standard_compound};
  const DelayDistribution d = simulate_queue(a, [](Rng&) { return 32.0; }, 64, 5000, rng);
  CHECK(d.exceed(1).p > 0.5);
  const auto cdf = d.cdf();
  for (std::size_t i = 1; i < cdf.size(); ++i) CHECK(cdf[i] >= cdf[i - 1]);
  CHECK(cdf.back() == doctest::Approx(1.0));
}

TEST_CASE("Wilson interval") {
  const ProbabilityEstimate e = wilson_interval(50, 100);
  CHECK(e.p == 0.5);
  CHECK(e.lo < 0.5);
  CHECK(e.hi > 0.5);
  CHECK(wilson_interval(0, 100).lo == 0.0);
  CHECK(wilson_interval(0, 100).hi > 0.0);
}

TEST_CASE("confidence interval width shrinks like one over root n") {
  const ArrivalModel a{0.2, 256.0, ArrivalVariant::standard_compound};
  ServiceModel m;
  m.stats = LinkStats{30.0, 20.0, 1.0, 1.0 / 30.0};
  m.secrecy.blocklength = 300.0;
  m.density = ServiceDensity::rician;
  const ServiceSampler s = analytic_service_sampler(m);
  double w[3];
  int i = 0;
  for (std::uint64_t n : {1000ull, 10000ull, 100000ull}) {
    Rng rng = make_stream(4, n);
    w[i++] = simulate_queue(a, s, 32, n, rng).exceed(2).half_width();
  }
  CHECK(w[0] / w[1] == doctest::Approx(std::sqrt(10.0)).epsilon(0.35));
  CHECK(w[1] / w[2] == doctest::Approx(std::sqrt(10.0)).epsilon(0.35));
}

TEST_CASE("analytic bounds dominate the simulated delay tail") {
  const ArrivalModel a{0.1, 64.0, ArrivalVariant::standard_compound};
  ServiceModel m;
  m.stats = LinkStats{30.0, 20.0, 1.0, 1.0 / 5.0};
  m.secrecy.blocklength = 60.0;
  m.density = ServiceDensity::rician;
  m.quadrature.fixed_nodes = 96;
  const std::uint32_t horizons[] = {2, 4, 8};
  const auto bounds = violation_bounds(horizons, a, m, SearchSpec{});
  Rng rng = make_stream(5, 0);
  const DelayDistribution d = simulate_queue(a, analytic_service_sampler(m), 32, 100000, rng);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(d.exceed(horizons[i]).lo <= bounds[i].bound);
  }
  CHECK(bounds[2].bound < 1.0);
}

TEST_CASE("the Eve rate is calibrated to the mean simulated Eve SNR") {
  Topology t;
  Rng place = make_stream(6, 0);
  place_users(t, 1, place);
  FadingParams f;
  Rng cal = make_stream(6, 1);
  f.eve_mean_gain = calibrate_eve_gain(t, f, 20000, cal);
  const double p = 0.5;
  const LinkStats st = link_stats(t, f, PhaseShiftConfig::zeros(t.n_elements), 0, p);
  Rng r = make_stream(6, 2);
  double acc = 0.0;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    const ChannelRealization ch = sample_channels(t, f, r);
    const PhaseShiftConfig th = PhaseShiftConfig::random(t.n_elements, r);
    acc += snr(composite_gain(ch.h_direct_eve, ch.f_eve, th, ch.g_ris), p, f.noise_watts());
  }
  CHECK(acc / draws * st.lambda_eve == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("channel sampler returns n times the secrecy rate") {
  Topology t;
  Rng place = make_stream(7, 0);
  place_users(t, 1, place);
  FadingParams f;
  SecrecyParams sec;
  sec.blocklength = 123.0;
  const PhaseShiftConfig theta = PhaseShiftConfig::zeros(t.n_elements);
  const ServiceSampler s = channel_service_sampler(t, f, theta, 0, 0.5, sec);
  Rng a = make_stream(7, 1);
  Rng b = make_stream(7, 1);
  for (int i = 0; i < 100; ++i) {
    const double bits = s(a);
    const ChannelRealization ch = sample_channels(t, f, b);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double gu = snr(composite_gain(ch.h_direct[0], ch.f_user[0], theta, ch.g_ris), 0.5, f.noise_watts());
    const double ge = snr(composite_gain(ch.h_direct_eve, ch.f_eve, theta, ch.g_ris), 0.5, f.noise_watts());
    const double expect = u(b) < sec.epsilon_e ? 0.0 : 123.0 * fbc_secrecy_rate(gu, ge, sec);
    CHECK(bits == expect);
  }
}
