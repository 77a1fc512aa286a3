#include "risdet/geometry_channel.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace risdet {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double los_weight(double k) { return std::isinf(k) ? 1.0 : std::sqrt(k / (k + 1.0)); }
double nlos_weight(double k) { return std::isinf(k) ? 0.0 : std::sqrt(1.0 / (k + 1.0)); }

// K/(K+1), the LoS share of the link power.
double los_share(double k) { return std::isinf(k) ? 1.0 : k / (k + 1.0); }

Complex cn01(Rng& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

Complex steering(double path_len, double wavelength) {
  return std::polar(1.0, -kTwoPi * path_len / wavelength);
}

void require_positive(double d, const char* what) {
  if (!(d > 0.0)) throw DomainError(std::string("non-positive link distance: ") + what);
}

}  // namespace

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x5eedu};
  return Rng(seq);
}

double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

Point2 Topology::element_pos(std::size_t n) const {
  const double offset = (static_cast<double>(n) - 0.5 * static_cast<double>(n_elements - 1)) * element_spacing;
  return {ris_pos.x + offset, ris_pos.y};
}

void Topology::validate() const {
  if (!(carrier_wavelength > 0.0)) throw DomainError("carrier wavelength must be positive");
  if (!(element_spacing > 0.0) && n_elements > 1) throw DomainError("element spacing must be positive");
  if (!(user_radius > 0.0)) throw DomainError("user radius must be positive");
  require_positive(distance(ap_pos, ris_pos), "AP-RIS");
  require_positive(distance(ap_pos, eve_pos), "AP-Eve");
  require_positive(distance(ris_pos, eve_pos), "RIS-Eve");
  for (const auto& u : user_pos) {
    require_positive(distance(ap_pos, u), "AP-user");
    require_positive(distance(ris_pos, u), "RIS-user");
    if (distance(u, eve_pos) > user_radius * (1.0 + 1e-12))
      throw DomainError("user outside the placement radius around Eve");
  }
  for (std::size_t n = 0; n < n_elements; ++n) {
    require_positive(distance(ap_pos, element_pos(n)), "AP-element");
    require_positive(distance(eve_pos, element_pos(n)), "element-Eve");
    for (const auto& u : user_pos) require_positive(distance(u, element_pos(n)), "element-user");
  }
}

void place_users(Topology& topo, std::size_t n_users, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  topo.user_pos.clear();
  for (std::size_t k = 0; k < n_users; ++k) {
    const double r = topo.user_radius * std::sqrt(unit(rng));
    const double a = kTwoPi * unit(rng);
    Point2 p{topo.eve_pos.x + r * std::cos(a), topo.eve_pos.y + r * std::sin(a)};
    // A user exactly on Eve would put two receivers at the same spot; nudge.
    if (distance(p, topo.eve_pos) == 0.0) p.x += 1e-6;
    topo.user_pos.push_back(p);
  }
}

double FadingParams::noise_watts() const { return std::pow(10.0, (noise_power_dbm - 30.0) / 10.0); }

void FadingParams::validate() const {
  if (!(pl0_db < 0.0)) throw DomainError("pl0_db must be negative");
  if (!(alpha_direct >= 2.0) || !(alpha_ris >= 2.0)) throw DomainError("path loss exponents must be >= 2");
  if (!(rician_k_r >= 0.0) || !(rician_k_gk >= 0.0)) throw DomainError("Rician factors must be >= 0");
  if (!std::isfinite(noise_power_dbm)) throw DomainError("noise power must be finite");
  if (!std::isfinite(eve_mean_gain)) throw DomainError("eve_mean_gain must be finite");
}

PhaseShiftConfig PhaseShiftConfig::zeros(std::size_t n) { return {std::vector<double>(n, 0.0)}; }

PhaseShiftConfig PhaseShiftConfig::random(std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  PhaseShiftConfig c;
  c.phases.resize(n);
  for (auto& p : c.phases) p = wrap_phase(u(rng));
  return c;
}

Complex PhaseShiftConfig::coefficient(std::size_t n) const { return std::polar(1.0, phases.at(n)); }

double wrap_phase(double phi) {
  double w = std::fmod(phi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

void LinkStats::validate() const {
  auto ok = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!ok(delta_k_sq) || !ok(rho) || !ok(lambda_eve) || !(upsilon_k >= 0.0) || !std::isfinite(upsilon_k))
    throw DomainError("invalid link statistics");
}

double path_loss(double d, double alpha, double pl0_db) {
  if (!(d > 0.0)) throw DomainError("path_loss: distance must be positive");
  return std::pow(10.0, pl0_db / 10.0) * std::pow(d, -alpha);
}

LosComponents los_components(const Topology& topo, const FadingParams& fading) {
  const std::size_t n_el = topo.n_elements;
  const double lambda = topo.carrier_wavelength;
  LosComponents los;

  const double amp_r = std::sqrt(path_loss(distance(topo.ap_pos, topo.ris_pos), fading.alpha_ris, fading.pl0_db)) *
                       los_weight(fading.rician_k_r);
  los.g_ris.resize(n_el);
  for (std::size_t n = 0; n < n_el; ++n)
    los.g_ris[n] = amp_r * steering(distance(topo.ap_pos, topo.element_pos(n)), lambda);

  auto ris_to = [&](const Point2& rx) {
    const double amp = std::sqrt(path_loss(distance(topo.ris_pos, rx), fading.alpha_ris, fading.pl0_db)) *
                       los_weight(fading.rician_k_gk);
    ComplexVector v(n_el);
    for (std::size_t n = 0; n < n_el; ++n) v[n] = amp * steering(distance(topo.element_pos(n), rx), lambda);
    return v;
  };
  for (const auto& u : topo.user_pos) los.f_user.push_back(ris_to(u));
  los.f_eve = ris_to(topo.eve_pos);
  return los;
}

ChannelRealization sample_channels(const Topology& topo, const FadingParams& fading, Rng& rng) {
  topo.validate();
  const LosComponents los = los_components(topo, fading);
  ChannelRealization ch;

  auto mix = [&](const ComplexVector& los_part, double pl, double k) {
    const double nlos_amp = std::sqrt(pl) * nlos_weight(k);
    ComplexVector v(los_part.size());
    for (std::size_t n = 0; n < v.size(); ++n) {
      const Complex w = cn01(rng);
      v[n] = los_part[n] + nlos_amp * w;
    }
    return v;
  };

  const double pl_r = path_loss(distance(topo.ap_pos, topo.ris_pos), fading.alpha_ris, fading.pl0_db);
  ch.g_ris = mix(los.g_ris, pl_r, fading.rician_k_r);
  for (std::size_t k = 0; k < topo.n_users(); ++k) {
    const double pl = path_loss(distance(topo.ris_pos, topo.user_pos[k]), fading.alpha_ris, fading.pl0_db);
    ch.f_user.push_back(mix(los.f_user[k], pl, fading.rician_k_gk));
  }
  const double pl_e = path_loss(distance(topo.ris_pos, topo.eve_pos), fading.alpha_ris, fading.pl0_db);
  ch.f_eve = mix(los.f_eve, pl_e, fading.rician_k_gk);

  for (const auto& u : topo.user_pos) {
    const double pl = path_loss(distance(topo.ap_pos, u), fading.alpha_direct, fading.pl0_db);
    ch.h_direct.push_back(std::sqrt(pl) * cn01(rng));
  }
  const double pl_de = path_loss(distance(topo.ap_pos, topo.eve_pos), fading.alpha_direct, fading.pl0_db);
  ch.h_direct_eve = std::sqrt(pl_de) * cn01(rng);
  return ch;
}

Complex composite_gain(Complex h, std::span<const Complex> f, const PhaseShiftConfig& theta,
                       std::span<const Complex> g) {
  if (f.size() != g.size() || theta.size() != f.size())
    throw ContractViolation("composite_gain: vector length mismatch");
  Complex acc = h;
  for (std::size_t n = 0; n < f.size(); ++n) acc += std::conj(f[n]) * theta.coefficient(n) * g[n];
  return acc;
}

double snr(Complex gain, double p_tx, double noise) {
  if (!(noise > 0.0)) throw DomainError("snr: noise power must be positive");
  if (p_tx < 0.0) throw DomainError("snr: negative transmit power");
  return std::norm(gain) * p_tx / noise;
}

PhaseShiftConfig align_phases(Complex h, std::span<const Complex> f, std::span<const Complex> g) {
  if (f.size() != g.size()) throw ContractViolation("align_phases: vector length mismatch");
  const double target = (h == Complex{}) ? 0.0 : std::arg(h);
  PhaseShiftConfig c;
  c.phases.resize(f.size());
  for (std::size_t n = 0; n < f.size(); ++n) c.phases[n] = wrap_phase(target - std::arg(std::conj(f[n]) * g[n]));
  return c;
}

double delta_sq(const Topology& topo, const FadingParams& fading, std::size_t user) {
  const Point2& u = topo.user_pos.at(user);
  const double direct = path_loss(distance(topo.ap_pos, u), fading.alpha_direct, fading.pl0_db);
  const double pl_r = path_loss(distance(topo.ap_pos, topo.ris_pos), fading.alpha_ris, fading.pl0_db);
  const double pl_g = path_loss(distance(topo.ris_pos, u), fading.alpha_ris, fading.pl0_db);
  // (1 + Kg + Kr) / ((1 + Kg)(1 + Kr)) written so that infinite factors work.
  const double nlos_frac = 1.0 - los_share(fading.rician_k_r) * los_share(fading.rician_k_gk);
  return direct + pl_r * pl_g * static_cast<double>(topo.n_elements) * nlos_frac;
}

LinkStats link_stats(const Topology& topo, const FadingParams& fading, const PhaseShiftConfig& theta,
                     std::size_t user, double p_tx) {
  if (!(fading.eve_mean_gain > 0.0)) throw DomainError("link_stats: Eve gain not calibrated");
  const LosComponents los = los_components(topo, fading);
  LinkStats s;
  s.delta_k_sq = delta_sq(topo, fading, user);
  s.upsilon_k = std::norm(composite_gain(Complex{}, los.f_user.at(user), theta, los.g_ris));
  s.rho = p_tx / fading.noise_watts();
  s.lambda_eve = 1.0 / (s.rho * fading.eve_mean_gain);
  return s;
}

double calibrate_eve_gain(const Topology& topo, const FadingParams& fading, std::size_t draws, Rng& rng) {
  if (draws == 0) throw DomainError("calibrate_eve_gain: zero draws");
  double acc = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const ChannelRealization ch = sample_channels(topo, fading, rng);
    const PhaseShiftConfig theta = PhaseShiftConfig::random(topo.n_elements, rng);
    acc += std::norm(composite_gain(ch.h_direct_eve, ch.f_eve, theta, ch.g_ris));
  }
  return acc / static_cast<double>(draws);
}

double user_snr_pdf(double gamma, const LinkStats& stats) {
  if (gamma < 0.0) return 0.0;
  const double scale = stats.rho * stats.delta_k_sq;
  return std::exp(-(gamma + stats.rho * stats.upsilon_k) / scale) / scale;
}

}  // namespace risdet
