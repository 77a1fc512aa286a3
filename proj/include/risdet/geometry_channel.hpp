#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "risdet/errors.hpp"

namespace risdet {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;
using Rng = std::mt19937_64;

/// Independent generator for sub-stream `stream` of a run seed.
Rng make_stream(std::uint64_t seed, std::uint64_t stream);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Point2& a, const Point2& b);

/// Placement of the AP, the RIS (a uniform linear array centred at
/// `ris_pos`, laid out along the x axis), the eavesdropper and the users.
struct Topology {
  Point2 ap_pos{0.0, 20.0};
  Point2 ris_pos{50.0, 20.0};
  Point2 eve_pos{50.0, 0.0};
  std::vector<Point2> user_pos;
  std::size_t n_elements = 32;
  double carrier_wavelength = 0.1;
  double element_spacing = 0.05;
  double user_radius = 2.0;

  std::size_t n_users() const { return user_pos.size(); }
  Point2 element_pos(std::size_t n) const;

  /// Throws DomainError when a link distance is not strictly positive or a
  /// user sits outside the placement disk around Eve.
  void validate() const;
};

/// Users drawn uniformly over the disk of radius `topo.user_radius` centred
/// at Eve. Existing user positions are replaced.
void place_users(Topology& topo, std::size_t n_users, Rng& rng);

struct FadingParams {
  double pl0_db = -30.0;
  double alpha_direct = 4.0;
  double alpha_ris = 2.2;
  double rician_k_r = 3.0;
  double rician_k_gk = 3.0;
  double noise_power_dbm = -85.0;
  /// Mean Eve channel power gain; 1/lambda_eve = rho * eve_mean_gain.
  /// Non-positive means "not calibrated yet".
  double eve_mean_gain = 0.0;

  double noise_watts() const;
  void validate() const;
};

struct ChannelRealization {
  std::vector<Complex> h_direct;        // per user
  ComplexVector g_ris;                  // AP -> RIS
  std::vector<ComplexVector> f_user;    // RIS -> user k
  ComplexVector f_eve;                  // RIS -> Eve
  Complex h_direct_eve;
};

/// Phase of each RIS element in [0, 2*pi). Reflection amplitudes are one.
struct PhaseShiftConfig {
  std::vector<double> phases;

  static PhaseShiftConfig zeros(std::size_t n);
  static PhaseShiftConfig random(std::size_t n, Rng& rng);
  Complex coefficient(std::size_t n) const;
  std::size_t size() const { return phases.size(); }
};

double wrap_phase(double phi);

struct LinkStats {
  double delta_k_sq = 0.0;
  double upsilon_k = 0.0;
  double rho = 0.0;
  double lambda_eve = 0.0;

  void validate() const;
};

/// 10^(pl0_db/10) * d^-alpha with the reference distance at 1 m.
double path_loss(double d, double alpha, double pl0_db);

/// Deterministic LoS parts (already scaled by sqrt(K/(K+1)) and path loss).
struct LosComponents {
  ComplexVector g_ris;
  std::vector<ComplexVector> f_user;
  ComplexVector f_eve;
};

LosComponents los_components(const Topology& topo, const FadingParams& fading);

ChannelRealization sample_channels(const Topology& topo, const FadingParams& fading, Rng& rng);

/// h + f^H Theta g
Complex composite_gain(Complex h, std::span<const Complex> f, const PhaseShiftConfig& theta,
                       std::span<const Complex> g);

double snr(Complex gain, double p_tx, double noise);

/// Phases that line every reflected term up with arg(h) (or with zero
/// phase when h == 0).
PhaseShiftConfig align_phases(Complex h, std::span<const Complex> f, std::span<const Complex> g);

/// Closed-form variance proxy: direct-link path loss plus the RIS term.
double delta_sq(const Topology& topo, const FadingParams& fading, std::size_t user);

LinkStats link_stats(const Topology& topo, const FadingParams& fading, const PhaseShiftConfig& theta,
                     std::size_t user, double p_tx);

/// Monte-Carlo mean of |h_eve + f_eve^H Theta g|^2 over fading and uniformly
/// random phase configurations.
double calibrate_eve_gain(const Topology& topo, const FadingParams& fading, std::size_t draws, Rng& rng);

/// High-SNR density of the user SNR. Sub-normalised for upsilon > 0: its
/// total mass is exp(-upsilon/delta^2).
double user_snr_pdf(double gamma, const LinkStats& stats);

}  // namespace risdet
