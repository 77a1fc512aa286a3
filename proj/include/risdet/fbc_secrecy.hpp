#pragma once

namespace risdet {

struct SecrecyParams {
  double epsilon_e = 2e-6;   // decoding error rate
  double sigma_leak = 1e-3;  // information leakage probability
  double blocklength = 200.0;

  void validate() const;
};

enum class DispersionMode { exact, user_approx_one };

/// Gaussian tail Q(z) = erfc(z / sqrt 2) / 2.
double q_func(double z);

/// Inverse of Q on (0, 1).
double q_inv(double p);

/// Channel dispersion 1 - (1 + gamma)^-2.
double dispersion(double gamma);

/// log2((1 + gamma_user) / (1 + gamma_eve)); may be negative.
double secrecy_capacity(double gamma_user, double gamma_eve);

/// Normal-approximation secrecy rate in bits per channel use, clamped at 0.
double fbc_secrecy_rate(double gamma_user, double gamma_eve, const SecrecyParams& params,
                        DispersionMode mode = DispersionMode::exact);

}  // namespace risdet
