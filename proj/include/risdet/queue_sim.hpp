#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "risdet/geometry_channel.hpp"
#include "risdet/snc.hpp"

namespace risdet {

/// Bits the server can drain in one slot.
using ServiceSampler = std::function<double(Rng&)>;

struct QueueSimOptions {
  std::uint64_t warmup_slots = 1000;
  std::uint64_t max_slots = 200'000'000;
};

struct ProbabilityEstimate {
  double p = 0.0;
  double lo = 0.0;  // Wilson 95% interval
  double hi = 0.0;
  double half_width() const { return 0.5 * (hi - lo); }
};

ProbabilityEstimate wilson_interval(std::uint64_t successes, std::uint64_t trials);

/// Empirical sojourn-time law in slots. Bin t counts delay t for
/// t < horizon; the last bin collects delay >= horizon.
struct DelayDistribution {
  std::vector<std::uint64_t> histogram;
  std::uint64_t n_packets = 0;
  std::uint64_t slots_simulated = 0;

  std::uint32_t horizon() const { return static_cast<std::uint32_t>(histogram.size() - 1); }
  /// Pr{T > t}; t must be < horizon.
  ProbabilityEstimate exceed(std::uint32_t t) const;
  /// Pr{t_min < T < t_max}; t_max must be <= horizon.
  ProbabilityEstimate within(std::uint32_t t_min, std::uint32_t t_max) const;
  std::vector<double> cdf() const;
};

/// Discrete-time FCFS fluid queue. In every slot the server first drains
/// sampler() bits, then Poisson(lambda) packets of `pkt_bits` bits join the
/// tail. A packet arriving in slot t and finishing in slot d has delay
/// d - t, so a packet served in the next slot has delay 1. Packets arriving
/// after the warmup are recorded until `n_packets` have been seen; the run
/// then continues until those packets leave (or max_slots is hit).
DelayDistribution simulate_queue(const ArrivalModel& arrival_bits, const ServiceSampler& sampler,
                                 std::uint32_t horizon_slots, std::uint64_t n_packets, Rng& rng,
                                 const QueueSimOptions& options = {});

/// Service drawn from the laws the analytic bound assumes: exponential Eve
/// SNR, user SNR from the chosen density (the `paper` density is sampled in
/// its normalised exponential form). Bits = n * R with probability 1 - eps,
/// else 0.
ServiceSampler analytic_service_sampler(const ServiceModel& model);

/// Service drawn from full channel realizations for one user.
ServiceSampler channel_service_sampler(const Topology& topo, const FadingParams& fading,
                                       const PhaseShiftConfig& theta, std::size_t user, double p_tx,
                                       const SecrecyParams& secrecy);

}  // namespace risdet
