#include "risdet/queue_sim.hpp"

#include <cmath>
#include <deque>

#include "risdet/errors.hpp"

namespace risdet {

ProbabilityEstimate wilson_interval(std::uint64_t successes, std::uint64_t trials) {
  ProbabilityEstimate e;
  if (trials == 0) {
    e.hi = 1.0;
    return e;
  }
  constexpr double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double denom = 1.0 + z * z / n;
  const double centre = (p + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  e.p = p;
  e.lo = successes == 0 ? 0.0 : std::max(0.0, centre - half);
  e.hi = successes == trials ? 1.0 : std::min(1.0, centre + half);
  return e;
}

ProbabilityEstimate DelayDistribution::exceed(std::uint32_t t) const {
  if (t >= horizon()) throw DomainError("exceed: t beyond the recorded horizon");
  std::uint64_t above = 0;
  for (std::size_t i = t + 1; i < histogram.size(); ++i) above += histogram[i];
  return wilson_interval(above, n_packets);
}

ProbabilityEstimate DelayDistribution::within(std::uint32_t t_min, std::uint32_t t_max) const {
  if (t_max > horizon() || t_min >= t_max) throw DomainError("within: invalid window");
  std::uint64_t inside = 0;
  for (std::size_t i = t_min + 1; i < t_max; ++i) inside += histogram[i];
  return wilson_interval(inside, n_packets);
}

std::vector<double> DelayDistribution::cdf() const {
  std::vector<double> out(histogram.size(), 0.0);
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < histogram.size(); ++i) {
    acc += histogram[i];
    out[i] = n_packets ? static_cast<double>(acc) / static_cast<double>(n_packets) : 0.0;
  }
  return out;
}

DelayDistribution simulate_queue(const ArrivalModel& arrival_bits, const ServiceSampler& sampler,
                                 std::uint32_t horizon_slots, std::uint64_t n_packets, Rng& rng,
                                 const QueueSimOptions& options) {
  if (horizon_slots == 0) throw DomainError("simulate_queue: horizon must be positive");
  if (arrival_bits.lambda_pkts < 0.0 || !(arrival_bits.pkt_bits > 0.0))
    throw DomainError("simulate_queue: invalid arrival model");

  struct Packet {
    std::uint64_t arrival_slot;
    double remaining;
    bool tracked;
  };
  std::deque<Packet> queue;
  DelayDistribution dist;
  dist.histogram.assign(horizon_slots + 1, 0);
  std::poisson_distribution<std::uint64_t> arrivals(arrival_bits.lambda_pkts);

  std::uint64_t admitted = 0;   // tracked packets that joined
  std::uint64_t pending = 0;    // tracked packets still queued
  std::uint64_t slot = 0;
  for (; slot < options.max_slots; ++slot) {
    double budget = sampler(rng);
    while (budget > 0.0 && !queue.empty()) {
      Packet& head = queue.front();
      if (head.remaining > budget) {
        head.remaining -= budget;
        break;
      }
      budget -= head.remaining;
      if (head.tracked) {
        const std::uint64_t delay = slot - head.arrival_slot;
        ++dist.histogram[std::min<std::uint64_t>(delay, horizon_slots)];
        ++dist.n_packets;
        --pending;
      }
      queue.pop_front();
    }
    if (admitted >= n_packets && pending == 0) break;

    const std::uint64_t k = arrival_bits.lambda_pkts > 0.0 ? arrivals(rng) : 0;
    for (std::uint64_t i = 0; i < k; ++i) {
      const bool tracked = slot >= options.warmup_slots && admitted < n_packets;
      if (tracked) {
        ++admitted;
        ++pending;
      }
      queue.push_back({slot, arrival_bits.pkt_bits, tracked});
    }
  }
  dist.slots_simulated = slot;
  return dist;
}

ServiceSampler analytic_service_sampler(const ServiceModel& model) {
  model.validate();
  return [model](Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) < model.secrecy.epsilon_e) return 0.0;
    const double b = model.stats.rho * model.stats.delta_k_sq;
    std::exponential_distribution<double> eve(model.stats.lambda_eve);
    const double g_eve = eve(rng);
    double g_user = 0.0;
    if (model.density == ServiceDensity::paper) {
      std::exponential_distribution<double> user(1.0 / b);
      g_user = user(rng);
    } else {
      std::normal_distribution<double> n(0.0, std::sqrt(0.5 * b));
      const double re = std::sqrt(model.stats.rho * model.stats.upsilon_k) + n(rng);
      const double im = n(rng);
      g_user = re * re + im * im;
    }
    return model.secrecy.blocklength * fbc_secrecy_rate(g_user, g_eve, model.secrecy);
  };
}

ServiceSampler channel_service_sampler(const Topology& topo, const FadingParams& fading,
                                       const PhaseShiftConfig& theta, std::size_t user, double p_tx,
                                       const SecrecyParams& secrecy) {
  secrecy.validate();
  return [=](Rng& rng) {
    const ChannelRealization ch = sample_channels(topo, fading, rng);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double noise = fading.noise_watts();
    const double g_user = snr(composite_gain(ch.h_direct[user], ch.f_user[user], theta, ch.g_ris), p_tx, noise);
    const double g_eve = snr(composite_gain(ch.h_direct_eve, ch.f_eve, theta, ch.g_ris), p_tx, noise);
    if (u(rng) < secrecy.epsilon_e) return 0.0;
    return secrecy.blocklength * fbc_secrecy_rate(g_user, g_eve, secrecy);
  };
}

}  // namespace risdet
