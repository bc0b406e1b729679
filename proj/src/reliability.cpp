#include "uresim/reliability.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>
#include <vector>

#include "uresim/rng.hpp"

namespace uresim {

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

void check_prob(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument(std::string(name) + " must be in [0, 1]");
  }
}

void check_rate(double r, const char* name) {
  if (!(r >= 0.0)) {
    throw std::invalid_argument(std::string(name) + " must be >= 0");
  }
}

}  // namespace

void RetransParams::validate() const {
  check_rate(arrival_rate, "arrival_rate");
  check_prob(retransmit_prob, "retransmit_prob");
  if (delay_budget < 1) {
    throw std::invalid_argument("delay_budget must be >= 1");
  }
}

double failure_prob_exact_tau3(const RetransParams& params) {
  params.validate();
  if (params.delay_budget != 3) {
    throw std::invalid_argument(
        "failure_prob_exact_tau3 requires delay_budget == 3");
  }
  const double rate = params.arrival_rate;
  const double p = params.retransmit_prob;
  const double q = 1.0 - p;
  const double value = 1.0 - (1.0 + 2.0 * p) * std::exp(-3.0 * rate + 2.0 * q * rate)
      + p * (1.0 + p) * std::exp(-4.0 * rate + q * rate + q * q * rate)
      + p * std::exp(-5.0 * rate + 3.0 * q * rate)
      - p * p * std::exp(-5.0 * rate + q * rate + q * q * rate);
  return clamp01(value);
}

double light_traffic_coefficient(double retransmit_prob, int delay_budget) {
  check_prob(retransmit_prob, "retransmit_prob");
  if (delay_budget < 1) {
    throw std::invalid_argument("delay_budget must be >= 1");
  }
  const double p = retransmit_prob;
  const double survive = 1.0 - p + p * p;  // per-slot chance a collided
                                           // interferer stays unresolved
  // Interferers arriving s slots before the tagged packet contribute
  // p * survive^(tau-s-1) * (1-p)^s; one arriving alongside it contributes
  // survive^(tau-1).
  double sum = 0.0;
  double survive_pow = 1.0;  // survive^(tau-s-1), built from s = tau-1 down
  std::vector<double> other(delay_budget);
  other[0] = 1.0;
  for (int s = 1; s < delay_budget; ++s) other[s] = other[s - 1] * (1.0 - p);
  for (int s = delay_budget - 1; s >= 1; --s) {
    sum += p * survive_pow * other[s];
    survive_pow *= survive;
  }
  return sum + survive_pow;
}

double failure_prob_light_traffic(const RetransParams& params) {
  params.validate();
  const double coeff =
      light_traffic_coefficient(params.retransmit_prob, params.delay_budget);
  return clamp01(coeff * params.arrival_rate);
}

double failure_prob_per_region(double total_rate, double retransmit_prob,
                               int delay_budget, int blocks) {
  check_rate(total_rate, "total_rate");
  if (blocks < 0) {
    throw std::invalid_argument("blocks must be >= 0");
  }
  if (blocks == 0) return 1.0;
  const double coeff = light_traffic_coefficient(retransmit_prob, delay_budget);
  return clamp01(coeff * total_rate / static_cast<double>(blocks));
}

namespace {

constexpr long long kMonteCarloChunk = 1 << 16;

// One tagged-packet trial. Arrival counts are drawn for every mini slot that
// can interact with the tagged packet's window; the tagged packet fails iff
// each slot in which it transmits carries at least one other transmission.
bool trial_fails(rng::Engine& eng, double rate, double p, int tau) {
  const int width = 2 * tau - 1;
  long long counts[64];
  long long total = 0;
  for (int idx = 0; idx < width; ++idx) {
    counts[idx] = eng.poisson(rate);
    total += counts[idx];
  }
  if (total == 0) return false;  // clean slot 0
  for (int slot = 0; slot < tau; ++slot) {
    const bool transmits = (slot == 0) || eng.bernoulli(p);
    if (!transmits) continue;
    if (counts[slot + tau - 1] >= 1) continue;  // fresh arrival collides
    bool busy = false;
    for (int j = slot - (tau - 1); j < slot && !busy; ++j) {
      if (j < -(tau - 1)) continue;
      const long long interferers = counts[j + tau - 1];
      for (long long n = 0; n < interferers; ++n) {
        if (eng.bernoulli(p)) {
          busy = true;
          break;
        }
      }
    }
    if (!busy) return false;
  }
  return true;
}

long long run_chunk(std::uint64_t seed, long long chunk_index,
                    long long chunk_trials, const RetransParams& params) {
  rng::Engine eng(rng::mix(seed, static_cast<std::uint64_t>(chunk_index)));
  long long failures = 0;
  for (long long t = 0; t < chunk_trials; ++t) {
    failures += trial_fails(eng, params.arrival_rate, params.retransmit_prob,
                            params.delay_budget) ? 1 : 0;
  }
  return failures;
}

}  // namespace

MonteCarloEstimate failure_prob_monte_carlo(const RetransParams& params,
                                            long long trials,
                                            std::uint64_t seed, int threads) {
  params.validate();
  if (trials < 1) {
    throw std::invalid_argument("trials must be >= 1");
  }
  if (params.delay_budget > 32) {
    throw std::invalid_argument("delay_budget above 32 is not supported");
  }
  const long long chunks = (trials + kMonteCarloChunk - 1) / kMonteCarloChunk;
  std::vector<long long> chunk_failures(static_cast<std::size_t>(chunks), 0);

  const int workers = static_cast<int>(
      std::max<long long>(1, std::min<long long>(threads, chunks)));
  if (workers == 1) {
    for (long long c = 0; c < chunks; ++c) {
      const long long n =
          std::min<long long>(kMonteCarloChunk, trials - c * kMonteCarloChunk);
      chunk_failures[static_cast<std::size_t>(c)] = run_chunk(seed, c, n, params);
    }
  } else {
    std::atomic<long long> next{0};
    auto work = [&] {
      for (;;) {
        const long long c = next.fetch_add(1);
        if (c >= chunks) break;
        const long long n = std::min<long long>(kMonteCarloChunk,
                                                trials - c * kMonteCarloChunk);
        chunk_failures[static_cast<std::size_t>(c)] =
            run_chunk(seed, c, n, params);
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  long long failures = 0;
  for (long long f : chunk_failures) failures += f;

  MonteCarloEstimate est;
  est.trials = trials;
  est.seed = seed;
  est.estimate = static_cast<double>(failures) / static_cast<double>(trials);
  est.std_error = std::sqrt(est.estimate * (1.0 - est.estimate) /
                            static_cast<double>(trials));
  return est;
}

}  // namespace uresim
