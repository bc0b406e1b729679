#pragma once

#include <cstdint>

namespace uresim {

// Parameters of the randomized persistent retransmission scheme for a single
// resource block. A packet transmits on arrival and then, in each of the next
// delay_budget-1 mini slots, retransmits independently with probability
// retransmit_prob. It is lost if every copy collides with some other
// transmission on the same block.
struct RetransParams {
  double arrival_rate = 0.0;   // packets per mini slot on this block, >= 0
  double retransmit_prob = 0.0;  // in [0, 1]
  int delay_budget = 1;          // window length in mini slots, >= 1

  void validate() const;
};

struct MonteCarloEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  long long trials = 0;
  std::uint64_t seed = 0;
};

// Exact failure probability for delay_budget == 3 (closed form).
double failure_prob_exact_tau3(const RetransParams& params);

// Multiplier of the arrival rate in the first-order (light traffic) failure
// probability; lies in (0, 1].
double light_traffic_coefficient(double retransmit_prob, int delay_budget);

// First-order failure probability, clamped to [0, 1]. Valid for arrival
// rates well below one packet per mini slot; the clamp only matters outside
// that regime.
double failure_prob_light_traffic(const RetransParams& params);

// Light-traffic failure probability when `total_rate` packets per mini slot
// are split uniformly over `blocks` resource blocks. Zero blocks means
// certain loss.
double failure_prob_per_region(double total_rate, double retransmit_prob,
                               int delay_budget, int blocks);

// Simulates independent tagged-packet trials. Deterministic given the seed,
// for any thread count: trials are partitioned into fixed-size chunks whose
// substreams derive from the seed alone.
MonteCarloEstimate failure_prob_monte_carlo(const RetransParams& params,
                                            long long trials,
                                            std::uint64_t seed,
                                            int threads = 1);

}  // namespace uresim
