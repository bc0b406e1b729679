#pragma once

#include <optional>
#include <span>
#include <vector>

#include "uresim/rng.hpp"

namespace uresim {

// Per-frame grant allocation instance: each user has a running total of
// bits granted in earlier frames and a request for this frame; `budget` bits
// may be handed out in total. Feasibility requires budget <= sum(requested).
struct AllocationProblem {
  std::vector<double> granted;    // cumulative bits granted so far, per user
  std::vector<double> requested;  // bits requested this frame, per user
  double budget = 0.0;

  std::size_t users() const { return requested.size(); }
  double total_requested() const;
  void validate() const;
};

// How a user's grant sits against its box constraints.
enum class BoundState {
  kInterior,  // 0 < grant < request
  kAtZero,
  kAtRequest,
  kIdle,  // request was zero; user excluded from the program
};

struct KktCertificate {
  std::optional<double> lambda;  // multiplier of the budget constraint;
                                 // absent when no user is interior
  std::vector<double> mu;        // lower-bound multipliers, >= 0
  std::vector<double> omega;     // upper-bound multipliers, >= 0
  std::vector<BoundState> bound_state;
  double stationarity_residual = 0.0;
  double complementarity_residual = 0.0;
};

// Value of the separable quadratic objective the water-filling scheme
// minimizes: the sample variance of the post-grant running totals, written
// as sum_j (x_j - target_j)^2 / (m - 1) with target_j the equalizing grant.
double allocation_objective(const AllocationProblem& problem,
                            std::span<const double> grants);

// The variance-minimizing allocation. Raises the common level of the
// least-granted users until a bucket fills or the next level is reached,
// then repeats; runs in at most 2m stages.
std::vector<double> water_fill(const AllocationProblem& problem);

// Multipliers and active sets certifying (or refuting) optimality of a
// feasible allocation. Residuals are max-norm violations of stationarity and
// complementary slackness; both are ~1e-13 on water_fill outputs.
KktCertificate kkt_certificate(const AllocationProblem& problem,
                               std::span<const double> grants);

// Independent optimality oracle: exhaustive grid search over the feasible
// simplex followed by coordinate-pair transfer refinement. Guarded to
// 6 users or fewer.
std::vector<double> brute_force_oracle(const AllocationProblem& problem,
                                       double grid_step);

enum class BaselineMethod {
  kSmallestFirst,
  kLargestFirst,
  kRandomOrder,
  kTwoStep,
  kMaxMin,
};

// The five comparison allocators. Only kRandomOrder consumes randomness.
std::vector<double> allocate_baseline(BaselineMethod method,
                                      const AllocationProblem& problem,
                                      rng::Engine& rng);

// Unbiased sample variance; requires at least two values.
double sample_variance(std::span<const double> values);

// Jain's fairness index in (0, 1]; all-zero input counts as perfect
// equality and returns 1.
double jain_index(std::span<const double> values);

}  // namespace uresim
