#include "uresim/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "uresim/errors.hpp"

namespace uresim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Grant that would equalize every user's running total this frame if boxes
// did not bind: (sum(granted) + budget) / m - granted_i.
std::vector<double> equal_share_targets(const AllocationProblem& problem) {
  const double mean_level =
      (std::accumulate(problem.granted.begin(), problem.granted.end(), 0.0) +
       problem.budget) /
      static_cast<double>(problem.users());
  std::vector<double> targets(problem.users());
  for (std::size_t i = 0; i < problem.users(); ++i) {
    targets[i] = mean_level - problem.granted[i];
  }
  return targets;
}

double feasible_budget(const AllocationProblem& problem) {
  const double total = problem.total_requested();
  if (problem.budget > total * (1.0 + 1e-12) + 1e-9) {
    throw InfeasibleError("budget exceeds the total requested bits");
  }
  return std::min(problem.budget, total);
}

void check_grants_shape(const AllocationProblem& problem,
                        std::span<const double> grants) {
  if (grants.size() != problem.users()) {
    throw std::invalid_argument("grants length must match the user count");
  }
  for (double g : grants) {
    if (!std::isfinite(g)) {
      throw std::invalid_argument("grants must be finite");
    }
  }
}

std::vector<std::size_t> order_by_request(const AllocationProblem& problem,
                                          bool ascending) {
  std::vector<std::size_t> order(problem.users());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ra = problem.requested[a];
    const double rb = problem.requested[b];
    if (ra != rb) return ascending ? ra < rb : ra > rb;
    return a < b;
  });
  return order;
}

std::vector<double> greedy_in_order(const AllocationProblem& problem,
                                    const std::vector<std::size_t>& order,
                                    double budget) {
  std::vector<double> grants(problem.users(), 0.0);
  double remaining = budget;
  for (std::size_t user : order) {
    if (remaining <= 0.0) break;
    const double g = std::min(problem.requested[user], remaining);
    grants[user] = g;
    remaining -= g;
  }
  return grants;
}

}  // namespace

double AllocationProblem::total_requested() const {
  return std::accumulate(requested.begin(), requested.end(), 0.0);
}

void AllocationProblem::validate() const {
  if (requested.empty() || granted.size() != requested.size()) {
    throw std::invalid_argument(
        "granted and requested must be non-empty and of equal length");
  }
  for (std::size_t i = 0; i < requested.size(); ++i) {
    if (!(std::isfinite(granted[i]) && granted[i] >= 0.0)) {
      throw std::invalid_argument("granted totals must be finite and >= 0");
    }
    if (!(std::isfinite(requested[i]) && requested[i] >= 0.0)) {
      throw std::invalid_argument("requests must be finite and >= 0");
    }
  }
  if (!(std::isfinite(budget) && budget >= 0.0)) {
    throw std::invalid_argument("budget must be finite and >= 0");
  }
}

double allocation_objective(const AllocationProblem& problem,
                            std::span<const double> grants) {
  problem.validate();
  check_grants_shape(problem, grants);
  const auto targets = equal_share_targets(problem);
  const double den = problem.users() > 1
                         ? static_cast<double>(problem.users() - 1)
                         : 1.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < problem.users(); ++i) {
    const double d = grants[i] - targets[i];
    sum += d * d;
  }
  return sum / den;
}

std::vector<double> water_fill(const AllocationProblem& problem) {
  problem.validate();
  const std::size_t m = problem.users();
  std::vector<double> grants(m, 0.0);
  double budget = feasible_budget(problem);
  if (budget <= 0.0) return grants;
  if (budget >= problem.total_requested()) {
    return problem.requested;  // every box binds
  }

  struct Bucket {
    double level;      // granted total plus lifts applied so far
    double remaining;  // unfilled part of the request
    std::size_t user;
  };
  std::vector<Bucket> active;
  active.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (problem.requested[i] > 0.0) {
      active.push_back(Bucket{problem.granted[i], problem.requested[i], i});
    }
  }
  std::sort(active.begin(), active.end(), [](const Bucket& a, const Bucket& b) {
    if (a.level != b.level) return a.level < b.level;
    if (a.remaining != b.remaining) return a.remaining < b.remaining;
    return a.user < b.user;
  });

  const std::size_t max_stages = 4 * m + 8;
  for (std::size_t stage = 0; stage < max_stages; ++stage) {
    if (active.empty() || budget <= 0.0) break;

    const double group_level = active.front().level;
    const double level_tol = 1e-9 * std::max(1.0, std::abs(group_level));
    std::size_t k = 1;
    while (k < active.size() && active[k].level <= group_level + level_tol) {
      ++k;
    }
    double min_remaining = kInf;
    for (std::size_t i = 0; i < k; ++i) {
      min_remaining = std::min(min_remaining, active[i].remaining);
    }
    const double gap =
        k < active.size() ? active[k].level - group_level : kInf;
    const double lift = std::min(min_remaining, gap);

    if (budget <= lift * static_cast<double>(k)) {
      const double share = budget / static_cast<double>(k);
      for (std::size_t i = 0; i < k; ++i) grants[active[i].user] += share;
      budget = 0.0;
      break;
    }

    budget -= lift * static_cast<double>(k);
    const bool reaches_next = gap <= min_remaining;
    for (std::size_t i = 0; i < k; ++i) {
      grants[active[i].user] += lift;
      active[i].remaining -= lift;
      active[i].level = reaches_next ? active[k].level : group_level + lift;
    }
    // Retire filled buckets with their grant pinned to the exact request.
    std::size_t w = 0;
    for (std::size_t i = 0; i < active.size(); ++i) {
      const Bucket& bucket = active[i];
      if (i < k &&
          bucket.remaining <=
              1e-12 * std::max(1.0, problem.requested[bucket.user])) {
        grants[bucket.user] = problem.requested[bucket.user];
      } else {
        active[w++] = bucket;
      }
    }
    active.resize(w);
  }
  if (budget > 1e-6 * std::max(1.0, problem.budget)) {
    throw std::logic_error("water_fill failed to place the whole budget");
  }
  return grants;
}

KktCertificate kkt_certificate(const AllocationProblem& problem,
                               std::span<const double> grants) {
  problem.validate();
  check_grants_shape(problem, grants);
  const std::size_t m = problem.users();

  KktCertificate cert;
  cert.mu.assign(m, 0.0);
  cert.omega.assign(m, 0.0);
  cert.bound_state.assign(m, BoundState::kIdle);

  for (std::size_t i = 0; i < m; ++i) {
    const double request = problem.requested[i];
    if (request <= 0.0) continue;
    const double tol = 1e-9 * std::max(1.0, request);
    if (grants[i] >= request - tol) {
      cert.bound_state[i] = BoundState::kAtRequest;
    } else if (grants[i] <= tol) {
      cert.bound_state[i] = BoundState::kAtZero;
    } else {
      cert.bound_state[i] = BoundState::kInterior;
    }
  }
  if (m == 1) return cert;  // the grant is forced; nothing to certify

  const auto targets = equal_share_targets(problem);
  const double den = static_cast<double>(m - 1);

  std::size_t interior = 0;
  double interior_target_sum = 0.0;
  double pinned_request_sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    switch (cert.bound_state[i]) {
      case BoundState::kInterior:
        ++interior;
        interior_target_sum += targets[i];
        break;
      case BoundState::kAtRequest:
        pinned_request_sum += problem.requested[i];
        break;
      default:
        break;
    }
  }

  double lambda_eval = 0.0;
  if (interior > 0) {
    lambda_eval = (interior_target_sum + pinned_request_sum - problem.budget) /
                  (den * static_cast<double>(interior) / 2.0);
    cert.lambda = lambda_eval;
  } else {
    // Boundary-only point: any multiplier inside the sign-feasibility
    // interval certifies; pick its midpoint and report no unique value.
    double lo = -kInf;
    double hi = kInf;
    for (std::size_t i = 0; i < m; ++i) {
      if (cert.bound_state[i] == BoundState::kAtZero) {
        lo = std::max(lo, 2.0 * targets[i] / den);
      } else if (cert.bound_state[i] == BoundState::kAtRequest) {
        hi = std::min(hi, 2.0 * (targets[i] - problem.requested[i]) / den);
      }
    }
    if (lo > -kInf && hi < kInf) {
      lambda_eval = 0.5 * (lo + hi);
    } else if (lo > -kInf) {
      lambda_eval = lo;
    } else if (hi < kInf) {
      lambda_eval = hi;
    }
  }

  for (std::size_t i = 0; i < m; ++i) {
    if (cert.bound_state[i] == BoundState::kAtZero) {
      cert.mu[i] = std::max(0.0, lambda_eval - 2.0 * targets[i] / den);
    } else if (cert.bound_state[i] == BoundState::kAtRequest) {
      cert.omega[i] = std::max(
          0.0, 2.0 * (targets[i] - problem.requested[i]) / den - lambda_eval);
    }
  }

  double stationarity = 0.0;
  double complementarity = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (cert.bound_state[i] == BoundState::kIdle) continue;
    const double gradient = 2.0 * (grants[i] - targets[i]) / den;
    stationarity = std::max(
        stationarity,
        std::abs(gradient + lambda_eval - cert.mu[i] + cert.omega[i]));
    complementarity = std::max(complementarity,
                               std::abs(cert.mu[i] * grants[i]));
    complementarity = std::max(
        complementarity,
        std::abs(cert.omega[i] * (problem.requested[i] - grants[i])));
  }
  cert.stationarity_residual = stationarity;
  cert.complementarity_residual = complementarity;
  return cert;
}

namespace {

// Squared-distance objective (constant factor dropped) with incremental
// evaluation support for the refinement loop.
double squared_distance(std::span<const double> grants,
                        const std::vector<double>& targets) {
  double sum = 0.0;
  for (std::size_t i = 0; i < grants.size(); ++i) {
    const double d = grants[i] - targets[i];
    sum += d * d;
  }
  return sum;
}

void enumerate_grid(const AllocationProblem& problem,
                    const std::vector<double>& targets, double step,
                    std::size_t coord, double remaining,
                    std::vector<double>& point, double& best_value,
                    std::vector<double>& best_point) {
  const std::size_t m = problem.users();
  if (coord + 1 == m) {
    if (remaining <= problem.requested[coord] + 1e-9) {
      point[coord] = std::min(remaining, problem.requested[coord]);
      const double value = squared_distance(point, targets);
      if (value < best_value) {
        best_value = value;
        best_point = point;
      }
    }
    return;
  }
  double tail_capacity = 0.0;
  for (std::size_t j = coord + 1; j < m; ++j) {
    tail_capacity += problem.requested[j];
  }
  const double hi = std::min(problem.requested[coord], remaining);
  const auto last = static_cast<long long>(std::ceil(hi / step));
  for (long long k = 0; k <= last; ++k) {
    const double value = std::min(static_cast<double>(k) * step, hi);
    if (remaining - value > tail_capacity + 1e-9) continue;
    point[coord] = value;
    enumerate_grid(problem, targets, step, coord + 1, remaining - value, point,
                   best_value, best_point);
  }
}

}  // namespace

std::vector<double> brute_force_oracle(const AllocationProblem& problem,
                                       double grid_step) {
  problem.validate();
  if (problem.users() > 6) {
    throw std::invalid_argument("brute_force_oracle is limited to 6 users");
  }
  if (!(grid_step > 0.0)) {
    throw std::invalid_argument("grid_step must be > 0");
  }
  const double budget = feasible_budget(problem);
  const auto targets = equal_share_targets(problem);
  const std::size_t m = problem.users();

  double combos = 1.0;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    combos *= std::min(problem.requested[i], budget) / grid_step + 1.0;
  }
  if (combos > 5e7) {
    throw std::invalid_argument("grid_step is too fine for this instance");
  }

  std::vector<std::size_t> ids(m);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  std::vector<double> best = greedy_in_order(problem, ids, budget);
  double best_value = squared_distance(best, targets);
  std::vector<double> point(m, 0.0);
  enumerate_grid(problem, targets, grid_step, 0, budget, point, best_value,
                 best);

  // Coordinate-pair transfers with a shrinking step polish the grid point.
  double delta = grid_step;
  while (delta > 1e-9) {
    bool improved = true;
    int sweeps = 0;
    while (improved && sweeps++ < 200) {
      improved = false;
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
          if (i == j) continue;
          const double amount =
              std::min({delta, best[i], problem.requested[j] - best[j]});
          if (amount <= 1e-15) continue;
          const double di = best[i] - targets[i];
          const double dj = best[j] - targets[j];
          const double ni = di - amount;
          const double nj = dj + amount;
          const double change = ni * ni + nj * nj - di * di - dj * dj;
          if (change < 0.0) {
            best[i] -= amount;
            best[j] += amount;
            best_value += change;
            improved = true;
          }
        }
      }
    }
    delta *= 0.5;
  }
  return best;
}

std::vector<double> allocate_baseline(BaselineMethod method,
                                      const AllocationProblem& problem,
                                      rng::Engine& rng) {
  problem.validate();
  const double budget = feasible_budget(problem);
  const std::size_t m = problem.users();

  switch (method) {
    case BaselineMethod::kSmallestFirst:
      return greedy_in_order(problem, order_by_request(problem, true), budget);
    case BaselineMethod::kLargestFirst:
      return greedy_in_order(problem, order_by_request(problem, false), budget);
    case BaselineMethod::kRandomOrder: {
      std::vector<std::size_t> order(m);
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t i = m; i > 1; --i) {  // Fisher-Yates
        const std::size_t j =
            static_cast<std::size_t>(rng.uniform_below(i));
        std::swap(order[i - 1], order[j]);
      }
      return greedy_in_order(problem, order, budget);
    }
    case BaselineMethod::kTwoStep: {
      const double average = budget / static_cast<double>(m);
      std::vector<double> grants(m, 0.0);
      double leftover = budget;
      std::vector<double> residual(m, 0.0);
      for (std::size_t i = 0; i < m; ++i) {
        grants[i] = std::min(problem.requested[i], average);
        residual[i] = problem.requested[i] - grants[i];
        leftover -= grants[i];
      }
      std::vector<std::size_t> order(m);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) {
                  if (residual[a] != residual[b]) {
                    return residual[a] > residual[b];
                  }
                  return a < b;
                });
      for (std::size_t user : order) {
        if (leftover <= 0.0) break;
        const double g = std::min(residual[user], leftover);
        grants[user] += g;
        leftover -= g;
      }
      return grants;
    }
    case BaselineMethod::kMaxMin: {
      std::vector<double> grants(m, 0.0);
      std::vector<double> residual = problem.requested;
      double leftover = budget;
      for (std::size_t step = 1; step <= m; ++step) {
        if (leftover <= 0.0) break;
        const double average =
            leftover / static_cast<double>(m - step + 1);
        double handed_out = 0.0;
        bool any_residual = false;
        for (std::size_t i = 0; i < m; ++i) {
          const double g = std::min(average, residual[i]);
          grants[i] += g;
          residual[i] -= g;
          handed_out += g;
          any_residual = any_residual || residual[i] > 0.0;
        }
        leftover -= handed_out;
        if (!any_residual) break;
      }
      return grants;
    }
  }
  throw std::invalid_argument("unknown baseline method");
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) {
    throw std::invalid_argument("sample_variance needs at least two values");
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) {
    const double d = v - mean;
    sum += d * d;
  }
  return sum / static_cast<double>(values.size() - 1);
}

double jain_index(std::span<const double> values) {
  if (values.empty()) {
    throw std::invalid_argument("jain_index needs at least one value");
  }
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double v : values) {
    if (!(v >= 0.0)) {
      throw std::invalid_argument("jain_index values must be >= 0");
    }
    sum += v;
    sum_sq += v * v;
  }
  if (sum_sq == 0.0) return 1.0;  // all zero: perfectly equal
  return sum * sum / (static_cast<double>(values.size()) * sum_sq);
}

}  // namespace uresim
