#include "uresim/game.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "uresim/reliability.hpp"

namespace uresim {

namespace {

// Payoff ties below this are treated as exact; genuine payoff gaps are
// multiples of block_cost/N or (1-block_cost)/N and sit far above it.
constexpr double kTieTolerance = 1e-12;

void check_action(int value, int total_blocks, const char* name) {
  if (value < 0 || value > total_blocks) {
    throw std::invalid_argument(std::string(name) +
                                " must be in [0, total_blocks]");
  }
}

// Cached per-parameter tables so the exhaustive scan is O(N^2).
struct GameTables {
  std::vector<double> region_failure;  // loss probability per common size
  std::vector<int> min_grant;          // min_grant_blocks per common size

  explicit GameTables(const GameParams& p) {
    const int n = p.total_blocks;
    region_failure.resize(static_cast<std::size_t>(n) + 1);
    min_grant.resize(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) {
      region_failure[static_cast<std::size_t>(k)] = failure_prob_per_region(
          p.arrival_rate, p.retransmit_prob, p.delay_budget, k);
      min_grant[static_cast<std::size_t>(k)] = min_grant_blocks(k, p);
    }
  }
};

double payoff_urllc_impl(int n1, int n2, const GameParams& p,
                         double region_failure_at_overlap_free) {
  const double n = p.total_blocks;
  const double meets_bound =
      region_failure_at_overlap_free <= p.loss_bound ? 1.0 : 0.0;
  const double fits = (n1 + n2 <= p.total_blocks) ? 1.0 : 0.0;
  return meets_bound * fits - (n1 / n) * p.block_cost;
}

double payoff_embb_impl(int n1, int n2, const GameParams& p, int min_grant) {
  const double n = p.total_blocks;
  const double fits = (n1 + n2 <= p.total_blocks) ? 1.0 : 0.0;
  const double reward = (n2 > min_grant ? min_grant : n2) / n;
  return reward * fits - (n2 / n) * p.block_cost;
}

}  // namespace

void GameParams::validate() const {
  if (!(arrival_rate >= 0.0)) {
    throw std::invalid_argument("arrival_rate must be >= 0");
  }
  if (!(retransmit_prob >= 0.0 && retransmit_prob <= 1.0)) {
    throw std::invalid_argument("retransmit_prob must be in [0, 1]");
  }
  if (delay_budget < 1) {
    throw std::invalid_argument("delay_budget must be >= 1");
  }
  if (total_blocks < 1) {
    throw std::invalid_argument("total_blocks must be >= 1");
  }
  if (!(loss_bound > 0.0)) {
    throw std::invalid_argument("loss_bound must be > 0");
  }
  if (!(block_cost > 0.0 && block_cost < 1.0)) {
    throw std::invalid_argument("block_cost must be in (0, 1)");
  }
  if (!(common_efficiency > 0.0 && common_efficiency < 1.0)) {
    throw std::invalid_argument("common_efficiency must be in (0, 1)");
  }
  if (!(bits_per_block > 0.0)) {
    throw std::invalid_argument("bits_per_block must be > 0");
  }
  if (!(requested_bits >= 0.0)) {
    throw std::invalid_argument("requested_bits must be >= 0");
  }
}

const char* game_case_name(GameCase c) {
  switch (c) {
    case GameCase::kInfeasibleUrllc: return "INFEASIBLE_URLLC";
    case GameCase::kCase1: return "CASE1";
    case GameCase::kCase2: return "CASE2";
    case GameCase::kCase3: return "CASE3";
  }
  return "UNKNOWN";
}

double throughput(int common_blocks, int grant_based_blocks,
                  const GameParams& params) {
  params.validate();
  check_action(common_blocks, params.total_blocks, "common_blocks");
  check_action(grant_based_blocks, params.total_blocks, "grant_based_blocks");
  const int n = params.total_blocks;
  const int grant_only = std::min(grant_based_blocks, n - common_blocks);
  const int common_only = std::min(common_blocks, n - grant_based_blocks);
  return (grant_only + params.common_efficiency * common_only) *
         params.bits_per_block;
}

int min_grant_blocks(int common_blocks, const GameParams& params) {
  params.validate();
  check_action(common_blocks, params.total_blocks, "common_blocks");
  for (int n2 = 0; n2 <= params.total_blocks; ++n2) {
    if (throughput(common_blocks, n2, params) >= params.requested_bits) {
      return n2;
    }
  }
  return params.total_blocks;
}

std::optional<int> min_common_blocks(const GameParams& params) {
  params.validate();
  for (int k = 0; k <= params.total_blocks; ++k) {
    const double loss = failure_prob_per_region(
        params.arrival_rate, params.retransmit_prob, params.delay_budget, k);
    if (loss <= params.loss_bound) return k;
  }
  return std::nullopt;
}

double payoff_urllc(ActionProfile profile, const GameParams& params) {
  params.validate();
  check_action(profile.common_blocks, params.total_blocks, "common_blocks");
  check_action(profile.grant_based_blocks, params.total_blocks,
               "grant_based_blocks");
  const int overlap_free =
      std::min(profile.common_blocks,
               params.total_blocks - profile.grant_based_blocks);
  const double loss = failure_prob_per_region(params.arrival_rate,
                                              params.retransmit_prob,
                                              params.delay_budget, overlap_free);
  return payoff_urllc_impl(profile.common_blocks, profile.grant_based_blocks,
                           params, loss);
}

double payoff_embb(ActionProfile profile, const GameParams& params) {
  params.validate();
  check_action(profile.common_blocks, params.total_blocks, "common_blocks");
  check_action(profile.grant_based_blocks, params.total_blocks,
               "grant_based_blocks");
  return payoff_embb_impl(profile.common_blocks, profile.grant_based_blocks,
                          params,
                          min_grant_blocks(profile.common_blocks, params));
}

double social_payoff(ActionProfile profile, const GameParams& params) {
  return payoff_urllc(profile, params) + payoff_embb(profile, params);
}

std::vector<ActionProfile> enumerate_pure_nash(const GameParams& params) {
  params.validate();
  if (params.total_blocks > 200) {
    throw std::invalid_argument(
        "enumerate_pure_nash is limited to total_blocks <= 200");
  }
  const int n = params.total_blocks;
  const GameTables tables(params);
  const auto size = static_cast<std::size_t>(n) + 1;

  std::vector<std::vector<double>> urllc(size, std::vector<double>(size));
  std::vector<std::vector<double>> embb(size, std::vector<double>(size));
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const int overlap_free = std::min(i, n - j);
      urllc[i][j] = payoff_urllc_impl(
          i, j, params,
          tables.region_failure[static_cast<std::size_t>(overlap_free)]);
      embb[i][j] = payoff_embb_impl(
          i, j, params, tables.min_grant[static_cast<std::size_t>(i)]);
    }
  }

  std::vector<double> best_vs_grant(size, -1e300);  // max over n1, per n2
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      best_vs_grant[j] = std::max(best_vs_grant[j], urllc[i][j]);
    }
  }
  std::vector<double> best_vs_common(size, -1e300);  // max over n2, per n1
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      best_vs_common[i] = std::max(best_vs_common[i], embb[i][j]);
    }
  }

  std::vector<ActionProfile> result;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      if (urllc[i][j] >= best_vs_grant[j] - kTieTolerance &&
          embb[i][j] >= best_vs_common[i] - kTieTolerance) {
        result.push_back(ActionProfile{i, j});
      }
    }
  }
  return result;
}

EquilibriumResult solve_equilibrium(const GameParams& params) {
  params.validate();
  EquilibriumResult result;
  result.degenerate_loss_bound = params.degenerate_loss_bound();

  const int n = params.total_blocks;
  const auto feasible_common = min_common_blocks(params);
  const int grant_floor_alone = min_grant_blocks(0, params);

  if (!feasible_common) {
    result.case_id = GameCase::kInfeasibleUrllc;
    result.equilibria = {ActionProfile{0, grant_floor_alone}};
    result.socially_optimal = result.equilibria;
  } else {
    const int common_floor = *feasible_common;
    const int remaining = n - common_floor;
    const int grant_floor_shared = min_grant_blocks(common_floor, params);

    if (grant_floor_alone <= remaining) {
      result.case_id = GameCase::kCase1;
      result.equilibria = {ActionProfile{common_floor, grant_floor_shared}};
      result.socially_optimal = result.equilibria;
    } else if (grant_floor_shared <= remaining) {
      result.case_id = GameCase::kCase2;
      result.equilibria = {ActionProfile{common_floor, grant_floor_shared},
                           ActionProfile{0, grant_floor_alone}};
      if (common_floor < n || grant_floor_alone - grant_floor_shared < n) {
        result.socially_optimal = {result.equilibria[0]};
      } else {
        result.socially_optimal = result.equilibria;
      }
    } else {
      result.case_id = GameCase::kCase3;
      result.equilibria = {ActionProfile{common_floor, remaining},
                           ActionProfile{0, grant_floor_alone}};
      if (common_floor < n || grant_floor_alone < n) {
        result.socially_optimal = {result.equilibria[0]};
      } else {
        result.socially_optimal = result.equilibria;
      }
    }
  }

  result.social_payoffs.reserve(result.equilibria.size());
  for (const auto& profile : result.equilibria) {
    result.social_payoffs.push_back(social_payoff(profile, params));
  }
  return result;
}

}  // namespace uresim
