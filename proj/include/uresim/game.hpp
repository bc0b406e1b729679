#pragma once

#include <compare>
#include <optional>
#include <vector>

namespace uresim {

// Parameters of the two-player region-sizing game. One agent sizes the
// common (grant-free) region, the other the grant-based region, out of
// total_blocks resource blocks.
struct GameParams {
  double arrival_rate = 6.5e-4;  // URLLC packets per mini slot, whole band
  double retransmit_prob = 0.3;
  int delay_budget = 8;          // mini slots
  int total_blocks = 60;
  double loss_bound = 1e-5;      // URLLC loss probability target, > 0
  double block_cost = 0.8;       // in (0, 1)
  double common_efficiency = 0.5;  // in (0, 1); rate factor in the common region
  double bits_per_block = 3.2e4;   // per grant-based block per frame, > 0
  double requested_bits = 1.2e6;   // total eMBB request for the frame, >= 0

  void validate() const;
  // True when loss_bound >= 1, which makes zero common blocks acceptable.
  bool degenerate_loss_bound() const { return loss_bound >= 1.0; }
};

struct ActionProfile {
  int common_blocks = 0;      // n1
  int grant_based_blocks = 0; // n2
  auto operator<=>(const ActionProfile&) const = default;
};

enum class GameCase {
  kInfeasibleUrllc,  // no common-region size meets the loss bound
  kCase1,
  kCase2,
  kCase3,
};

struct EquilibriumResult {
  GameCase case_id = GameCase::kCase1;
  std::vector<ActionProfile> equilibria;        // in characterization order
  std::vector<ActionProfile> socially_optimal;  // subset of equilibria
  std::vector<double> social_payoffs;           // aligned with equilibria
  bool degenerate_loss_bound = false;
};

const char* game_case_name(GameCase c);

// Bits the eMBB users can move in one frame under profile (n1, n2):
// non-overlapped grant-based blocks at full rate plus non-overlapped common
// blocks at the reduced rate.
double throughput(int common_blocks, int grant_based_blocks,
                  const GameParams& params);

// Smallest grant-based action that satisfies the total request given n1,
// or total_blocks when no action does.
int min_grant_blocks(int common_blocks, const GameParams& params);

// Smallest common-region size meeting the loss bound, if any.
std::optional<int> min_common_blocks(const GameParams& params);

double payoff_urllc(ActionProfile profile, const GameParams& params);
double payoff_embb(ActionProfile profile, const GameParams& params);
double social_payoff(ActionProfile profile, const GameParams& params);

// All pure Nash equilibria by exhaustive best-response scan. Ties count as
// best responses. Guarded to total_blocks <= 200.
std::vector<ActionProfile> enumerate_pure_nash(const GameParams& params);

// Equilibria via the closed-form case analysis.
EquilibriumResult solve_equilibrium(const GameParams& params);

}  // namespace uresim
