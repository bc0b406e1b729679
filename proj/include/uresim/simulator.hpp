#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "uresim/allocator.hpp"
#include "uresim/game.hpp"
#include "uresim/rng.hpp"

namespace uresim {

enum class SplitStrategy {
  kSocialOpt,    // socially optimal equilibrium of the sizing game
  kNonOptNash,   // the all-grant-based equilibrium candidate (0, n2*(0))
  kN1StarPlus1,  // one block more than the URLLC floor needs
  kNMinus1One,   // nearly the whole band common
  kRandom,       // fresh uniform feasible profile every frame
};

enum class AllocatorKind {
  kWaterFill,
  kSmallestFirst,
  kLargestFirst,
  kRandomOrder,
  kTwoStep,
  kMaxMin,
};

enum class RequestMode {
  kStatic,    // size the game once with a fixed total request
  kPerFrame,  // re-solve the game each frame with the live total request
};

const char* split_strategy_name(SplitStrategy s);
const char* allocator_kind_name(AllocatorKind a);
const char* request_mode_name(RequestMode m);

struct SimConfig {
  // game.requested_bits <= 0 means the static default of
  // embb_users * embb_arrival_max / 2.
  GameParams game = GameParams{.requested_bits = 0.0};
  double buffer_bits = 3.8e5;   // per-user eMBB buffer capacity
  int embb_users = 8;
  int slots_per_frame = 10;
  int minislots_per_slot = 0;   // 0 = follow game.delay_budget
  double embb_arrival_max = 3e5;  // per-frame arrivals uniform on 0..max
  long long frames = 100000;
  AllocatorKind allocator = AllocatorKind::kWaterFill;
  SplitStrategy split_strategy = SplitStrategy::kSocialOpt;
  RequestMode request_mode = RequestMode::kStatic;
  std::uint64_t seed = 1;

  int effective_minislots_per_slot() const {
    return minislots_per_slot > 0 ? minislots_per_slot : game.delay_budget;
  }
  double effective_request_bits() const {
    return game.requested_bits > 0.0
               ? game.requested_bits
               : embb_users * embb_arrival_max / 2.0;
  }
  void validate() const;
};

struct UrllcPacketRecord {
  long long arrival_minislot = 0;
  int block = -1;               // -1 when no common block existed
  std::vector<long long> transmit_minislots;
  bool lost = false;
};

struct EmbbUserState {
  double buffer_bits = 0.0;
  double granted_total = 0.0;
  double arrived_bits = 0.0;
  double lost_bits = 0.0;
};

struct FrameEvents {
  long long frame = 0;
  ActionProfile profile;
  double grant_budget = 0.0;
  double requested_bits = 0.0;
  double granted_bits = 0.0;
  double embb_arrived_bits = 0.0;
  double embb_lost_bits = 0.0;
  long long urllc_arrived = 0;
  long long urllc_resolved = 0;
  long long urllc_lost = 0;
};

struct MetricsReport {
  std::string split_strategy;
  std::string allocator;
  std::uint64_t seed = 0;
  long long frames = 0;
  double mean_common_blocks = 0.0;
  double mean_grant_based_blocks = 0.0;
  long long urllc_arrived = 0;
  long long urllc_lost = 0;
  double urllc_loss_prob = 0.0;
  double embb_arrived_bits = 0.0;
  double embb_lost_bits = 0.0;
  double embb_loss_prob = 0.0;
  double sample_variance = 0.0;  // of final per-user granted totals
  double jain_index = 1.0;
  double social_payoff = 0.0;    // per-frame average
};

// Resolves the profile a split strategy plays. Strategies other than the
// random one are static; the random one must be redrawn per frame.
ActionProfile choose_split(SplitStrategy strategy, const GameParams& params,
                           rng::Engine& rng);

// Frame-by-frame system simulation: eMBB arrival/request/grant cycle plus
// URLLC mini-slot contention in the common region.
class Simulation {
 public:
  explicit Simulation(const SimConfig& config);

  FrameEvents step_frame();
  // Resolves packets whose retransmission window extends past the last
  // frame; call once after the final step_frame.
  void flush_urllc();
  MetricsReport report() const;

  const std::vector<EmbbUserState>& users() const { return users_; }
  long long frames_done() const { return frames_done_; }

  // Test/trace hook, invoked once per resolved URLLC packet.
  std::function<void(const UrllcPacketRecord&)> urllc_sink;

 private:
  struct LivePacket {
    long long arrival = 0;
    int block = 0;
    bool delivered = false;
    std::vector<long long> transmit_minislots;  // only kept when sinked
  };

  void run_minislot(long long t, bool accept_arrivals, int common_blocks);
  void resolve_due(long long t);
  ActionProfile frame_profile();

  SimConfig config_;
  GameParams static_game_;          // request fixed at the static default
  ActionProfile static_profile_{};  // profile for non-random strategies
  double static_social_payoff_ = 0.0;

  std::vector<EmbbUserState> users_;
  rng::Engine embb_arrivals_;
  rng::Engine urllc_arrivals_;
  rng::Engine retransmit_coins_;
  rng::Engine random_profile_;
  rng::Engine random_order_;

  std::vector<LivePacket> live_;
  std::vector<int> block_hits_;        // scratch, one slot per resource block
  std::vector<std::size_t> transmitters_;  // scratch

  long long frames_done_ = 0;
  long long next_minislot_ = 0;
  long long urllc_arrived_ = 0;
  long long urllc_lost_ = 0;
  double social_payoff_sum_ = 0.0;
  double profile_n1_sum_ = 0.0;
  double profile_n2_sum_ = 0.0;
  ActionProfile current_profile_{};
};

MetricsReport run_simulation(const SimConfig& config);

// Same, emitting one line-delimited JSON record per frame to `trace`.
MetricsReport run_simulation_traced(const SimConfig& config,
                                    std::ostream& trace);

}  // namespace uresim
