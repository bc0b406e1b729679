#include "uresim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "text_format.hpp"

namespace uresim {

const char* split_strategy_name(SplitStrategy s) {
  switch (s) {
    case SplitStrategy::kSocialOpt: return "social_opt";
    case SplitStrategy::kNonOptNash: return "nonopt_nash";
    case SplitStrategy::kN1StarPlus1: return "n1star_plus1";
    case SplitStrategy::kNMinus1One: return "nminus1_1";
    case SplitStrategy::kRandom: return "random";
  }
  return "unknown";
}

const char* allocator_kind_name(AllocatorKind a) {
  switch (a) {
    case AllocatorKind::kWaterFill: return "water_fill";
    case AllocatorKind::kSmallestFirst: return "smallest_first";
    case AllocatorKind::kLargestFirst: return "largest_first";
    case AllocatorKind::kRandomOrder: return "random_order";
    case AllocatorKind::kTwoStep: return "two_step";
    case AllocatorKind::kMaxMin: return "max_min";
  }
  return "unknown";
}

const char* request_mode_name(RequestMode m) {
  switch (m) {
    case RequestMode::kStatic: return "static";
    case RequestMode::kPerFrame: return "per_frame";
  }
  return "unknown";
}

void SimConfig::validate() const {
  GameParams effective = game;
  effective.requested_bits = effective_request_bits();
  effective.validate();
  if (embb_users < 1) {
    throw std::invalid_argument("embb_users must be >= 1");
  }
  if (slots_per_frame < 1) {
    throw std::invalid_argument("slots_per_frame must be >= 1");
  }
  if (minislots_per_slot < 0) {
    throw std::invalid_argument("minislots_per_slot must be >= 0");
  }
  if (!(buffer_bits >= 0.0)) {
    throw std::invalid_argument("buffer_bits must be >= 0");
  }
  if (!(embb_arrival_max >= 0.0)) {
    throw std::invalid_argument("embb_arrival_max must be >= 0");
  }
  if (frames < 0) {
    throw std::invalid_argument("frames must be >= 0");
  }
}

ActionProfile choose_split(SplitStrategy strategy, const GameParams& params,
                           rng::Engine& rng) {
  params.validate();
  const int n = params.total_blocks;
  switch (strategy) {
    case SplitStrategy::kSocialOpt:
      return solve_equilibrium(params).socially_optimal.front();
    case SplitStrategy::kNonOptNash:
      return ActionProfile{0, min_grant_blocks(0, params)};
    case SplitStrategy::kN1StarPlus1: {
      const auto floor = min_common_blocks(params);
      if (!floor) {
        throw std::invalid_argument(
            "split_strategy n1star_plus1 needs a feasible common-region size");
      }
      if (*floor + 1 > n) {
        throw std::invalid_argument(
            "split_strategy n1star_plus1 does not fit in the band");
      }
      return ActionProfile{*floor + 1, n - *floor - 1};
    }
    case SplitStrategy::kNMinus1One:
      return ActionProfile{n - 1, 1};
    case SplitStrategy::kRandom: {
      const int n1 = static_cast<int>(rng.uniform_below(
          static_cast<std::uint64_t>(n) + 1));
      const int n2 = static_cast<int>(rng.uniform_below(
          static_cast<std::uint64_t>(n - n1) + 1));
      return ActionProfile{n1, n2};
    }
  }
  throw std::invalid_argument("unknown split strategy");
}

Simulation::Simulation(const SimConfig& config)
    : config_(config),
      static_game_(config.game),
      embb_arrivals_(rng::stream_seed(config.seed, "embb-arrivals")),
      urllc_arrivals_(rng::stream_seed(config.seed, "urllc-arrivals")),
      retransmit_coins_(rng::stream_seed(config.seed, "retransmit-coins")),
      random_profile_(rng::stream_seed(config.seed, "random-profile")),
      random_order_(rng::stream_seed(config.seed, "random-order-allocator")) {
  config_.validate();
  static_game_.requested_bits = config_.effective_request_bits();
  users_.assign(static_cast<std::size_t>(config_.embb_users), EmbbUserState{});
  block_hits_.assign(static_cast<std::size_t>(config_.game.total_blocks), 0);

  if (config_.split_strategy != SplitStrategy::kRandom &&
      config_.request_mode == RequestMode::kStatic) {
    static_profile_ =
        choose_split(config_.split_strategy, static_game_, random_profile_);
    static_social_payoff_ = social_payoff(static_profile_, static_game_);
  }
}

ActionProfile Simulation::frame_profile() {
  if (config_.split_strategy == SplitStrategy::kRandom) {
    return choose_split(SplitStrategy::kRandom, static_game_, random_profile_);
  }
  if (config_.request_mode == RequestMode::kStatic) {
    return static_profile_;
  }
  GameParams live = static_game_;
  double total_request = 0.0;
  for (const auto& user : users_) total_request += user.buffer_bits;
  live.requested_bits = total_request;
  return choose_split(config_.split_strategy, live, random_profile_);
}

FrameEvents Simulation::step_frame() {
  FrameEvents ev;
  ev.frame = frames_done_;

  // eMBB arrivals; whatever exceeds the remaining buffer space is lost.
  const auto arrival_cap =
      static_cast<std::uint64_t>(std::floor(config_.embb_arrival_max));
  for (auto& user : users_) {
    const double arrived = config_.embb_arrival_max > 0.0
                               ? static_cast<double>(
                                     embb_arrivals_.uniform_below(arrival_cap + 1))
                               : 0.0;
    const double space = config_.buffer_bits - user.buffer_bits;
    const double stored = std::min(arrived, space);
    user.buffer_bits += stored;
    user.arrived_bits += arrived;
    user.lost_bits += arrived - stored;
    ev.embb_arrived_bits += arrived;
    ev.embb_lost_bits += arrived - stored;
  }

  // Users request everything they hold.
  AllocationProblem problem;
  problem.granted.reserve(users_.size());
  problem.requested.reserve(users_.size());
  for (const auto& user : users_) {
    problem.granted.push_back(user.granted_total);
    problem.requested.push_back(user.buffer_bits);
  }
  ev.requested_bits = problem.total_requested();

  const ActionProfile profile = frame_profile();
  current_profile_ = profile;
  ev.profile = profile;
  profile_n1_sum_ += profile.common_blocks;
  profile_n2_sum_ += profile.grant_based_blocks;

  problem.budget = std::min(
      (profile.grant_based_blocks +
       static_game_.common_efficiency * profile.common_blocks) *
          static_game_.bits_per_block,
      ev.requested_bits);
  ev.grant_budget = problem.budget;

  std::vector<double> grants;
  switch (config_.allocator) {
    case AllocatorKind::kWaterFill:
      grants = water_fill(problem);
      break;
    case AllocatorKind::kSmallestFirst:
      grants = allocate_baseline(BaselineMethod::kSmallestFirst, problem,
                                 random_order_);
      break;
    case AllocatorKind::kLargestFirst:
      grants = allocate_baseline(BaselineMethod::kLargestFirst, problem,
                                 random_order_);
      break;
    case AllocatorKind::kRandomOrder:
      grants = allocate_baseline(BaselineMethod::kRandomOrder, problem,
                                 random_order_);
      break;
    case AllocatorKind::kTwoStep:
      grants = allocate_baseline(BaselineMethod::kTwoStep, problem,
                                 random_order_);
      break;
    case AllocatorKind::kMaxMin:
      grants = allocate_baseline(BaselineMethod::kMaxMin, problem,
                                 random_order_);
      break;
  }
  for (std::size_t i = 0; i < users_.size(); ++i) {
    users_[i].buffer_bits = std::max(0.0, users_[i].buffer_bits - grants[i]);
    users_[i].granted_total += grants[i];
    ev.granted_bits += grants[i];
  }

  if (config_.request_mode == RequestMode::kStatic &&
      config_.split_strategy != SplitStrategy::kRandom) {
    social_payoff_sum_ += static_social_payoff_;
  } else {
    GameParams payoff_game = static_game_;
    if (config_.request_mode == RequestMode::kPerFrame) {
      payoff_game.requested_bits = ev.requested_bits;
    }
    social_payoff_sum_ += social_payoff(profile, payoff_game);
  }

  // URLLC contention, mini slot by mini slot.
  const long long urllc_arrived_before = urllc_arrived_;
  const long long urllc_lost_before = urllc_lost_;
  const long long resolved_before = urllc_arrived_ - static_cast<long long>(live_.size());
  const long long slots = static_cast<long long>(config_.slots_per_frame) *
                          config_.effective_minislots_per_slot();
  for (long long s = 0; s < slots; ++s) {
    run_minislot(next_minislot_, true, profile.common_blocks);
    ++next_minislot_;
  }
  ev.urllc_arrived = urllc_arrived_ - urllc_arrived_before;
  ev.urllc_lost = urllc_lost_ - urllc_lost_before;
  ev.urllc_resolved =
      (urllc_arrived_ - static_cast<long long>(live_.size())) - resolved_before;

  ++frames_done_;
  return ev;
}

void Simulation::run_minislot(long long t, bool accept_arrivals,
                              int common_blocks) {
  if (accept_arrivals) {
    const long long arrivals = urllc_arrivals_.poisson(static_game_.arrival_rate);
    for (long long i = 0; i < arrivals; ++i) {
      ++urllc_arrived_;
      if (common_blocks <= 0) {
        // No common region: the packet has nowhere to transmit.
        ++urllc_lost_;
        if (urllc_sink) {
          UrllcPacketRecord record;
          record.arrival_minislot = t;
          record.block = -1;
          record.lost = true;
          urllc_sink(record);
        }
        continue;
      }
      LivePacket pkt;
      pkt.arrival = t;
      pkt.block = static_cast<int>(urllc_arrivals_.uniform_below(
          static_cast<std::uint64_t>(common_blocks)));
      live_.push_back(std::move(pkt));
    }
  }

  transmitters_.clear();
  for (std::size_t i = 0; i < live_.size(); ++i) {
    LivePacket& pkt = live_[i];
    const bool transmits =
        pkt.arrival == t || retransmit_coins_.bernoulli(static_game_.retransmit_prob);
    if (!transmits) continue;
    transmitters_.push_back(i);
    ++block_hits_[static_cast<std::size_t>(pkt.block)];
    if (urllc_sink) pkt.transmit_minislots.push_back(t);
  }
  for (std::size_t i : transmitters_) {
    if (block_hits_[static_cast<std::size_t>(live_[i].block)] == 1) {
      live_[i].delivered = true;  // sole transmission on its block
    }
  }
  for (std::size_t i : transmitters_) {
    block_hits_[static_cast<std::size_t>(live_[i].block)] = 0;
  }

  resolve_due(t);
}

void Simulation::resolve_due(long long t) {
  std::size_t done = 0;
  while (done < live_.size() &&
         live_[done].arrival + static_game_.delay_budget - 1 <= t) {
    const LivePacket& pkt = live_[done];
    if (!pkt.delivered) ++urllc_lost_;
    if (urllc_sink) {
      UrllcPacketRecord record;
      record.arrival_minislot = pkt.arrival;
      record.block = pkt.block;
      record.transmit_minislots = pkt.transmit_minislots;
      record.lost = !pkt.delivered;
      urllc_sink(record);
    }
    ++done;
  }
  if (done > 0) {
    live_.erase(live_.begin(),
                live_.begin() + static_cast<std::ptrdiff_t>(done));
  }
}

void Simulation::flush_urllc() {
  for (int s = 0; s < static_game_.delay_budget - 1 && !live_.empty(); ++s) {
    run_minislot(next_minislot_, false, current_profile_.common_blocks);
    ++next_minislot_;
  }
}

MetricsReport Simulation::report() const {
  MetricsReport rep;
  rep.split_strategy = split_strategy_name(config_.split_strategy);
  rep.allocator = allocator_kind_name(config_.allocator);
  rep.seed = config_.seed;
  rep.frames = frames_done_;
  rep.urllc_arrived = urllc_arrived_;
  rep.urllc_lost = urllc_lost_;
  rep.urllc_loss_prob =
      urllc_arrived_ > 0
          ? static_cast<double>(urllc_lost_) / static_cast<double>(urllc_arrived_)
          : 0.0;
  for (const auto& user : users_) {
    rep.embb_arrived_bits += user.arrived_bits;
    rep.embb_lost_bits += user.lost_bits;
  }
  rep.embb_loss_prob = rep.embb_arrived_bits > 0.0
                           ? rep.embb_lost_bits / rep.embb_arrived_bits
                           : 0.0;
  std::vector<double> totals;
  totals.reserve(users_.size());
  for (const auto& user : users_) totals.push_back(user.granted_total);
  rep.sample_variance = totals.size() >= 2 ? sample_variance(totals) : 0.0;
  rep.jain_index = jain_index(totals);
  if (frames_done_ > 0) {
    const auto frames = static_cast<double>(frames_done_);
    rep.social_payoff = social_payoff_sum_ / frames;
    rep.mean_common_blocks = profile_n1_sum_ / frames;
    rep.mean_grant_based_blocks = profile_n2_sum_ / frames;
  }
  return rep;
}

MetricsReport run_simulation(const SimConfig& config) {
  Simulation sim(config);
  for (long long t = 0; t < config.frames; ++t) sim.step_frame();
  sim.flush_urllc();
  return sim.report();
}

MetricsReport run_simulation_traced(const SimConfig& config,
                                    std::ostream& trace) {
  using detail::format_double;
  using detail::format_int;
  Simulation sim(config);
  for (long long t = 0; t < config.frames; ++t) {
    const FrameEvents ev = sim.step_frame();
    trace << "{\"frame\":" << format_int(ev.frame)
          << ",\"n1\":" << ev.profile.common_blocks
          << ",\"n2\":" << ev.profile.grant_based_blocks
          << ",\"grant_budget\":" << format_double(ev.grant_budget)
          << ",\"requested_bits\":" << format_double(ev.requested_bits)
          << ",\"granted_bits\":" << format_double(ev.granted_bits)
          << ",\"embb_arrived_bits\":" << format_double(ev.embb_arrived_bits)
          << ",\"embb_lost_bits\":" << format_double(ev.embb_lost_bits)
          << ",\"urllc_arrived\":" << format_int(ev.urllc_arrived)
          << ",\"urllc_resolved\":" << format_int(ev.urllc_resolved)
          << ",\"urllc_lost\":" << format_int(ev.urllc_lost) << "}\n";
  }
  sim.flush_urllc();
  return sim.report();
}

}  // namespace uresim
