#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "uresim/reliability.hpp"
#include "uresim/simulator.hpp"

using namespace uresim;

namespace {

SimConfig small_config() {
  SimConfig config;
  config.frames = 500;
  config.seed = 7;
  return config;
}

}  // namespace

TEST_CASE("split strategy profiles") {
  const SimConfig config;
  GameParams game = config.game;
  game.requested_bits = config.effective_request_bits();
  rng::Engine eng(1);

  CHECK(choose_split(SplitStrategy::kSocialOpt, game, eng) ==
        ActionProfile{30, 23});
  CHECK(choose_split(SplitStrategy::kNonOptNash, game, eng) ==
        ActionProfile{0, 38});
  CHECK(choose_split(SplitStrategy::kN1StarPlus1, game, eng) ==
        ActionProfile{31, 29});
  CHECK(choose_split(SplitStrategy::kNMinus1One, game, eng) ==
        ActionProfile{59, 1});

  SUBCASE("random profiles always fit in the band") {
    for (int i = 0; i < 500; ++i) {
      const auto profile = choose_split(SplitStrategy::kRandom, game, eng);
      CHECK(profile.common_blocks >= 0);
      CHECK(profile.grant_based_blocks >= 0);
      CHECK(profile.common_blocks + profile.grant_based_blocks <=
            game.total_blocks);
    }
  }
  SUBCASE("an unreachable loss bound") {
    game.loss_bound = 1e-12;
    CHECK(choose_split(SplitStrategy::kSocialOpt, game, eng) ==
          ActionProfile{0, 38});
    CHECK_THROWS_AS(choose_split(SplitStrategy::kN1StarPlus1, game, eng),
                    std::invalid_argument);
  }
}

TEST_CASE("degenerate traffic") {
  SUBCASE("no URLLC arrivals") {
    SimConfig config = small_config();
    config.game.arrival_rate = 0.0;
    const auto report = run_simulation(config);
    CHECK(report.urllc_arrived == 0);
    CHECK(report.urllc_lost == 0);
    CHECK(report.urllc_loss_prob == 0.0);
  }
  SUBCASE("no eMBB arrivals") {
    SimConfig config = small_config();
    config.embb_arrival_max = 0.0;
    config.game.requested_bits = 1.2e6;  // keep the game well posed
    const auto report = run_simulation(config);
    CHECK(report.embb_arrived_bits == 0.0);
    CHECK(report.embb_lost_bits == 0.0);
    CHECK(report.sample_variance == 0.0);
    CHECK(report.jain_index == 1.0);
  }
  SUBCASE("zero frames gives an empty report") {
    SimConfig config = small_config();
    config.frames = 0;
    const auto report = run_simulation(config);
    CHECK(report.frames == 0);
    CHECK(report.urllc_arrived == 0);
    CHECK(report.embb_arrived_bits == 0.0);
    CHECK(report.social_payoff == 0.0);
  }
  SUBCASE("empty common region loses every packet") {
    SimConfig config = small_config();
    config.split_strategy = SplitStrategy::kNonOptNash;  // profile (0, .)
    config.game.arrival_rate = 0.05;  // enough arrivals to observe
    const auto report = run_simulation(config);
    CHECK(report.urllc_arrived > 0);
    CHECK(report.urllc_lost == report.urllc_arrived);
    CHECK(report.urllc_loss_prob == 1.0);
  }
}

TEST_CASE("per-user bit conservation") {
  SimConfig config = small_config();
  config.frames = 400;
  Simulation sim(config);
  for (long long t = 0; t < config.frames; ++t) sim.step_frame();
  sim.flush_urllc();
  for (const auto& user : sim.users()) {
    const double accounted =
        user.granted_total + user.buffer_bits + user.lost_bits;
    CHECK(accounted ==
          doctest::Approx(user.arrived_bits).epsilon(1e-6));
    CHECK(user.buffer_bits >= 0.0);
    CHECK(user.buffer_bits <= config.buffer_bits + 1e-9);
  }
}

TEST_CASE("packet records stay inside the retransmission window") {
  SimConfig config = small_config();
  config.game.arrival_rate = 0.2;  // inflated so many packets resolve
  config.frames = 300;
  Simulation sim(config);
  long long records = 0;
  sim.urllc_sink = [&](const UrllcPacketRecord& record) {
    ++records;
    if (record.block < 0) {
      CHECK(record.lost);
      return;
    }
    REQUIRE(!record.transmit_minislots.empty());
    CHECK(record.transmit_minislots.front() == record.arrival_minislot);
    for (long long slot : record.transmit_minislots) {
      CHECK(slot >= record.arrival_minislot);
      CHECK(slot <= record.arrival_minislot + config.game.delay_budget - 1);
    }
  };
  for (long long t = 0; t < config.frames; ++t) sim.step_frame();
  sim.flush_urllc();
  CHECK(records == sim.report().urllc_arrived);
}

TEST_CASE("determinism") {
  SimConfig config = small_config();
  config.allocator = AllocatorKind::kRandomOrder;
  config.split_strategy = SplitStrategy::kRandom;
  const auto a = run_simulation(config);
  const auto b = run_simulation(config);
  CHECK(a.urllc_arrived == b.urllc_arrived);
  CHECK(a.urllc_lost == b.urllc_lost);
  CHECK(a.embb_arrived_bits == b.embb_arrived_bits);
  CHECK(a.embb_lost_bits == b.embb_lost_bits);
  CHECK(a.sample_variance == b.sample_variance);
  CHECK(a.jain_index == b.jain_index);
  CHECK(a.social_payoff == b.social_payoff);
  CHECK(a.mean_common_blocks == b.mean_common_blocks);

  SimConfig other = config;
  other.seed = config.seed + 1;
  const auto c = run_simulation(other);
  CHECK(a.embb_arrived_bits != c.embb_arrived_bits);
}

TEST_CASE("loss agrees with the tagged-packet estimator") {
  // eMBB disabled, inflated URLLC load; the frame simulator's per-packet
  // loss fraction must match the isolated tagged-packet model at the
  // per-block rate.
  SimConfig config;
  config.game.arrival_rate = 0.4;
  config.game.delay_budget = 3;
  config.game.total_blocks = 5;
  config.game.loss_bound = 0.5;  // keep the sizing game feasible
  config.split_strategy = SplitStrategy::kNMinus1One;  // profile (4, 1)
  config.embb_arrival_max = 0.0;
  config.game.requested_bits = 1.0;
  config.minislots_per_slot = 3;
  config.frames = 40000;  // 1.2e6 mini slots, ~4.8e5 packets
  config.seed = 21;
  const auto report = run_simulation(config);
  REQUIRE(report.urllc_arrived > 100000);

  const RetransParams per_block{0.4 / 4.0, config.game.retransmit_prob, 3};
  const auto mc = failure_prob_monte_carlo(per_block, 500000, 4242);
  const double sim_se = std::sqrt(report.urllc_loss_prob *
                                  (1.0 - report.urllc_loss_prob) /
                                  static_cast<double>(report.urllc_arrived));
  const double tol = 3.0 * std::sqrt(mc.std_error * mc.std_error +
                                     sim_se * sim_se);
  CHECK(std::abs(report.urllc_loss_prob - mc.estimate) <= tol);
  // Both must also sit near the exact closed form.
  const double exact = failure_prob_exact_tau3(per_block);
  CHECK(std::abs(report.urllc_loss_prob - exact) <= tol);
}

TEST_CASE("water filling dominates the baselines in fairness") {
  const AllocatorKind kinds[] = {
      AllocatorKind::kWaterFill,    AllocatorKind::kSmallestFirst,
      AllocatorKind::kLargestFirst, AllocatorKind::kRandomOrder,
      AllocatorKind::kTwoStep,      AllocatorKind::kMaxMin};
  SimConfig config;
  config.frames = 20000;
  config.seed = 5;
  double water_fill_jain = 0.0;
  double water_fill_variance = 0.0;
  std::vector<double> other_jain;
  std::vector<double> other_variance;
  for (AllocatorKind kind : kinds) {
    config.allocator = kind;
    const auto report = run_simulation(config);
    if (kind == AllocatorKind::kWaterFill) {
      water_fill_jain = report.jain_index;
      water_fill_variance = report.sample_variance;
    } else {
      other_jain.push_back(report.jain_index);
      other_variance.push_back(report.sample_variance);
    }
  }
  for (double j : other_jain) CHECK(water_fill_jain >= j);
  for (double v : other_variance) CHECK(water_fill_variance <= v);
}

TEST_CASE("per-frame game resizing") {
  SimConfig config = small_config();
  config.request_mode = RequestMode::kPerFrame;
  config.frames = 200;
  const auto report = run_simulation(config);
  CHECK(report.frames == 200);
  CHECK(report.mean_common_blocks == 30.0);  // the URLLC floor is static
  CHECK(report.mean_grant_based_blocks > 0.0);
  CHECK(report.mean_grant_based_blocks <= 60.0);
}

TEST_CASE("frame trace records") {
  SimConfig config = small_config();
  config.frames = 25;
  std::ostringstream trace;
  const auto report = run_simulation_traced(config, trace);
  CHECK(report.frames == 25);
  std::istringstream lines(trace.str());
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    const auto record = nlohmann::json::parse(line);
    CHECK(record.contains("frame"));
    CHECK(record.contains("n1"));
    CHECK(record.contains("grant_budget"));
    CHECK(record["frame"].get<long long>() == count);
    CHECK(record["n1"].get<int>() == 30);
    ++count;
  }
  CHECK(count == 25);
}
