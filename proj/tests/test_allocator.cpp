#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "uresim/allocator.hpp"
#include "uresim/errors.hpp"
#include "uresim/rng.hpp"

using namespace uresim;

namespace {

AllocationProblem make(std::vector<double> granted, std::vector<double> requested,
                       double budget) {
  AllocationProblem p;
  p.granted = std::move(granted);
  p.requested = std::move(requested);
  p.budget = budget;
  return p;
}

AllocationProblem random_problem(rng::Engine& eng, std::size_t max_users,
                                 double zero_request_share = 0.1) {
  const std::size_t m = 1 + eng.uniform_below(max_users);
  AllocationProblem p;
  for (std::size_t i = 0; i < m; ++i) {
    p.granted.push_back(eng.uniform01() * 100.0);
    p.requested.push_back(eng.uniform01() < zero_request_share
                              ? 0.0
                              : eng.uniform01() * 100.0);
  }
  p.budget = eng.uniform01() * p.total_requested();
  return p;
}

void check_feasible(const AllocationProblem& p, const std::vector<double>& x) {
  REQUIRE(x.size() == p.users());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(x[i] >= -1e-12);
    CHECK(x[i] <= p.requested[i] + 1e-12 * std::max(1.0, p.requested[i]));
    total += x[i];
  }
  const double expected = std::min(p.budget, p.total_requested());
  CHECK(total == doctest::Approx(expected).epsilon(1e-12));
}

}  // namespace

TEST_CASE("objective") {
  // Perfect equalization has zero variance.
  const auto p1 = make({0, 0}, {5, 5}, 4);
  CHECK(allocation_objective(p1, std::vector<double>{2, 2}) ==
        doctest::Approx(0.0));
  const auto p2 = make({0, 3}, {10, 10}, 4);
  CHECK(allocation_objective(p2, std::vector<double>{3.5, 0.5}) ==
        doctest::Approx(0.0));
  CHECK(allocation_objective(p2, std::vector<double>{2.0, 2.0}) > 0.0);
  CHECK_THROWS_AS(allocation_objective(p2, std::vector<double>{1.0}),
                  std::invalid_argument);
  // Degenerate single-user form: squared distance to the forced grant.
  const auto p3 = make({7}, {9}, 4.5);
  CHECK(allocation_objective(p3, std::vector<double>{4.5}) ==
        doctest::Approx(0.0));
  CHECK(allocation_objective(p3, std::vector<double>{2.5}) ==
        doctest::Approx(4.0));
}

TEST_CASE("water filling on crafted instances") {
  SUBCASE("equal levels split evenly") {
    const auto x = water_fill(make({1, 1, 1}, {5, 5, 5}, 6));
    CHECK(x == std::vector<double>{2, 2, 2});
  }
  SUBCASE("level equalization across unequal bins") {
    const auto x = water_fill(make({0, 3}, {10, 10}, 4));
    CHECK(x[0] == doctest::Approx(3.5));
    CHECK(x[1] == doctest::Approx(0.5));
  }
  SUBCASE("bucket caps bind before the next bin is reached") {
    const auto x = water_fill(make({0, 0, 7}, {1, 6, 6}, 5));
    CHECK(x[0] == doctest::Approx(1.0));
    CHECK(x[1] == doctest::Approx(4.0));
    CHECK(x[2] == doctest::Approx(0.0));
  }
  SUBCASE("zero budget") {
    const auto x = water_fill(make({3, 1}, {4, 4}, 0));
    CHECK(x == std::vector<double>{0, 0});
  }
  SUBCASE("budget equal to the total request fills every bucket") {
    const auto x = water_fill(make({5, 0}, {4, 2}, 6));
    CHECK(x == std::vector<double>{4, 2});
  }
  SUBCASE("zero requests are excluded") {
    const auto x = water_fill(make({0, 0, 0}, {0, 3, 3}, 4));
    CHECK(x[0] == 0.0);
    CHECK(x[1] == doctest::Approx(2.0));
    CHECK(x[2] == doctest::Approx(2.0));
  }
  SUBCASE("single user takes the whole budget") {
    const auto x = water_fill(make({7}, {9}, 4.5));
    CHECK(x == std::vector<double>{4.5});
  }
  SUBCASE("infeasible and malformed inputs are rejected") {
    CHECK_THROWS_AS(water_fill(make({0, 0}, {1, 1}, 3)), InfeasibleError);
    CHECK_THROWS_AS(water_fill(make({0, -1}, {1, 1}, 1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(water_fill(make({0}, {1, 1}, 1)), std::invalid_argument);
    CHECK_THROWS_AS(water_fill(make({0, 0}, {1, 1}, -0.5)),
                    std::invalid_argument);
  }
}

TEST_CASE("water filling properties on random instances") {
  rng::Engine eng(314);
  for (int trial = 0; trial < 400; ++trial) {
    const auto p = random_problem(eng, 8);
    const auto x = water_fill(p);
    check_feasible(p, x);

    // Once a higher-topped bucket is full, every lower-topped one is too;
    // once a lower bin is empty, every higher bin is as well; and all
    // partially filled buckets share one water level.
    double shared_level = -1.0;
    for (std::size_t i = 0; i < p.users(); ++i) {
      if (p.requested[i] <= 0.0) continue;
      const double tol_i = 1e-9 * std::max(1.0, p.requested[i]);
      for (std::size_t j = 0; j < p.users(); ++j) {
        if (i == j || p.requested[j] <= 0.0) continue;
        const double tol_j = 1e-9 * std::max(1.0, p.requested[j]);
        if (p.granted[i] + p.requested[i] >= p.granted[j] + p.requested[j] &&
            x[i] >= p.requested[i] - tol_i) {
          CHECK(x[j] >= p.requested[j] - tol_j);
        }
        if (p.granted[i] >= p.granted[j] && x[j] <= tol_j) {
          CHECK(x[i] <= tol_i);
        }
      }
      const bool interior = x[i] > tol_i && x[i] < p.requested[i] - tol_i;
      if (interior) {
        const double level = x[i] + p.granted[i];
        if (shared_level < 0.0) {
          shared_level = level;
        } else {
          CHECK(std::abs(level - shared_level) <=
                1e-9 * std::max(1.0, shared_level));
        }
      }
    }

    const auto cert = kkt_certificate(p, x);
    CHECK(cert.stationarity_residual <= 1e-9);
    CHECK(cert.complementarity_residual <= 1e-9);
    for (double v : cert.mu) CHECK(v >= 0.0);
    for (double v : cert.omega) CHECK(v >= 0.0);
  }
}

TEST_CASE("water filling is order invariant") {
  rng::Engine eng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_problem(eng, 7);
    const auto x = water_fill(p);
    std::vector<std::size_t> perm(p.users());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = perm.size(); i > 1; --i) {
      std::swap(perm[i - 1], perm[eng.uniform_below(i)]);
    }
    AllocationProblem q;
    q.budget = p.budget;
    q.granted.resize(p.users());
    q.requested.resize(p.users());
    for (std::size_t i = 0; i < p.users(); ++i) {
      q.granted[perm[i]] = p.granted[i];
      q.requested[perm[i]] = p.requested[i];
    }
    const auto y = water_fill(q);
    for (std::size_t i = 0; i < p.users(); ++i) {
      CHECK(y[perm[i]] == x[i]);
    }
  }
}

TEST_CASE("kkt certificate") {
  SUBCASE("balanced interior point") {
    const auto p = make({0, 0}, {5, 5}, 4);
    const auto cert = kkt_certificate(p, std::vector<double>{2, 2});
    REQUIRE(cert.lambda.has_value());
    CHECK(*cert.lambda == doctest::Approx(0.0));
    CHECK(cert.mu == std::vector<double>{0, 0});
    CHECK(cert.omega == std::vector<double>{0, 0});
    CHECK(cert.stationarity_residual <= 1e-12);
  }
  SUBCASE("a perturbed optimum is flagged") {
    const auto p = make({0, 0, 0, 0}, {10, 10, 10, 10}, 12);
    const double delta = 0.25;
    const std::vector<double> x{3 + delta, 3 - delta, 3, 3};
    const auto cert = kkt_certificate(p, x);
    CHECK(cert.stationarity_residual > 0.0);
    CHECK(cert.stationarity_residual ==
          doctest::Approx(2.0 * delta / 3.0).epsilon(1e-9));
  }
  SUBCASE("boundary-only point reports no unique multiplier") {
    const auto p = make({0, 0}, {1, 1}, 2);
    const auto x = water_fill(p);
    CHECK(x == std::vector<double>{1, 1});
    const auto cert = kkt_certificate(p, x);
    CHECK(!cert.lambda.has_value());
    CHECK(cert.stationarity_residual <= 1e-9);
  }
  SUBCASE("single user is certified trivially") {
    const auto p = make({3}, {2}, 2);
    const auto cert = kkt_certificate(p, std::vector<double>{2});
    CHECK(!cert.lambda.has_value());
    CHECK(cert.stationarity_residual == 0.0);
    CHECK(cert.bound_state[0] == BoundState::kAtRequest);
  }
}

TEST_CASE("brute force oracle") {
  SUBCASE("tiny instances") {
    const auto x = brute_force_oracle(make({0, 0}, {5, 5}, 4), 0.25);
    CHECK(x[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(x[1] == doctest::Approx(2.0).epsilon(1e-9));
    const auto y = brute_force_oracle(make({1, 4}, {3, 0}, 2), 0.25);
    CHECK(y[0] == doctest::Approx(2.0));  // only one active user
    CHECK(y[1] == doctest::Approx(0.0));
  }
  SUBCASE("fine grid recovers the capped solution") {
    const auto p = make({0, 0, 7}, {1, 6, 6}, 5);
    const auto x = brute_force_oracle(p, 1e-3);
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(x[1] == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(x[2] == doctest::Approx(0.0).epsilon(1e-6));
    const auto cert = kkt_certificate(p, x);
    CHECK(cert.stationarity_residual <= 1e-5);  // grid point, not exact
  }
  SUBCASE("guards") {
    CHECK_THROWS_AS(brute_force_oracle(
                        make({0, 0, 0, 0, 0, 0, 0}, {1, 1, 1, 1, 1, 1, 1}, 3),
                        0.5),
                    std::invalid_argument);
    CHECK_THROWS_AS(brute_force_oracle(make({0, 0}, {5, 5}, 4), 0.0),
                    std::invalid_argument);
  }
  SUBCASE("water filling never does worse") {
    rng::Engine eng(777);
    for (int trial = 0; trial < 200; ++trial) {
      const auto p = random_problem(eng, 6);
      const auto fast = water_fill(p);
      const double step = std::max(p.budget / 4.0, 1e-3);
      const auto slow = brute_force_oracle(p, step);
      check_feasible(p, slow);
      CHECK(allocation_objective(p, fast) <=
            allocation_objective(p, slow) + 1e-6);
    }
  }
}

TEST_CASE("baseline allocators") {
  rng::Engine eng(1);
  SUBCASE("greedy orders") {
    const auto p = make({0, 0, 0}, {2, 4, 10}, 5);
    const auto smallest =
        allocate_baseline(BaselineMethod::kSmallestFirst, p, eng);
    CHECK(smallest == std::vector<double>{2, 3, 0});
    const auto largest =
        allocate_baseline(BaselineMethod::kLargestFirst, p, eng);
    CHECK(largest == std::vector<double>{0, 0, 5});
  }
  SUBCASE("two-step averages") {
    const auto p = make({0, 0, 0}, {2, 4, 10}, 9);
    const auto x = allocate_baseline(BaselineMethod::kTwoStep, p, eng);
    // Step one hands min(r, 9/3) to everyone; the slack unit then goes to
    // the largest residual.
    CHECK(x[0] == doctest::Approx(2.0));
    CHECK(x[1] == doctest::Approx(3.0));
    CHECK(x[2] == doctest::Approx(4.0));
  }
  SUBCASE("iterative max-min averages") {
    const auto p = make({0, 0, 0}, {2, 4, 10}, 9);
    const auto x = allocate_baseline(BaselineMethod::kMaxMin, p, eng);
    CHECK(x[0] == doctest::Approx(2.0));
    CHECK(x[1] == doctest::Approx(3.5));
    CHECK(x[2] == doctest::Approx(3.5));
  }
  SUBCASE("random order is a feasible permutation greedy") {
    for (int trial = 0; trial < 50; ++trial) {
      const auto p = random_problem(eng, 6, 0.0);
      const auto x = allocate_baseline(BaselineMethod::kRandomOrder, p, eng);
      check_feasible(p, x);
    }
    // Deterministic for a fixed engine state.
    rng::Engine a(12), b(12);
    const auto p = make({0, 0, 0, 0}, {4, 4, 4, 4}, 6);
    CHECK(allocate_baseline(BaselineMethod::kRandomOrder, p, a) ==
          allocate_baseline(BaselineMethod::kRandomOrder, p, b));
  }
  SUBCASE("max-min equals water filling from empty bins") {
    rng::Engine gen(31337);
    for (int trial = 0; trial < 200; ++trial) {
      auto p = random_problem(gen, 8);
      std::fill(p.granted.begin(), p.granted.end(), 0.0);
      const auto direct = allocate_baseline(BaselineMethod::kMaxMin, p, gen);
      const auto filled = water_fill(p);
      for (std::size_t i = 0; i < p.users(); ++i) {
        CHECK(std::abs(direct[i] - filled[i]) <= 1e-9);
      }
    }
  }
  SUBCASE("infeasible budget is rejected") {
    CHECK_THROWS_AS(
        allocate_baseline(BaselineMethod::kMaxMin, make({0}, {1}, 2), eng),
        InfeasibleError);
  }
}

TEST_CASE("fairness metrics") {
  CHECK(sample_variance(std::vector<double>{3, 3, 3}) == doctest::Approx(0.0));
  CHECK(jain_index(std::vector<double>{3, 3, 3}) == doctest::Approx(1.0));
  CHECK(jain_index(std::vector<double>{1, 0}) == doctest::Approx(0.5));
  CHECK(jain_index(std::vector<double>{0, 0, 0}) == 1.0);
  CHECK_THROWS_AS(sample_variance(std::vector<double>{1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(jain_index(std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(jain_index(std::vector<double>{-1, 2}),
                  std::invalid_argument);

  SUBCASE("two-pass variance matches a streaming recomputation") {
    rng::Engine eng(8);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> values;
      const std::size_t n = 2 + eng.uniform_below(20);
      for (std::size_t i = 0; i < n; ++i) {
        values.push_back(eng.uniform01() * 1000.0);
      }
      // Welford's online update as the independent route.
      double mean = 0.0, m2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double delta = values[i] - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (values[i] - mean);
      }
      const double streaming = m2 / static_cast<double>(n - 1);
      CHECK(sample_variance(values) ==
            doctest::Approx(streaming).epsilon(1e-9));
    }
  }
}
