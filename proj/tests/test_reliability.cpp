#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "uresim/reliability.hpp"

using namespace uresim;

namespace {

// Independent long-double evaluation of the light-traffic multiplier, kept
// separate from the library's summation order.
long double light_coeff_oracle(long double p, int tau) {
  const long double survive = 1.0L - p + p * p;
  long double sum = 0.0L;
  for (int s = 1; s <= tau - 1; ++s) {
    sum += p * std::pow(survive, static_cast<long double>(tau - s - 1)) *
           std::pow(1.0L - p, static_cast<long double>(s));
  }
  return sum + std::pow(survive, static_cast<long double>(tau - 1));
}

}  // namespace

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS((RetransParams{-0.1, 0.3, 3}.validate()),
                  std::invalid_argument);
  CHECK_THROWS_AS((RetransParams{0.1, 1.3, 3}.validate()),
                  std::invalid_argument);
  CHECK_THROWS_AS((RetransParams{0.1, 0.3, 0}.validate()),
                  std::invalid_argument);
  CHECK_THROWS_AS(failure_prob_exact_tau3(RetransParams{0.1, 0.3, 4}),
                  std::invalid_argument);
  CHECK_THROWS_AS(light_traffic_coefficient(-0.2, 3), std::invalid_argument);
  CHECK_THROWS_AS(failure_prob_per_region(-1.0, 0.3, 3, 4),
                  std::invalid_argument);
  CHECK_THROWS_AS(failure_prob_per_region(1.0, 0.3, 3, -1),
                  std::invalid_argument);
  CHECK_THROWS_AS(failure_prob_monte_carlo(RetransParams{0.1, 0.3, 3}, 0, 1),
                  std::invalid_argument);
}

TEST_CASE("exact closed form, three-slot window") {
  CHECK(failure_prob_exact_tau3(RetransParams{0.0, 0.3, 3}) == 0.0);

  // First-order slope at zero arrival rate is 1 - p^2 + p^3.
  for (double p : {0.1, 0.3, 0.5, 0.9}) {
    const double h = 1e-7;
    const double slope = failure_prob_exact_tau3(RetransParams{h, p, 3}) / h;
    CHECK(slope == doctest::Approx(1.0 - p * p + p * p * p).epsilon(1e-5));
  }

  // Frozen reference value (high-precision evaluation of the four
  // exponentials at rate 0.1, p = 0.3).
  CHECK(failure_prob_exact_tau3(RetransParams{0.1, 0.3, 3}) ==
        doctest::Approx(0.0940240486991215766).epsilon(1e-14));

  SUBCASE("nondecreasing in the arrival rate") {
    for (double p = 0.1; p < 0.95; p += 0.1) {
      double prev = 0.0;
      for (double rate = 0.0; rate <= 0.5 + 1e-12; rate += 0.01) {
        const double value = failure_prob_exact_tau3(RetransParams{rate, p, 3});
        CHECK(value >= prev);
        CHECK(value >= 0.0);
        CHECK(value <= 1.0);
        prev = value;
      }
    }
  }
}

TEST_CASE("light-traffic coefficient") {
  CHECK(light_traffic_coefficient(0.0, 8) == doctest::Approx(1.0));
  CHECK(light_traffic_coefficient(1.0, 8) == doctest::Approx(1.0));
  CHECK(light_traffic_coefficient(0.5, 1) == doctest::Approx(1.0));
  // With a two-slot window the multiplier collapses to 1 for every p.
  for (double p = 0.0; p <= 1.0 + 1e-12; p += 0.1) {
    CHECK(light_traffic_coefficient(p, 2) == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK(light_traffic_coefficient(0.3, 3) ==
        doctest::Approx(0.937).epsilon(1e-13));
  // Frozen from an independent high-precision summation.
  CHECK(light_traffic_coefficient(0.3, 8) ==
        doctest::Approx(0.4479702662053000).epsilon(1e-14));
  for (int tau : {2, 3, 5, 8, 16}) {
    for (double p : {0.05, 0.3, 0.7, 0.95}) {
      const double value = light_traffic_coefficient(p, tau);
      CHECK(value > 0.0);
      CHECK(value <= 1.0);
      CHECK(value == doctest::Approx(static_cast<double>(
                         light_coeff_oracle(p, tau))).epsilon(1e-12));
    }
  }
}

TEST_CASE("light-traffic failure probability") {
  CHECK(failure_prob_light_traffic(RetransParams{0.2, 0.0, 5}) ==
        doctest::Approx(0.2));
  CHECK(failure_prob_light_traffic(RetransParams{0.2, 1.0, 5}) ==
        doctest::Approx(0.2));
  for (double p : {0.1, 0.4, 0.8}) {
    CHECK(failure_prob_light_traffic(RetransParams{0.05, p, 3}) ==
          doctest::Approx((1.0 - p * p + p * p * p) * 0.05).epsilon(1e-13));
  }
  // The first-order form exceeds 1 at large rates and is clamped.
  CHECK(failure_prob_light_traffic(RetransParams{5.0, 0.3, 3}) == 1.0);
}

TEST_CASE("exact and light-traffic forms agree to second order") {
  // The gap is quadratic in the rate; its leading coefficient stays below
  // 2.5 over p in [0, 1], so the normalized gap is bounded by 3.
  for (double p : {0.1, 0.3, 0.7}) {
    for (double rate = 0.001; rate <= 0.05 + 1e-12; rate += 0.002) {
      const double exact = failure_prob_exact_tau3(RetransParams{rate, p, 3});
      const double light =
          failure_prob_light_traffic(RetransParams{rate, p, 3});
      CHECK(std::abs(exact - light) / (rate * rate) <= 3.0);
    }
  }
}

TEST_CASE("per-region failure probability") {
  CHECK(failure_prob_per_region(0.1, 0.3, 8, 0) == 1.0);
  CHECK(failure_prob_per_region(0.0, 0.3, 8, 5) == 0.0);
  const double coeff = light_traffic_coefficient(0.3, 8);
  CHECK(failure_prob_per_region(6.5e-4, 0.3, 8, 30) ==
        doctest::Approx(coeff * 6.5e-4 / 30).epsilon(1e-14));
  CHECK(failure_prob_per_region(6.5e-4, 0.3, 8, 30) <= 1e-5);
  CHECK(failure_prob_per_region(6.5e-4, 0.3, 8, 29) > 1e-5);
}

TEST_CASE("monte carlo estimator") {
  SUBCASE("no interferers means no failures") {
    const auto est =
        failure_prob_monte_carlo(RetransParams{0.0, 0.3, 5}, 20000, 42);
    CHECK(est.estimate == 0.0);
    CHECK(est.std_error == 0.0);
    CHECK(est.trials == 20000);
  }

  SUBCASE("deterministic per seed and per thread count") {
    const RetransParams params{0.1, 0.3, 3};
    const auto a = failure_prob_monte_carlo(params, 300000, 9, 1);
    const auto b = failure_prob_monte_carlo(params, 300000, 9, 1);
    const auto c = failure_prob_monte_carlo(params, 300000, 9, 4);
    CHECK(a.estimate == b.estimate);
    CHECK(a.estimate == c.estimate);
    const auto d = failure_prob_monte_carlo(params, 300000, 10, 1);
    CHECK(a.estimate != d.estimate);
  }

  SUBCASE("brackets the exact value across seeds") {
    const RetransParams params{0.1, 0.3, 3};
    const double exact = failure_prob_exact_tau3(params);
    int missed = 0;
    for (int seed = 0; seed < 100; ++seed) {
      const auto est = failure_prob_monte_carlo(params, 40000, 1000 + seed);
      if (std::abs(est.estimate - exact) > 3.0 * est.std_error) ++missed;
    }
    CHECK(missed <= 1);  // 99% coverage over 100 seeds
  }

  SUBCASE("matches the light-traffic form at small rates") {
    const RetransParams params{0.01, 0.3, 8};
    const auto est = failure_prob_monte_carlo(params, 1000000, 5, 2);
    const double light = failure_prob_light_traffic(params);
    CHECK(std::abs(est.estimate - light) / light <= 0.15);
  }

  SUBCASE("degenerate one-slot window fails iff a fresh arrival collides") {
    // With no retransmissions the failure probability is 1 - exp(-rate).
    const RetransParams params{0.3, 0.7, 1};
    const auto est = failure_prob_monte_carlo(params, 400000, 77);
    const double expected = 1.0 - std::exp(-0.3);
    CHECK(std::abs(est.estimate - expected) <= 4.0 * est.std_error);
  }
}
