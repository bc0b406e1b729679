#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace uresim::rng {

// Finalizer from the splitmix64 generator; used to decorrelate seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) noexcept {
  return splitmix64(seed ^ splitmix64(salt));
}

// Derives the seed of a named substream from a master seed. Streams with
// distinct names are independent; toggling a consumer of one stream does not
// perturb the draws of another.
constexpr std::uint64_t stream_seed(std::uint64_t master,
                                    std::string_view name) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char ch : name) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return mix(master, h);
}

// Deterministic random engine. All helpers avoid std distributions so the
// draw sequence is identical on every platform for a given seed.
class Engine {
 public:
  explicit Engine(std::uint64_t seed) : gen_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform01() < p; }

  // Uniform integer in [0, n); n must be positive. Lemire's method.
  std::uint64_t uniform_below(std::uint64_t n) {
    unsigned __int128 wide = static_cast<unsigned __int128>(gen_()) * n;
    auto low = static_cast<std::uint64_t>(wide);
    if (low < n) {
      const std::uint64_t threshold = -n % n;
      while (low < threshold) {
        wide = static_cast<unsigned __int128>(gen_()) * n;
        low = static_cast<std::uint64_t>(wide);
      }
    }
    return static_cast<std::uint64_t>(wide >> 64);
  }

  // Exact Poisson sample via inversion by sequential search. Intended for
  // the small means this simulator works with (not a normal approximation).
  long long poisson(double mean) {
    if (mean <= 0.0) return 0;
    const double u = uniform01();
    double term = std::exp(-mean);
    double cum = term;
    long long k = 0;
    const long long cap = 1024 + static_cast<long long>(16.0 * mean);
    while (u > cum && k < cap) {
      ++k;
      term *= mean / static_cast<double>(k);
      cum += term;
    }
    return k;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace uresim::rng
