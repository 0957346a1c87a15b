#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace kaclab {

// splitmix64 finalizer; used to turn (master seed, replica index) pairs into
// decorrelated stream seeds so replica results do not depend on thread layout.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

  // Stream for replica `index` of a run keyed by `master`. Results of a run
  // are defined by index order alone, never by scheduling.
  static Rng stream(std::uint64_t master, std::uint64_t index) {
    return Rng(splitmix64(master + 0x632be59bd9b4e019ull) ^ splitmix64(index));
  }

  std::uint64_t bits() { return gen_(); }

  // uniform on [0,1)
  double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

  // uniform on (0,1); never an endpoint, safe inside quantile transforms and logs
  double uniform_open() {
    return (static_cast<double>(bits() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::size_t below(std::size_t n) {
    std::size_t k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

  double exponential() { return -std::log(uniform_open()); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // polar Box-Muller
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace kaclab
