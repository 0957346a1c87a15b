#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "kaclab/datum.hpp"
#include "kaclab/kernel.hpp"
#include "kaclab/rng.hpp"
#include "kaclab/stats.hpp"

namespace kaclab {

struct CouplingUnavailable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t default_tree_cap = std::size_t{1} << 20;

// Probability that the leaf count at time t exceeds cap, i.e. the tail mass a
// capped run discards: (1 - e^-t)^cap.
inline double truncation_mass(double t, std::size_t cap) {
  if (t <= 0.0) return 0.0;
  return std::exp(static_cast<double>(cap) * std::log1p(-std::exp(-t)));
}

struct TruncationCounter {
  std::uint64_t attempts = 0;
  std::uint64_t truncated = 0;
  double rate() const {
    return attempts == 0 ? 0.0
                         : static_cast<double>(truncated) /
                               static_cast<double>(attempts);
  }
};

struct WeightArray {
  CollisionKernel kernel;
  std::vector<double> weights{1.0};  // size-1 state is exactly [1]

  explicit WeightArray(CollisionKernel k) : kernel(std::move(k)) {}
};

// One split: a uniformly chosen entry beta is replaced by beta*L and beta*R
// is appended. The resulting weight multiset is exchangeable, so this O(1)
// step is equivalent in law to order-preserving insertion.
inline void grow_weights(WeightArray& a, std::size_t steps, Rng& rng) {
  a.weights.reserve(a.weights.size() + steps);
  for (std::size_t s = 0; s < steps; ++s) {
    std::size_t i = rng.below(a.weights.size());
    auto [l, r] = a.kernel.sample(rng);
    double b = a.weights[i];
    a.weights[i] = b * l;
    a.weights.push_back(b * r);
  }
}

// Leaf count at time t: geometric on {1,2,...} with success probability
// e^-t, sampled by inversion. Returned as a double-backed count so that the
// astronomically large draws possible at big t do not overflow; callers cap.
inline std::uint64_t sample_n_t(double t, Rng& rng) {
  if (t < 0.0) throw std::invalid_argument("sample_n_t: t must be >= 0");
  if (t == 0.0) return 1;
  double logq = std::log1p(-std::exp(-t));  // log(1 - e^-t) < 0
  double n = 1.0 + std::floor(std::log(rng.uniform_open()) / logq);
  if (n >= 1.8e19) return UINT64_MAX;
  return static_cast<std::uint64_t>(n);
}

inline double weight_power_sum(const std::vector<double>& w, double p) {
  double s = 0.0;
  for (double x : w) s += pow_conv(x, p);
  return s;
}

// E[sum_j beta_{j,n}^p] = Gamma(n + S(p)) / (Gamma(n) Gamma(S(p) + 1)),
// finite whenever S(p) > -1.
inline double weight_p_sum_reference(const CollisionKernel& kernel, double p,
                                     std::uint64_t n) {
  double sp = kernel.s_function(p);
  if (!(sp > -1.0)) {
    throw std::invalid_argument("weight_p_sum_reference: need S(p) > -1");
  }
  double dn = static_cast<double>(n);
  return std::exp(std::lgamma(dn + sp) - std::lgamma(dn) -
                  std::lgamma(sp + 1.0));
}

inline MeanStderr weight_p_sum_stats(const CollisionKernel& kernel, double p,
                                     std::size_t n, std::size_t replicas,
                                     Rng& rng) {
  if (n < 1) throw std::invalid_argument("weight_p_sum_stats: need n >= 1");
  std::vector<double> sums(replicas);
  for (auto& s : sums) {
    WeightArray a(kernel);
    grow_weights(a, n - 1, rng);
    s = weight_power_sum(a.weights, p);
  }
  return mean_stderr(sums);
}

// Time-randomized weight moment; E equals e^{t S(p)}.
inline MeanStderr time_randomized_p_sum_stats(
    const CollisionKernel& kernel, double p, double t, std::size_t replicas,
    Rng& rng, std::size_t cap = default_tree_cap,
    TruncationCounter* counter = nullptr) {
  std::vector<double> sums;
  sums.reserve(replicas);
  for (std::size_t k = 0; k < replicas; ++k) {
    std::uint64_t n = sample_n_t(t, rng);
    if (counter) ++counter->attempts;
    if (n > cap) {
      if (counter) ++counter->truncated;
      continue;
    }
    WeightArray a(kernel);
    grow_weights(a, static_cast<std::size_t>(n) - 1, rng);
    sums.push_back(weight_power_sum(a.weights, p));
  }
  return mean_stderr(sums);
}

// One draw of V_t = sum_j beta_{j,N_t} X_j with X_j i.i.d. from the datum.
// A leaf count above cap aborts the replica (counted, value withheld) rather
// than silently biasing the sum.
inline std::optional<double> sample_v_t(const CollisionKernel& kernel,
                                        const InitialDatum& datum, double t,
                                        Rng& rng,
                                        std::size_t cap = default_tree_cap,
                                        TruncationCounter* counter = nullptr) {
  std::uint64_t n = sample_n_t(t, rng);
  if (counter) ++counter->attempts;
  if (n > cap) {
    if (counter) ++counter->truncated;
    return std::nullopt;
  }
  WeightArray a(kernel);
  grow_weights(a, static_cast<std::size_t>(n) - 1, rng);
  double v = 0.0;
  for (double b : a.weights) v += b * datum.sample(rng);
  return v;
}

// Common-uniform coupling: one weight array and one uniform per leaf drive
// both quantile functions, so the second coordinate is distributed exactly
// as the steady law and the first exactly as mu_t.
inline std::optional<std::pair<double, double>> coupled_pair(
    const CollisionKernel& kernel, const InitialDatum& datum,
    const std::function<double(double)>& steady_quantile, double t, Rng& rng,
    std::size_t cap = default_tree_cap, TruncationCounter* counter = nullptr) {
  if (!steady_quantile) {
    throw CouplingUnavailable("coupled_pair: no steady quantile function");
  }
  std::uint64_t n = sample_n_t(t, rng);
  if (counter) ++counter->attempts;
  if (n > cap) {
    if (counter) ++counter->truncated;
    return std::nullopt;
  }
  WeightArray a(kernel);
  grow_weights(a, static_cast<std::size_t>(n) - 1, rng);
  double v0 = 0.0, vinf = 0.0;
  for (double b : a.weights) {
    double u = rng.uniform_open();
    v0 += b * datum.quantile(u);
    vinf += b * steady_quantile(u);
  }
  return std::make_pair(v0, vinf);
}

}  // namespace kaclab
