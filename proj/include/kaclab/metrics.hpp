#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kaclab/stats.hpp"

namespace kaclab {

// A sorted sample standing in for the measure it was drawn from.
struct EmpiricalMeasure {
  std::vector<double> values;
  double t = 0.0;          // provenance: observation time
  std::uint64_t seed = 0;  // provenance: rng stream

  static EmpiricalMeasure from_samples(std::vector<double> v, double t = 0.0,
                                       std::uint64_t seed = 0) {
    if (v.empty()) {
      throw std::invalid_argument("EmpiricalMeasure: need at least one sample");
    }
    std::sort(v.begin(), v.end());
    return EmpiricalMeasure{std::move(v), t, seed};
  }
};

enum class Estimator { quantile, coupled, ks, chi };

inline std::string estimator_name(Estimator e) {
  switch (e) {
    case Estimator::quantile:
      return "quantile";
    case Estimator::coupled:
      return "coupled";
    case Estimator::ks:
      return "ks";
    case Estimator::chi:
      return "chi";
  }
  return "?";
}

inline Estimator estimator_from_name(const std::string& s) {
  if (s == "quantile") return Estimator::quantile;
  if (s == "coupled") return Estimator::coupled;
  if (s == "ks") return Estimator::ks;
  if (s == "chi") return Estimator::chi;
  throw std::invalid_argument("unknown estimator \"" + s + "\"");
}

// Distance value under the (1 and 1/p) convention: the p-th root is taken
// only for p > 1; below that the raw p-th power mean is already a metric.
struct DistanceEstimate {
  double value = 0.0;
  std::optional<double> stderr_;  // absent for the plain quantile estimator
  Estimator estimator = Estimator::quantile;
  double p = 1.0;
};

namespace detail {

inline double root_convention(double mean_pow, double p) {
  return p > 1.0 ? std::pow(mean_pow, 1.0 / p) : mean_pow;
}

inline void require_sorted(const EmpiricalMeasure& m, const char* who) {
  if (m.values.empty() ||
      !std::is_sorted(m.values.begin(), m.values.end())) {
    throw std::invalid_argument(std::string(who) +
                                ": measure must be nonempty and sorted");
  }
}

}  // namespace detail

// d_p between two empirical measures via the quantile coupling. For p >= 1
// (convex cost) the sorted pairing is the optimal transport plan on the line,
// so the value is exact; for p < 1 (concave cost) crossing pairings can be
// strictly cheaper, so the value is an upper bound for the infimum over
// couplings. Unequal sizes need no resampling: both
// quantile functions are piecewise constant, so the integral over u is a walk
// across the merged breakpoint grid i/n, j/m (equivalent to resampling each
// measure to the common refinement, with no randomness involved). Breakpoints
// are compared in integer units of 1/(n*m) to keep the walk exact.
inline DistanceEstimate wasserstein_empirical(const EmpiricalMeasure& a,
                                              const EmpiricalMeasure& b,
                                              double p) {
  if (!(p > 0.0)) {
    throw std::invalid_argument("wasserstein_empirical: p must be > 0");
  }
  detail::require_sorted(a, "wasserstein_empirical");
  detail::require_sorted(b, "wasserstein_empirical");
  const auto& x = a.values;
  const auto& y = b.values;
  const unsigned long long n = x.size(), m = y.size();
  unsigned long long prev = 0;
  long double acc = 0.0;
  std::size_t i = 0, j = 0;
  while (i < n && j < m) {
    unsigned long long bi = (i + 1) * m, bj = (j + 1) * n;
    unsigned long long nxt = std::min(bi, bj);
    acc += static_cast<long double>(nxt - prev) *
           std::pow(std::abs(x[i] - y[j]), p);
    prev = nxt;
    if (bi == nxt) ++i;
    if (bj == nxt) ++j;
  }
  double mean_pow = static_cast<double>(acc / static_cast<long double>(n * m));
  return {detail::root_convention(mean_pow, p), std::nullopt,
          Estimator::quantile, p};
}

// Upper-bound estimator of d_p from coupled draws (v, w), with a jackknife
// standard error computed on the transformed value.
inline DistanceEstimate wasserstein_coupled(
    const std::vector<std::pair<double, double>>& pairs, double p) {
  if (!(p > 0.0)) {
    throw std::invalid_argument("wasserstein_coupled: p must be > 0");
  }
  if (pairs.empty()) {
    throw std::invalid_argument("wasserstein_coupled: no pairs");
  }
  const std::size_t n = pairs.size();
  std::vector<double> pw(n);
  long double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    pw[i] = std::pow(std::abs(pairs[i].first - pairs[i].second), p);
    sum += pw[i];
  }
  double value = detail::root_convention(
      static_cast<double>(sum / static_cast<long double>(n)), p);
  std::optional<double> se;
  if (n >= 2) {
    std::vector<double> loo(n);
    long double mean_loo = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      loo[i] = detail::root_convention(
          static_cast<double>((sum - pw[i]) / static_cast<long double>(n - 1)),
          p);
      mean_loo += loo[i];
    }
    mean_loo /= static_cast<long double>(n);
    long double ss = 0.0;
    for (double v : loo) {
      long double d = v - mean_loo;
      ss += d * d;
    }
    se = std::sqrt(static_cast<double>(ss * (n - 1) / n));
  }
  return {value, se, Estimator::coupled, p};
}

inline double kolmogorov_distance(const EmpiricalMeasure& a,
                                  const std::function<double(double)>& cdf) {
  return kolmogorov_distance(a.values, cdf);
}

// Geometric grid for the Fourier metric; endpoints included exactly.
inline std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) {
    throw std::invalid_argument("log_grid: need 0 < lo < hi and n >= 2");
  }
  std::vector<double> g(static_cast<std::size_t>(n));
  double r = std::log(hi / lo) / (n - 1);
  for (int i = 0; i < n; ++i) {
    g[static_cast<std::size_t>(i)] = lo * std::exp(r * i);
  }
  g.back() = hi;
  return g;
}

// Inserting geometric midpoints keeps every old node, so grid suprema are
// monotone nondecreasing under this refinement.
inline std::vector<double> refine_log_grid(const std::vector<double>& g) {
  if (g.size() < 2) throw std::invalid_argument("refine_log_grid: need >= 2 nodes");
  std::vector<double> out;
  out.reserve(2 * g.size());
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    out.push_back(g[i]);
    out.push_back(std::sqrt(g[i] * g[i + 1]));
  }
  out.push_back(g.back());
  return out;
}

using CharacteristicFn = std::function<std::complex<double>(double)>;

// Grid lower bound of the weighted sup metric sup_xi |f - g| / |xi|^s.
inline double fourier_distance(const CharacteristicFn& cf_a,
                               const CharacteristicFn& cf_b, double s,
                               const std::vector<double>& grid) {
  if (!(s > 0.0)) {
    throw std::invalid_argument("fourier_distance: s must be > 0");
  }
  if (grid.empty()) {
    throw std::invalid_argument("fourier_distance: empty grid");
  }
  double best = 0.0;
  for (double xi : grid) {
    if (xi == 0.0) {
      throw std::invalid_argument("fourier_distance: grid contains 0");
    }
    best = std::max(best,
                    std::abs(cf_a(xi) - cf_b(xi)) / std::pow(std::abs(xi), s));
  }
  return best;
}

// Refine the default 64-point grid on [1e-3, 1e2] by factor 2 until the
// reported supremum moves by less than 1%; still a lower bound of the sup.
inline double fourier_distance_refined(const CharacteristicFn& cf_a,
                                       const CharacteristicFn& cf_b, double s,
                                       double lo = 1e-3, double hi = 1e2,
                                       int initial_points = 64) {
  std::vector<double> grid = log_grid(lo, hi, initial_points);
  double value = fourier_distance(cf_a, cf_b, s, grid);
  for (int round = 0; round < 12; ++round) {
    grid = refine_log_grid(grid);
    double next = fourier_distance(cf_a, cf_b, s, grid);
    bool settled = next <= value * 1.01;  // next >= value by grid nesting
    value = next;
    if (settled) break;
  }
  return value;
}

// d_1 control through the chi metric when second moments are bounded:
//   d_1 <= C * chi^(1/(3(2+delta))), delta in (0,1),
//   C = (2^(2/3)+2^(-1/3)) M2^(1/3) (1/pi)
//       (2^((3+2d)/(2+d))/(3+2d) + 4/2^(1/(2+d))).
inline double d1_bound_from_chi(double chi_value, double second_moment_bound,
                                double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("d1_bound_from_chi: delta must lie in (0,1)");
  }
  if (!(chi_value >= 0.0) || !(second_moment_bound >= 0.0)) {
    throw std::invalid_argument("d1_bound_from_chi: negative input");
  }
  double d = delta;
  double c = (std::pow(2.0, 2.0 / 3.0) + std::pow(2.0, -1.0 / 3.0)) *
             std::cbrt(second_moment_bound) * (1.0 / M_PI) *
             (std::pow(2.0, (3.0 + 2.0 * d) / (2.0 + d)) / (3.0 + 2.0 * d) +
              4.0 / std::pow(2.0, 1.0 / (2.0 + d)));
  return c * std::pow(chi_value, 1.0 / (3.0 * (2.0 + d)));
}

// Empirical d_p summands |X - Y|^p have infinite variance once the tails sit
// at index alpha < 2 and p exceeds alpha; quantitative decay claims should
// then route through the coupled estimator instead.
inline bool empirical_tail_reliable(double alpha, double p) {
  return !(alpha < 2.0 && p > alpha);
}

class FitUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // weighted rms of the log residuals
  double slope_stderr = 0.0;
  int used = 0;  // points surviving the noise floor
};

// Weighted least squares of log(estimate) against t, weights 1/(relative
// stderr)^2. A point whose estimate is not safely above its own standard
// error (estimate <= 3 stderr) carries no slope information and is excluded;
// so is any nonpositive estimate. An empty stderr vector marks exact inputs.
inline DecayFit decay_fit(const std::vector<double>& times,
                          const std::vector<double>& estimates,
                          const std::vector<double>& stderrs) {
  if (times.size() != estimates.size() ||
      (!stderrs.empty() && stderrs.size() != times.size())) {
    throw std::invalid_argument("decay_fit: size mismatch");
  }
  std::vector<double> t, y, w;
  for (std::size_t i = 0; i < times.size(); ++i) {
    double e = estimates[i];
    double se = stderrs.empty() ? 0.0 : stderrs[i];
    if (!(e > 0.0) || e <= 3.0 * se) continue;  // noise floor
    double rel = se / e;
    t.push_back(times[i]);
    y.push_back(std::log(e));
    w.push_back(1.0 / std::max(rel * rel, 1e-24));
  }
  if (t.size() < 4) {
    throw FitUnavailable("decay_fit: fewer than 4 points above the noise floor");
  }
  long double sw = 0, st = 0, stt = 0, sy = 0, sty = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sw += w[i];
    st += w[i] * t[i];
    stt += w[i] * t[i] * t[i];
    sy += w[i] * y[i];
    sty += w[i] * t[i] * y[i];
  }
  long double det = sw * stt - st * st;
  if (!(det > 0)) throw FitUnavailable("decay_fit: degenerate time grid");
  DecayFit fit;
  fit.slope = static_cast<double>((sw * sty - st * sy) / det);
  fit.intercept = static_cast<double>((stt * sy - st * sty) / det);
  fit.slope_stderr = std::sqrt(static_cast<double>(sw / det));
  long double ss = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    long double r = y[i] - (fit.intercept + fit.slope * t[i]);
    ss += w[i] * r * r;
  }
  fit.residual = std::sqrt(static_cast<double>(ss / sw));
  fit.used = static_cast<int>(t.size());
  return fit;
}

}  // namespace kaclab
