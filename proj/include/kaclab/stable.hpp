#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <vector>

#include "kaclab/rng.hpp"
#include "kaclab/stats.hpp"

namespace kaclab {

struct RequestOutOfAsymptoticRange : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scale-lambda parametrization:
//   alpha != 1, 2 : log cf = -lambda |xi|^alpha (1 - i beta tan(pi alpha/2) sgn xi)
//   alpha == 1    : log cf = -lambda |xi| (1 + 2i beta/pi log|xi| sgn xi) + i gamma0 xi
//   alpha == 2    : log cf = -lambda xi^2          (variance 2 lambda)
// lambda == 0 marks the degenerate point mass at gamma0 (gamma0 = 0 unless alpha = 1).
struct StableParams {
  double alpha = 2.0;
  double lambda = 0.0;
  double beta = 0.0;
  double gamma0 = 0.0;  // position, used only for alpha = 1
};

inline void validate_stable(const StableParams& p) {
  if (!(p.alpha > 0.0 && p.alpha <= 2.0)) {
    throw std::invalid_argument("stable: alpha must lie in (0,2]");
  }
  if (!(p.lambda >= 0.0)) throw std::invalid_argument("stable: lambda must be >= 0");
  if (!(std::abs(p.beta) <= 1.0)) throw std::invalid_argument("stable: |beta| must be <= 1");
  if (p.alpha == 1.0 && p.beta != 0.0) {
    throw std::invalid_argument("stable: alpha = 1 is supported only with beta = 0");
  }
}

inline std::complex<double> cf_stable(const StableParams& p, double xi) {
  validate_stable(p);
  if (xi == 0.0) return {1.0, 0.0};
  double ax = std::abs(xi);
  double sgn = xi > 0.0 ? 1.0 : -1.0;
  if (p.alpha == 2.0) return {std::exp(-p.lambda * xi * xi), 0.0};
  if (p.alpha == 1.0) {
    std::complex<double> expo(-p.lambda * ax,
                              -p.lambda * ax * (2.0 * p.beta / M_PI) * std::log(ax) * sgn +
                                  p.gamma0 * xi);
    return std::exp(expo);
  }
  double tanpa = std::tan(0.5 * M_PI * p.alpha);
  std::complex<double> expo(-p.lambda * std::pow(ax, p.alpha),
                            p.lambda * std::pow(ax, p.alpha) * p.beta * tanpa * sgn);
  return std::exp(expo);
}

// Tail weights c0 +/- (coefficients of |x|^{-alpha} in the two tail cdfs) to
// cf parameters. Zero total weight marks the degenerate law.
inline StableParams params_from_tails(double c0_plus, double c0_minus, double alpha,
                                      double gamma0 = 0.0) {
  if (!(alpha > 0.0 && alpha < 2.0)) {
    throw std::invalid_argument("params_from_tails: alpha must lie in (0,2)");
  }
  if (!(c0_plus >= 0.0) || !(c0_minus >= 0.0)) {
    throw std::invalid_argument("params_from_tails: tail weights must be >= 0");
  }
  double total = c0_plus + c0_minus;
  StableParams p;
  p.alpha = alpha;
  p.gamma0 = gamma0;
  if (total == 0.0) {
    p.lambda = 0.0;
    p.beta = 0.0;
    return p;
  }
  p.beta = (c0_plus - c0_minus) / total;
  if (alpha == 1.0 && p.beta != 0.0) {
    throw std::invalid_argument("params_from_tails: alpha = 1 requires symmetric tails");
  }
  p.lambda = total * M_PI / (2.0 * std::tgamma(alpha) * std::sin(0.5 * M_PI * alpha));
  return p;
}

namespace detail {

// Skewness and scale in the rotated parametrization the sampler and the tail
// series use: tan(pi beta_tilde/2) = beta tan(pi alpha/2), lambda_tilde =
// lambda / cos(pi beta_tilde/2).
inline double beta_tilde_of(double alpha, double beta) {
  if (alpha == 1.0 || alpha == 2.0) return 0.0;
  return (2.0 / M_PI) * std::atan(beta * std::tan(0.5 * M_PI * alpha));
}

inline double lambda_tilde_of(double lambda, double beta_tilde) {
  return lambda / std::cos(0.5 * M_PI * beta_tilde);
}

}  // namespace detail

inline double sample_stable(const StableParams& p, Rng& rng) {
  validate_stable(p);
  if (p.lambda == 0.0) return p.alpha == 1.0 ? p.gamma0 : 0.0;
  if (p.alpha == 2.0) return std::sqrt(2.0 * p.lambda) * rng.normal();
  if (p.alpha == 1.0) {
    return p.gamma0 + p.lambda * std::tan(M_PI * (rng.uniform_open() - 0.5));
  }
  // Chambers-Mallows-Stuck in the rotated parametrization
  double bt = detail::beta_tilde_of(p.alpha, p.beta);
  double lt = detail::lambda_tilde_of(p.lambda, bt);
  double th0 = 0.5 * M_PI * bt / p.alpha;
  double v = M_PI * (rng.uniform_open() - 0.5);
  double w = rng.exponential();
  double a = p.alpha * (v + th0);
  double core = std::sin(a) / std::pow(std::cos(v), 1.0 / p.alpha) *
                std::pow(std::cos(v - a) / w, (1.0 - p.alpha) / p.alpha);
  return std::pow(lt, 1.0 / p.alpha) * core;
}

// Coefficients of the tail series: the upper tail satisfies
//   1 - F(x) = sum_i c_plus[i] x^{-order[i]} + remainder,
// the lower tail F(-x) likewise with c_minus. order[i] = alpha (i+1).
// On a maximally skewed thin side every coefficient vanishes (the tail decays
// faster than any power); thin_left / thin_right flag that.
struct TailCoefficients {
  double alpha = 2.0;
  std::vector<double> order;
  std::vector<double> c_plus, c_minus;
  double lambda_tilde = 0.0, beta_tilde = 0.0;
  bool thin_right = false, thin_left = false;
};

inline TailCoefficients tail_coefficients(const StableParams& p, int k) {
  validate_stable(p);
  if (k < 1) throw std::invalid_argument("tail_coefficients: k must be >= 1");
  if (p.alpha == 2.0 && p.lambda > 0.0) {
    TailCoefficients tc;
    tc.alpha = 2.0;
    tc.thin_left = tc.thin_right = true;
    for (int i = 0; i < k; ++i) {
      tc.order.push_back(2.0 * (i + 1));
      tc.c_plus.push_back(0.0);
      tc.c_minus.push_back(0.0);
    }
    return tc;
  }
  TailCoefficients tc;
  tc.alpha = p.alpha;
  tc.beta_tilde = detail::beta_tilde_of(p.alpha, p.beta);
  tc.lambda_tilde = p.lambda == 0.0 ? 0.0 : detail::lambda_tilde_of(p.lambda, tc.beta_tilde);
  tc.thin_right = p.beta == -1.0;
  tc.thin_left = p.beta == 1.0;
  double lt_pow = 1.0;
  double fact = 1.0;  // (i+1)!
  for (int i = 0; i < k; ++i) {
    lt_pow *= tc.lambda_tilde;
    fact *= i + 1.0;
    double sign = (i % 2 == 0) ? 1.0 : -1.0;
    double common = sign * lt_pow * std::tgamma(p.alpha * (i + 1)) / (M_PI * fact);
    // structural zeros (sine argument at a multiple of pi) must come out
    // exactly 0 so vanishing terms stay recognizable downstream
    auto tail_sine = [i](double skew) {
      double t = 0.5 * (i + 1) * skew;
      if (std::abs(t - std::round(t)) <= 1e-9 * (i + 1)) return 0.0;
      return std::sin(M_PI * t);
    };
    double ap = tail_sine(p.alpha + tc.beta_tilde);
    double am = tail_sine(p.alpha - tc.beta_tilde);
    tc.order.push_back(p.alpha * (i + 1));
    tc.c_plus.push_back(tc.thin_right ? 0.0 : common * ap);
    tc.c_minus.push_back(tc.thin_left ? 0.0 : common * am);
  }
  return tc;
}

// k-term tail probability: P{X > x} for x > 0, P{X < x} for x < 0. The next
// two omitted terms estimate the remainder (two, because symmetric laws zero
// out every other coefficient); if the estimate exceeds tol the request is
// outside the range where the expansion is trustworthy.
inline double stable_cdf_tail(const StableParams& p, double x, int k, double tol) {
  if (x == 0.0) throw std::invalid_argument("stable_cdf_tail: x must be nonzero");
  TailCoefficients tc = tail_coefficients(p, k + 2);
  double ax = std::abs(x);
  const auto& cs = x > 0.0 ? tc.c_plus : tc.c_minus;
  double sum = 0.0;
  for (int i = 0; i < k; ++i) sum += cs[i] * std::pow(ax, -tc.order[i]);
  double next = std::max(std::abs(cs[k]) * std::pow(ax, -tc.order[k]),
                         std::abs(cs[k + 1]) * std::pow(ax, -tc.order[k + 1]));
  if (next > tol) {
    throw RequestOutOfAsymptoticRange("stable_cdf_tail: remainder estimate above tolerance");
  }
  return sum;
}

// Closed-form cdfs for the two laws that admit them; preferred over the tail
// series whenever applicable.
inline std::optional<double> stable_cdf_closed(const StableParams& p, double x) {
  validate_stable(p);
  if (p.lambda == 0.0) {
    double pos = p.alpha == 1.0 ? p.gamma0 : 0.0;
    return x < pos ? 0.0 : 1.0;
  }
  if (p.alpha == 2.0) return normal_cdf(x / std::sqrt(2.0 * p.lambda));
  if (p.alpha == 1.0) return 0.5 + std::atan((x - p.gamma0) / p.lambda) / M_PI;
  return std::nullopt;
}

}  // namespace kaclab
