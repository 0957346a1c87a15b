#pragma once

// Decides whether the p-Wasserstein distance between an initial law and the
// steady state is provably finite. The caller declares how the initial cdf
// behaves in both tails (expansion coefficients, a remainder envelope, the
// centering, optionally a one-sided moment); the checker compares the
// declaration against the steady-state tail targets and verifies the spectral
// margin the finiteness criterion needs. Verdicts say "established" or
// "not established": a failed check means the criterion does not apply, not
// that the distance is infinite.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kaclab/fixed_point.hpp"
#include "kaclab/kernel.hpp"
#include "kaclab/stable.hpp"
#include "kaclab/text.hpp"

namespace kaclab {

// Number of tail-expansion terms that must be matched for order p:
// floor(1 + (p - alpha)/(p alpha)). The 1e-12 dust guard keeps arguments
// that land exactly on an integer (alpha 0.25, p 0.5 gives 3) from being
// pushed below it by rounding noise in alpha.
inline int required_order(double alpha, double p) {
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("required_order: alpha must be > 0");
  }
  if (!(p > alpha)) {
    throw std::invalid_argument("required_order: need p > alpha");
  }
  double x = 1.0 + (p - alpha) / (p * alpha);
  return static_cast<int>(std::floor(x + 1e-12));
}

enum class RemainderFamily { power, log_power, custom };

// Envelope zeta for the declared tail remainder. After the matched terms the
// initial cdf must be bounded by zeta(|x|) / |x|^{alpha + (p-alpha)/p}, and
// the criterion needs the integral of zeta(x)^p / x over [B, infinity) to be
// finite:
//   power:     zeta(x) = x^{-epsilon}              (integrable for eps > 0)
//   log_power: zeta(x) = (log x)^{-(1+epsilon)/p}  (integrable for eps > 0)
//   custom:    caller-supplied envelope; integrability must be declared.
struct Remainder {
  RemainderFamily family = RemainderFamily::power;
  double epsilon = 0.0;
  std::optional<bool> integrable;  // custom only

  static Remainder power(double eps) {
    Remainder r;
    r.family = RemainderFamily::power;
    r.epsilon = eps;
    return r;
  }
  static Remainder log_power(double eps) {
    Remainder r;
    r.family = RemainderFamily::log_power;
    r.epsilon = eps;
    return r;
  }
  static Remainder custom(bool integrable_declared) {
    Remainder r;
    r.family = RemainderFamily::custom;
    r.integrable = integrable_declared;
    return r;
  }
};

enum class MomentSide { negative_side, positive_side, both_sides };

// Declared tail behaviour of an initial law. c_minus[i] (resp. c_plus[i])
// multiplies |x|^{-(i+1) alpha} in the left (right) tail cdf, the remainder
// envelope bounds what is left after the declared terms, gamma0 is the
// alpha = 1 centering, and one_sided_moment records on which side the p-th
// absolute moment is known to be finite.
struct TailSpec {
  std::vector<double> c_minus, c_plus;
  Remainder remainder;
  double gamma0 = 0.0;
  std::optional<MomentSide> one_sided_moment;
};

struct ConditionReport {
  std::string condition;
  bool passed = false;
  std::string note;
};

struct Verdict {
  bool established = false;
  int k_used = 0;
  // Steady-state coefficient targets the declaration was compared against.
  std::vector<double> target_minus, target_plus;
  std::vector<ConditionReport> reasons;
};

namespace detail {

inline void validate_tail_spec(const TailSpec& tail) {
  if (tail.c_minus.size() != tail.c_plus.size()) {
    throw std::invalid_argument("check_finiteness: mismatched coefficient list lengths");
  }
  switch (tail.remainder.family) {
    case RemainderFamily::power:
    case RemainderFamily::log_power:
      if (!(tail.remainder.epsilon > 0.0)) {
        throw std::invalid_argument("check_finiteness: remainder epsilon must be > 0");
      }
      break;
    case RemainderFamily::custom:
      if (!tail.remainder.integrable.has_value()) {
        throw std::invalid_argument(
            "check_finiteness: custom remainder must declare integrability");
      }
      break;
  }
}

inline bool coefficient_matches(double declared, double target) {
  return std::abs(declared - target) <=
         1e-9 * std::max(std::abs(declared), std::abs(target));
}

}  // namespace detail

// Runs the finiteness criterion for d_p(initial, steady). Checks, in order:
// the spectral margin (S < 0 strictly beyond alpha + (p-alpha)/p, or beyond
// max(p, alpha + (p-alpha)/p) when the steady law is one-sided), agreement of
// the declared coefficients with the steady targets on every heavy side,
// integrability of the remainder envelope, and, for one-sided steady laws,
// a declared finite p-th moment on the thin side. A steady law with zero
// tail weight degenerates to a point mass and reduces to a plain moment
// condition on the initial law. A nonzero centering is removed by a common
// shift, which leaves finiteness unchanged and is noted in the verdict.
inline Verdict check_finiteness(const TailSpec& tail, const CollisionKernel& kernel,
                                const StableParams& stable, double p) {
  validate_stable(stable);
  double alpha = stable.alpha;
  if (!(alpha < 2.0)) {
    throw std::invalid_argument(
        "check_finiteness: the tail-expansion criterion needs alpha < 2");
  }
  if (std::abs(find_alpha(kernel) - alpha) > 1e-9) {
    throw std::invalid_argument("check_finiteness: stable index does not match the kernel");
  }
  if (!(p > alpha)) {
    throw std::invalid_argument("check_finiteness: need p > alpha");
  }
  H0Report h0 = validate_h0(kernel, p);
  if (!h0.positivity_ok || !h0.alpha_ok || !h0.nondegenerate_ok) {
    throw std::invalid_argument(
        "check_finiteness: kernel fails the positivity/nondegeneracy hypotheses");
  }
  if (alpha != 1.0 && (tail.gamma0 != 0.0 || stable.gamma0 != 0.0)) {
    throw std::invalid_argument("check_finiteness: gamma0 is a centering for alpha = 1 only");
  }
  detail::validate_tail_spec(tail);

  Verdict out;
  out.k_used = required_order(alpha, p);
  bool shifted = tail.gamma0 != 0.0 || stable.gamma0 != 0.0;

  if (stable.lambda == 0.0) {
    // Zero tail weight: the steady law is a point mass (at the centering when
    // alpha = 1), so the distance is finite exactly when the initial law has
    // a finite p-th absolute moment on both sides.
    ConditionReport deg;
    deg.condition = "degenerate steady state";
    deg.passed = true;
    deg.note = alpha == 1.0
                   ? "zero scale: the steady law is a point mass (finite-mean regime)"
                   : "zero total tail weight: the steady law is a point mass";
    out.reasons.push_back(deg);
    ConditionReport mom;
    mom.condition = "initial p-th moment";
    mom.passed = tail.one_sided_moment.has_value() &&
                 *tail.one_sided_moment == MomentSide::both_sides;
    mom.note = mom.passed
                   ? "declared finite on both sides"
                   : "needs a declared finite p-th absolute moment on both sides";
    out.reasons.push_back(mom);
    if (shifted) {
      ConditionReport sh;
      sh.condition = "centering";
      sh.passed = true;
      sh.note = "gamma0 removed by a common shift; finiteness is unchanged";
      out.reasons.push_back(sh);
    }
    out.established = mom.passed;
    return out;
  }

  double beta = stable.beta;
  bool one_sided = std::abs(std::abs(beta) - 1.0) <= 1e-12;

  // (a) spectral margin: some s strictly above the threshold must have
  // S(s) < 0. Convexity makes {S < 0} the interval (alpha, p_bar), so the
  // margin holds iff the threshold lies strictly below p_bar. Boundary
  // equality is rejected.
  double base = alpha + (p - alpha) / p;
  double threshold = one_sided ? std::max(p, base) : base;
  double pb = p_bar(kernel, alpha);
  ConditionReport margin;
  margin.condition = "spectral margin";
  margin.passed = pb > threshold;
  margin.note = "needs S < 0 beyond " + format_double(threshold) +
                "; negativity holds up to " + format_double(pb);
  out.reasons.push_back(margin);

  // (b) declared coefficients against the steady targets. Only heavy sides
  // are compared: a one-sided steady law constrains the matching tail, while
  // the thin side is handled by the moment declaration below.
  StableParams centered = stable;
  centered.gamma0 = 0.0;
  SteadyTail st = steady_tail_expansion(kernel, centered, out.k_used);
  out.target_minus = st.c_minus;
  out.target_plus = st.c_plus;
  ConditionReport coeff;
  coeff.condition = "tail coefficients";
  if (st.truncated || st.k < out.k_used) {
    coeff.passed = false;
    coeff.note = "steady expansion unavailable at order " + std::to_string(st.k) +
                 " of " + std::to_string(out.k_used);
  } else {
    bool need_minus = !one_sided || beta < 0.0;
    bool need_plus = !one_sided || beta > 0.0;
    std::vector<std::string> failures;
    auto compare_side = [&](const std::vector<double>& declared,
                            const std::vector<double>& target, const char* side) {
      if (declared.size() < static_cast<std::size_t>(out.k_used)) {
        failures.push_back(std::string("declared ") + side +
                           " expansion shorter than the required " +
                           std::to_string(out.k_used) + " terms");
        return;
      }
      for (int i = 0; i < out.k_used; ++i) {
        std::size_t u = static_cast<std::size_t>(i);
        if (!detail::coefficient_matches(declared[u], target[u])) {
          failures.push_back("coefficient mismatch at order " + std::to_string(i) + " (" +
                             side + ": declared " + format_double(declared[u]) +
                             ", required " + format_double(target[u]) + ")");
        }
      }
    };
    if (need_minus) compare_side(tail.c_minus, st.c_minus, "left");
    if (need_plus) compare_side(tail.c_plus, st.c_plus, "right");
    coeff.passed = failures.empty();
    if (coeff.passed) {
      coeff.note = "all " + std::to_string(out.k_used) + " required terms match";
    } else {
      std::string joined;
      for (std::size_t i = 0; i < failures.size(); ++i) {
        if (i) joined += "; ";
        joined += failures[i];
      }
      coeff.note = joined;
    }
  }
  out.reasons.push_back(coeff);

  // (c) remainder envelope integrability, in closed form for the built-in
  // families.
  ConditionReport rem;
  rem.condition = "remainder integrability";
  switch (tail.remainder.family) {
    case RemainderFamily::power:
      rem.passed = true;
      rem.note = "zeta(x) = x^-eps: the integrand x^{-eps p - 1} integrates for eps = " +
                 format_double(tail.remainder.epsilon) + " > 0";
      break;
    case RemainderFamily::log_power:
      rem.passed = true;
      rem.note = "zeta(x)^p = (log x)^{-(1+eps)}: integrates in d(log x) for eps = " +
                 format_double(tail.remainder.epsilon) + " > 0";
      break;
    case RemainderFamily::custom:
      rem.passed = *tail.remainder.integrable;
      rem.note = rem.passed ? "integrability declared by the caller"
                            : "declared not integrable";
      break;
  }
  out.reasons.push_back(rem);

  // (d) one-sided steady law: the thin side carries no expansion, so the
  // initial law must bring a finite p-th absolute moment there.
  if (one_sided) {
    MomentSide need = beta > 0.0 ? MomentSide::negative_side : MomentSide::positive_side;
    ConditionReport mom;
    mom.condition = "thin-side moment";
    mom.passed = tail.one_sided_moment.has_value() &&
                 (*tail.one_sided_moment == need ||
                  *tail.one_sided_moment == MomentSide::both_sides);
    const char* side = beta > 0.0 ? "negative" : "positive";
    mom.note = mom.passed
                   ? std::string("finite p-th moment declared on the ") + side + " side"
                   : std::string("needs a declared finite p-th moment on the ") + side +
                         " side";
    out.reasons.push_back(mom);
  }

  // (e) centering note: a common shift removes gamma0 without changing
  // whether the distance is finite.
  if (shifted) {
    ConditionReport sh;
    sh.condition = "centering";
    sh.passed = true;
    sh.note = "gamma0 removed by a common shift; finiteness is unchanged";
    out.reasons.push_back(sh);
  }

  out.established = true;
  for (const ConditionReport& r : out.reasons) out.established = out.established && r.passed;
  return out;
}

// TailSpec describing the steady state's own tails: the declared terms are
// the expansion targets themselves and the power envelope spends the gap
// between the expansion's remainder order and the envelope order the check
// needs. Whenever the criterion applies at all that gap is positive, so the
// resulting spec must come back established (the distance of the steady
// state to itself is zero). Throws when no admissible envelope exists.
inline TailSpec steady_self_tail_spec(const CollisionKernel& kernel,
                                      const StableParams& stable, double p) {
  int k = required_order(stable.alpha, p);
  SteadyTail st = steady_tail_expansion(kernel, stable, k);
  if (st.truncated || st.k < k) {
    throw std::invalid_argument("steady_self_tail_spec: expansion unavailable at order k");
  }
  double envelope = stable.alpha + (p - stable.alpha) / p;
  double eps = st.remainder_order - envelope;
  if (!(eps > 0.0)) {
    throw std::invalid_argument("steady_self_tail_spec: no admissible remainder envelope");
  }
  TailSpec spec;
  spec.c_minus = st.c_minus;
  spec.c_plus = st.c_plus;
  spec.remainder = Remainder::power(eps);
  spec.gamma0 = stable.gamma0;
  if (std::abs(std::abs(stable.beta) - 1.0) <= 1e-12) {
    spec.one_sided_moment = stable.beta > 0.0 ? MomentSide::negative_side
                                              : MomentSide::positive_side;
  }
  return spec;
}

}  // namespace kaclab
