#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "kaclab/quadrature.hpp"
#include "kaclab/rng.hpp"
#include "kaclab/text.hpp"

namespace kaclab {

struct NoRootInRange : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RateUndefined : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// x^q under the 0^0 := 0 convention: mass sitting at zero never contributes,
// so q -> E[L^q + R^q] - 1 evaluated at q=0 equals P{L>0} + P{R>0} - 1.
inline double pow_conv(double x, double q) {
  if (x == 0.0) return 0.0;
  if (q == 0.0) return 1.0;
  return std::pow(x, q);
}

// x^q * log(x) with the same convention (the zero atom contributes nothing).
inline double pow_log_conv(double x, double q) {
  if (x == 0.0) return 0.0;
  return pow_conv(x, q) * std::log(x);
}

// Recurrence down from the asymptotic regime; accurate to ~1e-14 for x > 0.
inline double digamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("digamma: x must be positive");
  double acc = 0.0;
  while (x < 10.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  double inv = 1.0 / x, inv2 = inv * inv;
  double series = std::log(x) - 0.5 * inv -
                  inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 -
                          inv2 * (1.0 / 240 - inv2 * (1.0 / 132)))));
  return acc + series;
}

struct KernelAtom {
  double l = 0.0, r = 0.0, w = 1.0;
};

// Distribution of the random contraction pair (L, R) >= 0 driving the
// collision operator. Immutable after construction; cheap to copy.
class CollisionKernel {
  struct Uniform {};
  struct InelasticKac {
    double d;
  };
  struct Deterministic {
    double l, r;
  };
  struct Discrete {
    std::vector<KernelAtom> atoms;
  };
  struct AngleMap {
    std::shared_ptr<const std::function<double(double)>> l, r;
  };
  using Repr = std::variant<Uniform, InelasticKac, Deterministic, Discrete, AngleMap>;

 public:
  static CollisionKernel uniform() { return CollisionKernel(Uniform{}); }

  // L = |cos T|^{1+d}, R = |sin T|^{1+d} with T uniform on the circle
  static CollisionKernel inelastic_kac(double d) {
    if (!(d >= 0.0)) throw std::invalid_argument("inelastic_kac: d must be >= 0");
    return CollisionKernel(InelasticKac{d});
  }

  static CollisionKernel deterministic(double l, double r) {
    if (!(l >= 0.0) || !(r >= 0.0)) {
      throw std::invalid_argument("deterministic: contractions must be >= 0");
    }
    return CollisionKernel(Deterministic{l, r});
  }

  static CollisionKernel discrete(std::vector<KernelAtom> atoms) {
    if (atoms.empty()) throw std::invalid_argument("discrete: no atoms");
    double total = 0.0;
    for (const auto& a : atoms) {
      if (!(a.l >= 0.0) || !(a.r >= 0.0) || !(a.w > 0.0)) {
        throw std::invalid_argument("discrete: atoms need l,r >= 0 and w > 0");
      }
      total += a.w;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw std::invalid_argument("discrete: weights must sum to 1");
    }
    for (auto& a : atoms) a.w /= total;
    return CollisionKernel(Discrete{std::move(atoms)});
  }

  // L = l(T), R = r(T) with T uniform on [0, 2pi); moments via quadrature
  static CollisionKernel angle_map(std::function<double(double)> l,
                                   std::function<double(double)> r) {
    return CollisionKernel(AngleMap{
        std::make_shared<const std::function<double(double)>>(std::move(l)),
        std::make_shared<const std::function<double(double)>>(std::move(r))});
  }

  std::pair<double, double> sample(Rng& rng) const {
    if (const auto* u = std::get_if<Uniform>(&repr_)) {
      (void)u;
      double x = rng.uniform_open();
      return {x, 1.0 - x};
    }
    if (const auto* ik = std::get_if<InelasticKac>(&repr_)) {
      double th = 2.0 * M_PI * rng.uniform();
      double c = 1.0 + ik->d;
      return {std::pow(std::abs(std::cos(th)), c),
              std::pow(std::abs(std::sin(th)), c)};
    }
    if (const auto* de = std::get_if<Deterministic>(&repr_)) {
      return {de->l, de->r};
    }
    if (const auto* di = std::get_if<Discrete>(&repr_)) {
      double u = rng.uniform();
      double acc = 0.0;
      for (const auto& a : di->atoms) {
        acc += a.w;
        if (u < acc) return {a.l, a.r};
      }
      return {di->atoms.back().l, di->atoms.back().r};
    }
    const auto& am = std::get<AngleMap>(repr_);
    double th = 2.0 * M_PI * rng.uniform();
    return {(*am.l)(th), (*am.r)(th)};
  }

  // S(q) = E[L^q + R^q] - 1; +inf when the defining integral diverges
  double s_function(double q) const {
    if (!(q >= 0.0)) throw std::invalid_argument("s_function: q must be >= 0");
    if (const auto* u = std::get_if<Uniform>(&repr_)) {
      (void)u;
      return 2.0 / (1.0 + q) - 1.0;
    }
    if (const auto* ik = std::get_if<InelasticKac>(&repr_)) {
      double a = 0.5 * (1.0 + ik->d) * q;
      return 2.0 / std::sqrt(M_PI) * std::exp(std::lgamma(a + 0.5) - std::lgamma(a + 1.0)) - 1.0;
    }
    if (const auto* de = std::get_if<Deterministic>(&repr_)) {
      return pow_conv(de->l, q) + pow_conv(de->r, q) - 1.0;
    }
    if (const auto* di = std::get_if<Discrete>(&repr_)) {
      double s = 0.0;
      for (const auto& a : di->atoms) s += a.w * (pow_conv(a.l, q) + pow_conv(a.r, q));
      return s - 1.0;
    }
    const auto& am = std::get<AngleMap>(repr_);
    auto res = integrate_adaptive(
        [&](double th) { return pow_conv((*am.l)(th), q) + pow_conv((*am.r)(th), q); },
        0.0, 2.0 * M_PI, 1e-10);
    if (!std::isfinite(res.value)) return std::numeric_limits<double>::infinity();
    return res.value / (2.0 * M_PI) - 1.0;
  }

  // S'(q) = E[L^q log L + R^q log R]
  double s_derivative(double q) const {
    if (!(q >= 0.0)) throw std::invalid_argument("s_derivative: q must be >= 0");
    if (const auto* u = std::get_if<Uniform>(&repr_)) {
      (void)u;
      return -2.0 / ((1.0 + q) * (1.0 + q));
    }
    if (const auto* ik = std::get_if<InelasticKac>(&repr_)) {
      double c = 1.0 + ik->d;
      double a = 0.5 * c * q;
      double moment = 2.0 / std::sqrt(M_PI) * std::exp(std::lgamma(a + 0.5) - std::lgamma(a + 1.0));
      return moment * 0.5 * c * (digamma(a + 0.5) - digamma(a + 1.0));
    }
    if (const auto* de = std::get_if<Deterministic>(&repr_)) {
      return pow_log_conv(de->l, q) + pow_log_conv(de->r, q);
    }
    if (const auto* di = std::get_if<Discrete>(&repr_)) {
      double s = 0.0;
      for (const auto& a : di->atoms) s += a.w * (pow_log_conv(a.l, q) + pow_log_conv(a.r, q));
      return s;
    }
    const auto& am = std::get<AngleMap>(repr_);
    auto res = integrate_adaptive(
        [&](double th) {
          return pow_log_conv((*am.l)(th), q) + pow_log_conv((*am.r)(th), q);
        },
        0.0, 2.0 * M_PI, 1e-10);
    if (!std::isfinite(res.value)) return std::numeric_limits<double>::infinity();
    return res.value / (2.0 * M_PI);
  }

  double phi(double q) const {
    if (!(q > 0.0)) throw std::invalid_argument("phi: q must be > 0");
    return s_function(q) / q;
  }

  // E[L^a R^b]
  double mixed_moment(double a, double b) const {
    if (!(a >= 0.0) || !(b >= 0.0)) {
      throw std::invalid_argument("mixed_moment: exponents must be >= 0");
    }
    if (const auto* u = std::get_if<Uniform>(&repr_)) {
      (void)u;
      return std::exp(std::lgamma(a + 1.0) + std::lgamma(b + 1.0) - std::lgamma(a + b + 2.0));
    }
    if (const auto* ik = std::get_if<InelasticKac>(&repr_)) {
      double c = 1.0 + ik->d;
      return std::exp(std::lgamma(0.5 * (c * a + 1.0)) + std::lgamma(0.5 * (c * b + 1.0)) -
                      std::lgamma(0.5 * c * (a + b) + 1.0)) / M_PI;
    }
    if (const auto* de = std::get_if<Deterministic>(&repr_)) {
      return pow_conv(de->l, a) * pow_conv(de->r, b);
    }
    if (const auto* di = std::get_if<Discrete>(&repr_)) {
      double s = 0.0;
      for (const auto& at : di->atoms) s += at.w * pow_conv(at.l, a) * pow_conv(at.r, b);
      return s;
    }
    const auto& am = std::get<AngleMap>(repr_);
    auto res = integrate_adaptive(
        [&](double th) { return pow_conv((*am.l)(th), a) * pow_conv((*am.r)(th), b); },
        0.0, 2.0 * M_PI, 1e-10);
    if (!std::isfinite(res.value)) return std::numeric_limits<double>::infinity();
    return res.value / (2.0 * M_PI);
  }

  // true when L^alpha + R^alpha = 1 almost surely (the steady mixing law is
  // then the point mass at 1 and pools can be skipped)
  bool conserves_power_sum(double alpha) const {
    if (const auto* u = std::get_if<Uniform>(&repr_)) {
      (void)u;
      return std::abs(alpha - 1.0) <= 1e-12;
    }
    if (const auto* ik = std::get_if<InelasticKac>(&repr_)) {
      return std::abs((1.0 + ik->d) * alpha - 2.0) <= 1e-12;
    }
    if (const auto* de = std::get_if<Deterministic>(&repr_)) {
      return std::abs(pow_conv(de->l, alpha) + pow_conv(de->r, alpha) - 1.0) <= 1e-12;
    }
    if (const auto* di = std::get_if<Discrete>(&repr_)) {
      for (const auto& a : di->atoms) {
        if (std::abs(pow_conv(a.l, alpha) + pow_conv(a.r, alpha) - 1.0) > 1e-12) return false;
      }
      return true;
    }
    const auto& am = std::get<AngleMap>(repr_);
    for (int i = 0; i < 64; ++i) {
      double th = 2.0 * M_PI * (i + 0.5) / 64.0;
      if (std::abs(pow_conv((*am.l)(th), alpha) + pow_conv((*am.r)(th), alpha) - 1.0) > 1e-9) {
        return false;
      }
    }
    return true;
  }

  // P{L>0} + P{R>0}
  double prob_positive_mass() const {
    if (std::holds_alternative<Uniform>(repr_) || std::holds_alternative<InelasticKac>(repr_)) {
      return 2.0;
    }
    if (const auto* de = std::get_if<Deterministic>(&repr_)) {
      return (de->l > 0.0 ? 1.0 : 0.0) + (de->r > 0.0 ? 1.0 : 0.0);
    }
    if (const auto* di = std::get_if<Discrete>(&repr_)) {
      double s = 0.0;
      for (const auto& a : di->atoms) s += a.w * ((a.l > 0.0 ? 1.0 : 0.0) + (a.r > 0.0 ? 1.0 : 0.0));
      return s;
    }
    const auto& am = std::get<AngleMap>(repr_);
    auto res = integrate_adaptive(
        [&](double th) {
          return ((*am.l)(th) > 0.0 ? 1.0 : 0.0) + ((*am.r)(th) > 0.0 ? 1.0 : 0.0);
        },
        0.0, 2.0 * M_PI, 1e-6);
    return res.value / (2.0 * M_PI);
  }

  // P{(L,R) in {0,1}^2}; the dynamics are degenerate when this equals 1
  double prob_zero_one_mass() const {
    auto in01 = [](double x) { return x == 0.0 || std::abs(x - 1.0) <= 1e-12; };
    if (std::holds_alternative<Uniform>(repr_) || std::holds_alternative<InelasticKac>(repr_)) {
      return 0.0;  // continuous angle: {0,1} values sit on a null set
    }
    if (const auto* de = std::get_if<Deterministic>(&repr_)) {
      return in01(de->l) && in01(de->r) ? 1.0 : 0.0;
    }
    if (const auto* di = std::get_if<Discrete>(&repr_)) {
      double s = 0.0;
      for (const auto& a : di->atoms) {
        if (in01(a.l) && in01(a.r)) s += a.w;
      }
      return s;
    }
    const auto& am = std::get<AngleMap>(repr_);
    auto res = integrate_adaptive(
        [&](double th) {
          return in01((*am.l)(th)) && in01((*am.r)(th)) ? 1.0 : 0.0;
        },
        0.0, 2.0 * M_PI, 1e-6);
    return res.value / (2.0 * M_PI);
  }

  // atom list for kernels supported on finitely many (l, r) pairs
  std::optional<std::vector<KernelAtom>> atoms() const {
    if (const auto* de = std::get_if<Deterministic>(&repr_)) {
      return std::vector<KernelAtom>{{de->l, de->r, 1.0}};
    }
    if (const auto* di = std::get_if<Discrete>(&repr_)) return di->atoms;
    return std::nullopt;
  }

  std::string describe() const {
    if (std::holds_alternative<Uniform>(repr_)) return "uniform";
    if (const auto* ik = std::get_if<InelasticKac>(&repr_)) {
      return "inelastic-kac:d=" + format_double(ik->d);
    }
    if (const auto* de = std::get_if<Deterministic>(&repr_)) {
      return "deterministic:l=" + format_double(de->l) + ",r=" + format_double(de->r);
    }
    if (const auto* di = std::get_if<Discrete>(&repr_)) {
      std::string out = "discrete:";
      for (std::size_t i = 0; i < di->atoms.size(); ++i) {
        if (i) out += ';';
        out += format_double(di->atoms[i].l) + "," + format_double(di->atoms[i].r) + "," +
               format_double(di->atoms[i].w);
      }
      return out;
    }
    return "angle-map";
  }

 private:
  explicit CollisionKernel(Repr r) : repr_(std::move(r)) {}
  Repr repr_;
};

// Kernel spec strings accepted by the command line and config files:
//   uniform
//   inelastic-kac:d=<float>
//   deterministic:l=<float>,r=<float>
//   discrete:<l>,<r>,<w>[;<l>,<r>,<w>]...
inline CollisionKernel parse_kernel(std::string_view spec) {
  std::string_view name = spec;
  std::string_view args;
  if (auto colon = spec.find(':'); colon != std::string_view::npos) {
    name = spec.substr(0, colon);
    args = spec.substr(colon + 1);
  }
  if (name == "uniform") {
    if (!args.empty()) throw std::invalid_argument("uniform kernel takes no parameters");
    return CollisionKernel::uniform();
  }
  if (name == "inelastic-kac") {
    auto [k, v] = split_kv(args);
    if (k != "d") throw std::invalid_argument("inelastic-kac expects d=<float>");
    return CollisionKernel::inelastic_kac(parse_double(v));
  }
  if (name == "deterministic") {
    double l = 0.0, r = 0.0;
    bool got_l = false, got_r = false;
    for (auto part : split(args, ',')) {
      auto [k, v] = split_kv(part);
      if (k == "l") {
        l = parse_double(v);
        got_l = true;
      } else if (k == "r") {
        r = parse_double(v);
        got_r = true;
      } else {
        throw std::invalid_argument("deterministic expects l=<float>,r=<float>");
      }
    }
    if (!got_l || !got_r) throw std::invalid_argument("deterministic expects l=<float>,r=<float>");
    return CollisionKernel::deterministic(l, r);
  }
  if (name == "discrete") {
    std::vector<KernelAtom> atoms;
    for (auto group : split(args, ';')) {
      auto fields = split(group, ',');
      if (fields.size() != 3) {
        throw std::invalid_argument("discrete expects <l>,<r>,<w> triples separated by ';'");
      }
      atoms.push_back({parse_double(fields[0]), parse_double(fields[1]), parse_double(fields[2])});
    }
    return CollisionKernel::discrete(std::move(atoms));
  }
  throw std::invalid_argument("unknown kernel spec '" + std::string(spec) + "'");
}

// Smallest root of S in (0,2]: sign scan on 64 points, then bisection.
inline double find_alpha(const CollisionKernel& k) {
  constexpr double left = 1e-6, right = 2.0, tol = 1e-9;
  constexpr int scan = 64;
  double prev_q = left;
  double prev_s = k.s_function(left);
  if (!(prev_s > tol)) {
    throw NoRootInRange(
        "find_alpha: spectral function is not positive at the left edge of (0,2]; "
        "the kernel puts no usable mass on positive contractions");
  }
  for (int i = 1; i <= scan; ++i) {
    double q = left + (right - left) * i / scan;
    double s = k.s_function(q);
    if (s <= 0.0) {
      double a = prev_q, b = q;
      for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        double m = 0.5 * (a + b);
        if (k.s_function(m) > 0.0) {
          a = m;
        } else {
          b = m;
        }
      }
      double root = 0.5 * (a + b);
      if (std::abs(k.s_function(root)) > tol) {
        throw NoRootInRange("find_alpha: bisection did not pin the root of the spectral function");
      }
      return root;
    }
    prev_q = q;
    prev_s = s;
  }
  if (std::abs(k.s_function(right)) <= tol) return right;
  throw NoRootInRange("find_alpha: spectral function stays positive on (0,2]");
}

// sup{q > alpha : S(q) < 0}; +inf when S stays negative out to the probe cap
inline double p_bar(const CollisionKernel& k, double alpha) {
  constexpr double cap = 4096.0;
  double b = alpha + 1e-4;
  if (!(k.s_function(b) < 0.0)) return alpha;
  double step = std::max(alpha, 1.0);
  while (b < cap) {
    double nb = std::min(b + step, cap);
    double s = k.s_function(nb);
    if (!(s < 0.0)) {
      double x = b, y = nb;
      for (int it = 0; it < 200 && y - x > 1e-10 * (1.0 + y); ++it) {
        double m = 0.5 * (x + y);
        if (k.s_function(m) < 0.0) {
          x = m;
        } else {
          y = m;
        }
      }
      return 0.5 * (x + y);
    }
    b = nb;
    step *= 2.0;
  }
  return std::numeric_limits<double>::infinity();
}

namespace detail {

template <class F>
double golden_section_min(F&& f, double lo, double hi, double tol) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

// Interior minimizer of phi = S(q)/q on (alpha, p_bar); empty when phi is
// still decreasing at the right end of the usable range.
inline std::optional<double> find_p0(const CollisionKernel& k, double alpha) {
  double pb = p_bar(k, alpha);
  double lo = alpha + 1e-4;
  double hi = std::isfinite(pb) ? pb - 1e-9 : 4096.0;
  if (!(hi > lo)) return std::nullopt;
  double x = detail::golden_section_min([&](double q) { return k.phi(q); }, lo, hi, 1e-6);
  if (hi - x <= 1e-3) return std::nullopt;
  return x;
}

enum class RateRegime { wasserstein_low, alpha_lt_1, alpha_in_1_2, alpha_eq_2, chi };

inline std::string to_string(RateRegime r) {
  switch (r) {
    case RateRegime::wasserstein_low: return "wasserstein-low";
    case RateRegime::alpha_lt_1: return "alpha-lt-1";
    case RateRegime::alpha_in_1_2: return "alpha-in-1-2";
    case RateRegime::alpha_eq_2: return "alpha-eq-2";
    case RateRegime::chi: return "chi";
  }
  return "?";
}

inline RateRegime parse_regime(std::string_view s) {
  if (s == "wasserstein-low") return RateRegime::wasserstein_low;
  if (s == "alpha-lt-1") return RateRegime::alpha_lt_1;
  if (s == "alpha-in-1-2") return RateRegime::alpha_in_1_2;
  if (s == "alpha-eq-2") return RateRegime::alpha_eq_2;
  if (s == "chi") return RateRegime::chi;
  throw std::invalid_argument("unknown rate regime '" + std::string(s) + "'");
}

struct DecayRate {
  double rate = 0.0;        // exponent r in the e^{-rt} envelope
  bool log_correction = false;  // bound carries an extra factor of t at regime boundaries
  RateRegime regime = RateRegime::chi;
  double p = 0.0;
};

inline DecayRate rate_constant(const CollisionKernel& k, double p, RateRegime regime) {
  constexpr double eq_tol = 1e-9;
  if (!(p > 0.0)) throw std::invalid_argument("rate_constant: p must be > 0");
  double sp = k.s_function(p);
  if (!(sp < 0.0)) {
    throw RateUndefined("rate_constant: spectral function is nonnegative at p");
  }
  double phip = sp / p;
  switch (regime) {
    case RateRegime::wasserstein_low: {
      if (p > 2.0) throw RateUndefined("rate_constant: wasserstein-low regime requires p <= 2");
      return {std::abs(phip) * std::min(p, 1.0), false, regime, p};
    }
    case RateRegime::alpha_lt_1: {
      if (!(p > 1.0)) throw RateUndefined("rate_constant: alpha-lt-1 regime requires p > 1");
      double phi1 = k.s_function(1.0);
      double m = std::max(phi1, phip);
      if (!(m < 0.0)) throw RateUndefined("rate_constant: phi(1) must be negative in this regime");
      return {std::abs(m), std::abs(phip - phi1) <= eq_tol, regime, p};
    }
    case RateRegime::alpha_in_1_2: {
      if (!(p >= 2.0)) throw RateUndefined("rate_constant: alpha-in-1-2 regime requires p >= 2");
      double phi2 = k.s_function(2.0) / 2.0;
      double m = std::max(phi2, phip);
      if (!(m < 0.0)) throw RateUndefined("rate_constant: phi(2) must be negative in this regime");
      return {std::abs(m), std::abs(phip - phi2) <= eq_tol, regime, p};
    }
    case RateRegime::alpha_eq_2: {
      if (!(p > 2.0)) throw RateUndefined("rate_constant: alpha-eq-2 regime requires p > 2");
      double eps = p - std::floor(p);
      if (eps < 1e-12) eps = 1.0;  // integer p keeps the full unit of fractional order
      double phie = k.phi(2.0 + eps);
      double m = std::max(phip, phie / (3.0 * p));
      if (!(m < 0.0)) throw RateUndefined("rate_constant: no negative envelope at p");
      return {std::abs(m), std::abs(sp - phie / 3.0) <= eq_tol, regime, p};
    }
    case RateRegime::chi:
      return {std::abs(sp), false, regime, p};
  }
  throw std::logic_error("rate_constant: unreachable");
}

struct H0Report {
  double positive_mass = 0.0;  // P{L>0} + P{R>0}
  bool positivity_ok = false;
  std::optional<double> alpha;
  bool alpha_ok = false;
  double s_at_p = 0.0;
  bool contraction_ok = false;  // S(p) < 0
  double degenerate_mass = 0.0;  // P{(L,R) in {0,1}^2}
  bool nondegenerate_ok = false;
  bool ok() const { return positivity_ok && alpha_ok && contraction_ok && nondegenerate_ok; }
};

inline H0Report validate_h0(const CollisionKernel& k, double p) {
  H0Report rep;
  rep.positive_mass = k.prob_positive_mass();
  rep.positivity_ok = rep.positive_mass > 1.0 + 1e-9;
  try {
    rep.alpha = find_alpha(k);
    rep.alpha_ok = true;
  } catch (const NoRootInRange&) {
    rep.alpha_ok = false;
  }
  rep.s_at_p = k.s_function(p);
  rep.contraction_ok = rep.s_at_p < 0.0;
  rep.degenerate_mass = k.prob_zero_one_mass();
  rep.nondegenerate_ok = rep.degenerate_mass < 1.0 - 1e-9;
  return rep;
}

struct SpectralProfile {
  CollisionKernel kernel;
  double alpha;
  std::optional<double> p0;
  double p_bar;

  double s(double q) const { return kernel.s_function(q); }
  double phi(double q) const { return kernel.phi(q); }
  double s_derivative(double q) const { return kernel.s_derivative(q); }
};

inline SpectralProfile spectral_profile(const CollisionKernel& k) {
  double a = find_alpha(k);
  return SpectralProfile{k, a, find_p0(k, a), p_bar(k, a)};
}

}  // namespace kaclab
