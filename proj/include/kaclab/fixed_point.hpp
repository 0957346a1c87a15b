#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kaclab/kernel.hpp"
#include "kaclab/parallel.hpp"
#include "kaclab/rng.hpp"
#include "kaclab/stable.hpp"
#include "kaclab/stats.hpp"

namespace kaclab {

// Moments m_i of the mixture fixed point; m[i-1] holds m_i, +inf (with the
// flag cleared) for orders where the defining series diverges.
struct MomentTable {
  std::vector<double> m;
  std::vector<bool> finite;
};

// m_1 = 1; m_i = sum_{j=1}^{i-1} C(i,j) E[L^{aj} R^{a(i-j)}] m_j m_{i-j}
// divided by -S(a i), finite exactly when S(a i) < 0 and all lower moments
// are finite.
inline MomentTable moments_recursive(const CollisionKernel& kernel,
                                     double alpha, int k) {
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("moments_recursive: need alpha > 0");
  }
  if (k < 1) throw std::invalid_argument("moments_recursive: need k >= 1");
  MomentTable t;
  t.m = {1.0};
  t.finite = {true};
  for (int i = 2; i <= k; ++i) {
    double si = kernel.s_function(alpha * i);
    bool ok = si < 0.0 && t.finite[static_cast<std::size_t>(i) - 2];
    if (!ok) {
      t.m.push_back(std::numeric_limits<double>::infinity());
      t.finite.push_back(false);
      continue;
    }
    double num = 0.0, c = 1.0;
    for (int j = 1; j <= i - 1; ++j) {
      c = c * static_cast<double>(i - j + 1) / static_cast<double>(j);
      num += c * kernel.mixed_moment(alpha * j, alpha * (i - j)) *
             t.m[static_cast<std::size_t>(j) - 1] *
             t.m[static_cast<std::size_t>(i - j) - 1];
    }
    t.m.push_back(num / -si);
    t.finite.push_back(true);
  }
  return t;
}

// One approximate draw of the martingale limit: sum_j beta_j^alpha over a
// freshly grown array with `depth` leaves. Weights are grown directly in the
// alpha-powered domain, with per-atom powers precomputed when the kernel is
// purely atomic.
inline double sample_m_infinity(const CollisionKernel& kernel, double alpha,
                                std::size_t depth, Rng& rng) {
  if (depth < 1) throw std::invalid_argument("sample_m_infinity: depth >= 1");
  std::vector<double> w{1.0};
  w.reserve(depth);
  if (auto atoms = kernel.atoms(); atoms && !atoms->empty()) {
    struct Powered {
      double la, ra, cum;
    };
    std::vector<Powered> tab;
    tab.reserve(atoms->size());
    double cum = 0.0;
    for (const auto& a : *atoms) {
      cum += a.w;
      tab.push_back({pow_conv(a.l, alpha), pow_conv(a.r, alpha), cum});
    }
    for (std::size_t s = 1; s < depth; ++s) {
      std::size_t i = rng.below(w.size());
      const Powered* p = &tab.back();
      if (tab.size() > 1) {
        double u = rng.uniform();
        for (const auto& e : tab) {
          if (u < e.cum) {
            p = &e;
            break;
          }
        }
      }
      double b = w[i];
      w[i] = b * p->la;
      w.push_back(b * p->ra);
    }
  } else {
    for (std::size_t s = 1; s < depth; ++s) {
      std::size_t i = rng.below(w.size());
      auto [l, r] = kernel.sample(rng);
      double b = w[i];
      w[i] = b * pow_conv(l, alpha);
      w.push_back(b * pow_conv(r, alpha));
    }
  }
  double m = 0.0;
  for (double x : w) m += x;
  return m;
}

// Sampled mixture law: a sorted pool of martingale-limit draws, or the
// symbolic point mass at 1 when the kernel conserves sum beta^alpha exactly.
struct MixtureLaw {
  CollisionKernel kernel;
  double alpha = 1.0;
  bool delta_one = false;
  std::size_t depth = 1;
  std::vector<double> pool;  // sorted ascending; empty when delta_one
  double mean = 1.0;         // pool diagnostics
  double m2 = 1.0;
  bool converged = true;  // diagnostic agreement reached before the depth cap
};

// Grows the pool, doubling the tree depth until the pool m2 agrees with the
// recursion within 4 SE (or, when m2 is infinite, until the pool mean agrees
// with 1), capped. Replica-parallel and deterministic: draw i of pass p uses
// stream (p << 40) | i of the seed.
inline MixtureLaw build_pool(const CollisionKernel& kernel, double alpha,
                             std::uint64_t seed,
                             std::size_t pool_size = 100000,
                             std::size_t initial_depth = std::size_t{1} << 14,
                             std::size_t depth_cap = std::size_t{1} << 18,
                             int threads = 1) {
  if (!(alpha > 0.0)) throw std::invalid_argument("build_pool: alpha > 0");
  if (pool_size < 2) throw std::invalid_argument("build_pool: pool too small");
  MixtureLaw law{kernel, alpha, false, 1, {}, 1.0, 1.0, true};
  if (kernel.conserves_power_sum(alpha)) {
    law.delta_one = true;
    return law;
  }
  auto table = moments_recursive(kernel, alpha, 2);
  double m2_ref = table.m[1];
  bool m2_finite = table.finite[1];
  std::uint64_t pass = 0;
  for (std::size_t depth = initial_depth;; depth *= 2, ++pass) {
    law.pool.assign(pool_size, 0.0);
    parallel_for_index(pool_size, threads, [&](std::size_t i) {
      Rng r = Rng::stream(seed, (pass << 40) | i);
      law.pool[i] = sample_m_infinity(kernel, alpha, depth, r);
    });
    law.depth = depth;
    auto ms = mean_stderr(law.pool);
    std::vector<double> sq(law.pool.size());
    for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = law.pool[i] * law.pool[i];
    auto m2s = mean_stderr(sq);
    law.mean = ms.mean;
    law.m2 = m2s.mean;
    bool ok = m2_finite ? std::abs(m2s.mean - m2_ref) <= 4.0 * m2s.stderr_
                        : std::abs(ms.mean - 1.0) <= 4.0 * ms.stderr_;
    if (ok || depth * 2 > depth_cap) {
      law.converged = ok;
      break;
    }
  }
  std::sort(law.pool.begin(), law.pool.end());
  return law;
}

// KS statistic between the pool and one resampling of L^a M1 + R^a M2; small
// values certify the distributional fixed point.
inline double fixed_point_residual(const MixtureLaw& law, Rng& rng) {
  if (law.delta_one) return 0.0;
  const auto& pool = law.pool;
  if (pool.size() < 2) {
    throw std::invalid_argument("fixed_point_residual: pool too small");
  }
  std::vector<double> res(pool.size());
  for (auto& v : res) {
    auto [l, r] = law.kernel.sample(rng);
    v = pow_conv(l, law.alpha) * pool[rng.below(pool.size())] +
        pow_conv(r, law.alpha) * pool[rng.below(pool.size())];
  }
  return kolmogorov_distance_two_sample(pool, res);
}

namespace detail {

inline void check_same_alpha(const MixtureLaw& law, const StableParams& p,
                             const char* who) {
  if (std::abs(law.alpha - p.alpha) > 1e-9) {
    throw std::invalid_argument(std::string(who) +
                                ": stable index does not match the mixture");
  }
}

}  // namespace detail

// V_inf = S_alpha * M^{1/alpha} with S_alpha a fresh stable draw and M from
// the mixture pool; at alpha = 1 the position gamma0 rides inside the stable
// draw, so the product reproduces (S_1 + gamma0) * M.
inline double sample_steady(const MixtureLaw& law, const StableParams& stable,
                            Rng& rng) {
  detail::check_same_alpha(law, stable, "sample_steady");
  double s = sample_stable(stable, rng);
  if (law.delta_one) return s;
  double m = law.pool[rng.below(law.pool.size())];
  return law.alpha == 1.0 ? s * m : s * std::pow(m, 1.0 / law.alpha);
}

// Pool average of the stable characteristic function with lambda (and, at
// alpha = 1, gamma0) scaled by the mixture value.
inline std::complex<double> steady_cf(const MixtureLaw& law,
                                      const StableParams& stable, double xi) {
  detail::check_same_alpha(law, stable, "steady_cf");
  if (law.delta_one) return cf_stable(stable, xi);
  std::complex<double> acc(0.0, 0.0);
  for (double m : law.pool) {
    StableParams scaled{stable.alpha, stable.lambda * m, stable.beta,
                        stable.gamma0 * m};
    acc += cf_stable(scaled, xi);
  }
  return acc / static_cast<double>(law.pool.size());
}

// Closed-form steady quantile / cdf, available exactly when the mixture is
// the symbolic point mass and the stable index admits a closed form.
inline std::optional<std::function<double(double)>> steady_quantile(
    const MixtureLaw& law, const StableParams& stable) {
  detail::check_same_alpha(law, stable, "steady_quantile");
  if (!law.delta_one) return std::nullopt;
  validate_stable(stable);
  if (stable.lambda == 0.0) {
    double pos = stable.alpha == 1.0 ? stable.gamma0 : 0.0;
    return [pos](double) { return pos; };
  }
  if (stable.alpha == 1.0) {
    double l = stable.lambda, g = stable.gamma0;
    return [l, g](double u) { return g + l * std::tan(M_PI * (u - 0.5)); };
  }
  if (stable.alpha == 2.0) {
    double s = std::sqrt(2.0 * stable.lambda);
    return [s](double u) { return s * inverse_normal_cdf(u); };
  }
  return std::nullopt;
}

inline std::optional<std::function<double(double)>> steady_cdf(
    const MixtureLaw& law, const StableParams& stable) {
  detail::check_same_alpha(law, stable, "steady_cdf");
  if (!law.delta_one) return std::nullopt;
  if (!stable_cdf_closed(stable, 0.0).has_value()) return std::nullopt;
  StableParams p = stable;
  return [p](double x) { return *stable_cdf_closed(p, x); };
}

// Tail expansion of the steady law: term i has order alpha*(i+1) and
// coefficient c_i * m_{i+1}. Terms whose stable coefficient vanishes on both
// sides stay zero without needing the moment; the first genuinely infeasible
// moment truncates the table. remainder_order reports alpha*(k + delta) for
// the largest delta in (0,1] keeping S negative.
struct SteadyTail {
  double alpha = 2.0;
  int requested = 0;
  int k = 0;  // terms actually provided
  bool truncated = false;
  std::vector<double> order, c_plus, c_minus;
  double remainder_order = 0.0;
  bool thin_right = false, thin_left = false;
};

inline SteadyTail steady_tail_expansion(const CollisionKernel& kernel,
                                        const StableParams& stable, int k) {
  if (k < 1) throw std::invalid_argument("steady_tail_expansion: k >= 1");
  validate_stable(stable);
  double alpha = stable.alpha;
  if (std::abs(find_alpha(kernel) - alpha) > 1e-9) {
    throw std::invalid_argument(
        "steady_tail_expansion: stable index does not match the kernel");
  }
  TailCoefficients tc = tail_coefficients(stable, k + 1);
  MomentTable mt = moments_recursive(kernel, alpha, k);
  SteadyTail out;
  out.alpha = alpha;
  out.requested = k;
  out.thin_right = tc.thin_right;
  out.thin_left = tc.thin_left;
  // The spectral function is convex, so its negativity set is an interval:
  // a term can be kept only while some order above it still has S < 0,
  // otherwise the remainder past that term is uncontrolled and the
  // expansion must stop even if the term itself vanishes.
  auto negative_beyond = [&](double order) {
    for (double q : {order + 1e-6 * alpha, order + 0.5 * alpha, order + alpha}) {
      if (kernel.s_function(q) < 0.0) return true;
    }
    return false;
  };
  for (int i = 0; i < k; ++i) {
    bool zero_term = tc.c_plus[i] == 0.0 && tc.c_minus[i] == 0.0;
    if (!negative_beyond(alpha * (i + 1.0)) ||
        (!zero_term && !mt.finite[static_cast<std::size_t>(i)])) {
      out.truncated = true;
      break;
    }
    double m = mt.m[static_cast<std::size_t>(i)];
    out.order.push_back(tc.order[i]);
    out.c_plus.push_back(zero_term ? 0.0 : tc.c_plus[i] * m);
    out.c_minus.push_back(zero_term ? 0.0 : tc.c_minus[i] * m);
    ++out.k;
  }
  // Remainder exponent alpha*(k+delta): delta caps at 2 when the next
  // omitted stable term vanishes (nothing sits between orders k and k+2),
  // else at 1, and within the cap at the boundary where S turns nonnegative.
  double cap =
      (tc.c_plus[out.k] == 0.0 && tc.c_minus[out.k] == 0.0) ? 2.0 : 1.0;
  double probe = 1e-6;
  auto feasible = [&](double delta) {
    return kernel.s_function(alpha * (out.k + delta)) < 0.0;
  };
  if (feasible(cap)) {
    out.remainder_order = alpha * (out.k + cap);
  } else if (!feasible(probe)) {
    out.remainder_order = alpha * out.k;  // no admissible remainder gain
  } else {
    double lo = probe, hi = cap;
    for (int it = 0; it < 80; ++it) {
      double mid = 0.5 * (lo + hi);
      (feasible(mid) ? lo : hi) = mid;
    }
    out.remainder_order = alpha * (out.k + lo);
  }
  return out;
}

// Flat little-endian persistence: the 8-byte tag "KFPOOL01", a uint64 count,
// then the pool values as raw 64-bit floats.
inline void save_pool(const MixtureLaw& law, const std::string& path) {
  if (law.delta_one) {
    throw std::invalid_argument("save_pool: symbolic point-mass mixture");
  }
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("save_pool: cannot open " + path);
  auto put64 = [&](std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    std::fwrite(b, 1, 8, f);
  };
  std::fwrite("KFPOOL01", 1, 8, f);
  put64(law.pool.size());
  for (double x : law.pool) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, 8);
    put64(bits);
  }
  if (std::fclose(f) != 0) throw std::runtime_error("save_pool: write failed");
}

inline MixtureLaw load_pool(const CollisionKernel& kernel, double alpha,
                            const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("load_pool: cannot open " + path);
  auto fail = [&](const char* why) {
    std::fclose(f);
    return std::runtime_error(std::string("load_pool: ") + why + " in " + path);
  };
  char magic[8];
  if (std::fread(magic, 1, 8, f) != 8 || std::memcmp(magic, "KFPOOL01", 8) != 0) {
    throw fail("bad magic");
  }
  auto get64 = [&](std::uint64_t& v) {
    unsigned char b[8];
    if (std::fread(b, 1, 8, f) != 8) return false;
    v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return true;
  };
  std::uint64_t count = 0;
  if (!get64(count)) throw fail("missing count");
  if (count < 2) throw fail("pool too small");
  MixtureLaw law{kernel, alpha, false, 0, {}, 0.0, 0.0, true};
  law.pool.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    if (!get64(bits)) throw fail("truncated data");
    double x;
    std::memcpy(&x, &bits, 8);
    if (!(x >= 0.0)) throw fail("negative or non-finite entry");
    law.pool.push_back(x);
  }
  std::fclose(f);
  std::sort(law.pool.begin(), law.pool.end());
  auto ms = mean_stderr(law.pool);
  law.mean = ms.mean;
  double s = 0.0;
  for (double x : law.pool) s += x * x;
  law.m2 = s / static_cast<double>(law.pool.size());
  return law;
}

}  // namespace kaclab
