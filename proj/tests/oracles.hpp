#pragma once

// Deliberately naive reference implementations used only by tests. Each one
// trades speed for being obviously correct, so library results can be checked
// against an independent computation rather than against themselves.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace oracle {

// Central difference with one Richardson step; error O(h^4).
template <class F>
double derivative(F&& f, double x, double h = 1e-4) {
  double d1 = (f(x + h) - f(x - h)) / (2.0 * h);
  double d2 = (f(x + 0.5 * h) - f(x - 0.5 * h)) / h;
  return (4.0 * d2 - d1) / 3.0;
}

// Dense scan minimizer.
template <class F>
double grid_argmin(F&& f, double lo, double hi, double step) {
  double best_x = lo, best_f = f(lo);
  for (double x = lo + step; x <= hi; x += step) {
    double fx = f(x);
    if (fx < best_f) {
      best_f = fx;
      best_x = x;
    }
  }
  return best_x;
}

// Exact W_p between two equal-size empirical measures by trying every
// assignment (the optimal coupling of 1-d samples, found the hard way).
inline double wasserstein_exhaustive(std::vector<double> a, std::vector<double> b, double p) {
  if (a.size() != b.size() || a.empty() || a.size() > 8) {
    throw std::invalid_argument("wasserstein_exhaustive: need equal sizes in 1..8");
  }
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      cost += std::pow(std::abs(a[i] - b[perm[i]]), p);
    }
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.end()));
  best /= static_cast<double>(a.size());
  return p > 1.0 ? std::pow(best, 1.0 / p) : best;
}

// Finite-support distribution with exact probability bookkeeping; outcomes
// are keyed on a 1e-12 lattice so algebraically equal sums merge.
using Dist = std::map<long long, double>;

inline long long key_of(double x) { return std::llround(x * 1e12); }

inline void add_outcome(Dist& d, double x, double prob) { d[key_of(x)] += prob; }

inline double total_variation(const Dist& a, const Dist& b) {
  double tv = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      tv += std::abs(ia->second);
      ++ia;
    } else if (ia == a.end() || ib->first < ia->first) {
      tv += std::abs(ib->second);
      ++ib;
    } else {
      tv += std::abs(ia->second - ib->second);
      ++ia;
      ++ib;
    }
  }
  return 0.5 * tv;
}

struct TwoAtomKernel {
  // (l, r) equals (l1, r1) with probability w1, else (l2, r2)
  double l1, r1, w1, l2, r2;
};

struct TwoPointLaw {
  // value x1 with probability q, else x2
  double x1, q, x2;
};

// Distribution of sum_j beta_j X_j for the size-n array built by the ordered
// insertion recursion: pick slot I uniformly among the current slots, replace
// beta_I by the pair (L beta_I, R beta_I) keeping order. Exhaustive over all
// slot choices, atom choices and X assignments.
inline Dist weighted_sum_ordered_insert(const TwoAtomKernel& k, const TwoPointLaw& x, int n) {
  Dist out;
  struct Node {
    std::vector<double> w;
    double prob;
  };
  std::vector<Node> level{{{1.0}, 1.0}};
  for (int size = 1; size < n; ++size) {
    std::vector<Node> next;
    for (const auto& node : level) {
      for (std::size_t slot = 0; slot < node.w.size(); ++slot) {
        for (int atom = 0; atom < 2; ++atom) {
          double l = atom == 0 ? k.l1 : k.l2;
          double r = atom == 0 ? k.r1 : k.r2;
          double pw = atom == 0 ? k.w1 : 1.0 - k.w1;
          Node child;
          child.prob = node.prob * pw / static_cast<double>(node.w.size());
          child.w.reserve(node.w.size() + 1);
          for (std::size_t j = 0; j < node.w.size(); ++j) {
            if (j == slot) {
              child.w.push_back(node.w[j] * l);
              child.w.push_back(node.w[j] * r);
            } else {
              child.w.push_back(node.w[j]);
            }
          }
          next.push_back(std::move(child));
        }
      }
    }
    level = std::move(next);
  }
  for (const auto& node : level) {
    std::size_t combos = std::size_t{1} << node.w.size();
    for (std::size_t mask = 0; mask < combos; ++mask) {
      double sum = 0.0, prob = node.prob;
      for (std::size_t j = 0; j < node.w.size(); ++j) {
        bool first = (mask >> j) & 1u;
        sum += node.w[j] * (first ? x.x1 : x.x2);
        prob *= first ? x.q : 1.0 - x.q;
      }
      add_outcome(out, sum, prob);
    }
  }
  return out;
}

// Same functional, but the array grows by replace-and-append: slot I keeps
// L beta_I and R beta_I lands at the end.
inline Dist weighted_sum_replace_append(const TwoAtomKernel& k, const TwoPointLaw& x, int n) {
  Dist out;
  struct Node {
    std::vector<double> w;
    double prob;
  };
  std::vector<Node> level{{{1.0}, 1.0}};
  for (int size = 1; size < n; ++size) {
    std::vector<Node> next;
    for (const auto& node : level) {
      for (std::size_t slot = 0; slot < node.w.size(); ++slot) {
        for (int atom = 0; atom < 2; ++atom) {
          double l = atom == 0 ? k.l1 : k.l2;
          double r = atom == 0 ? k.r1 : k.r2;
          double pw = atom == 0 ? k.w1 : 1.0 - k.w1;
          Node child;
          child.prob = node.prob * pw / static_cast<double>(node.w.size());
          child.w = node.w;
          child.w[slot] = node.w[slot] * l;
          child.w.push_back(node.w[slot] * r);
          next.push_back(std::move(child));
        }
      }
    }
    level = std::move(next);
  }
  for (const auto& node : level) {
    std::size_t combos = std::size_t{1} << node.w.size();
    for (std::size_t mask = 0; mask < combos; ++mask) {
      double sum = 0.0, prob = node.prob;
      for (std::size_t j = 0; j < node.w.size(); ++j) {
        bool first = (mask >> j) & 1u;
        sum += node.w[j] * (first ? x.x1 : x.x2);
        prob *= first ? x.q : 1.0 - x.q;
      }
      add_outcome(out, sum, prob);
    }
  }
  return out;
}

// E[(sum_j beta_j^p)] for the ordered insertion recursion at size n, exhaustive.
inline double weight_power_mean_ordered_insert(const TwoAtomKernel& k, double p, int n) {
  struct Node {
    std::vector<double> w;
    double prob;
  };
  std::vector<Node> level{{{1.0}, 1.0}};
  for (int size = 1; size < n; ++size) {
    std::vector<Node> next;
    for (const auto& node : level) {
      for (std::size_t slot = 0; slot < node.w.size(); ++slot) {
        for (int atom = 0; atom < 2; ++atom) {
          double l = atom == 0 ? k.l1 : k.l2;
          double r = atom == 0 ? k.r1 : k.r2;
          double pw = atom == 0 ? k.w1 : 1.0 - k.w1;
          Node child;
          child.prob = node.prob * pw / static_cast<double>(node.w.size());
          child.w.reserve(node.w.size() + 1);
          for (std::size_t j = 0; j < node.w.size(); ++j) {
            if (j == slot) {
              child.w.push_back(node.w[j] * l);
              child.w.push_back(node.w[j] * r);
            } else {
              child.w.push_back(node.w[j]);
            }
          }
          next.push_back(std::move(child));
        }
      }
    }
    level = std::move(next);
  }
  double mean = 0.0;
  for (const auto& node : level) {
    double s = 0.0;
    for (double w : node.w) s += std::pow(w, p);
    mean += node.prob * s;
  }
  return mean;
}

}  // namespace oracle
