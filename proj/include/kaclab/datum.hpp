#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "kaclab/quadrature.hpp"
#include "kaclab/rng.hpp"
#include "kaclab/stats.hpp"
#include "kaclab/text.hpp"

namespace kaclab {

// Tail metadata of an initial law: x^a(1 - F(x)) -> c0_plus and
// |x|^a F(-x) -> c0_minus for the relevant stability index a, the centering
// constant gamma0 (the mean whenever it is finite, the symmetry center
// otherwise), and the variance (+inf when the second moment diverges).
struct DatumTails {
  double c0_plus = 0.0;
  double c0_minus = 0.0;
  double gamma0 = 0.0;
  double variance = 0.0;
};

class InitialDatum {
 public:
  static InitialDatum point_mass(double a) {
    InitialDatum d;
    d.repr_ = Point{a};
    d.tails_ = {0.0, 0.0, a, 0.0};
    return d;
  }

  static InitialDatum uniform_interval(double a, double b) {
    if (!(a < b)) throw std::invalid_argument("uniform_interval: need a < b");
    InitialDatum d;
    d.repr_ = Uniform{a, b};
    d.tails_ = {0.0, 0.0, 0.5 * (a + b), (b - a) * (b - a) / 12.0};
    return d;
  }

  static InitialDatum gaussian(double mean, double var) {
    if (!(var >= 0.0)) throw std::invalid_argument("gaussian: need var >= 0");
    InitialDatum d;
    d.repr_ = Gauss{mean, var};
    d.tails_ = {0.0, 0.0, mean, var};
    return d;
  }

  static InitialDatum cauchy(double scale, double pos) {
    if (!(scale > 0.0)) throw std::invalid_argument("cauchy: need scale > 0");
    InitialDatum d;
    d.repr_ = Cauchy{scale, pos};
    d.tails_ = {scale / M_PI, scale / M_PI, pos,
                std::numeric_limits<double>::infinity()};
    return d;
  }

  // Symmetric law with exact survival c0 x^-alpha beyond the splice point
  // x_c = (4 c0)^(1/alpha), where the survival equals 1/4; the middle half of
  // the mass is uniform on [-x_c, x_c], making the cdf continuous.
  static InitialDatum pareto_symmetric(double alpha, double c0) {
    if (!(alpha > 0.0) || !(c0 > 0.0)) {
      throw std::invalid_argument("pareto_symmetric: need alpha > 0, c0 > 0");
    }
    InitialDatum d;
    double xc = std::pow(4.0 * c0, 1.0 / alpha);
    double var = std::numeric_limits<double>::infinity();
    if (alpha > 2.0) {
      var = xc * xc / 6.0 + alpha * xc * xc / (2.0 * (alpha - 2.0));
    }
    d.repr_ = Pareto{alpha, c0, xc};
    d.tails_ = {c0, c0, 0.0, var};
    return d;
  }

  // base quantile plus eps * sin(2 pi u): a bounded, zero-mean, antisymmetric
  // perturbation, so d_p(perturbed, base) <= eps for every p >= 1. The
  // constructor rejects amplitudes that break monotonicity of the quantile.
  static InitialDatum perturbed_quantile(InitialDatum base, double eps) {
    InitialDatum d;
    auto ptr = std::make_shared<const InitialDatum>(std::move(base));
    d.repr_ = Perturbed{ptr, eps};
    const int grid = 8192;
    double prev = -std::numeric_limits<double>::infinity();
    for (int k = 1; k < grid; ++k) {
      double u = static_cast<double>(k) / grid;
      double q = ptr->quantile(u) + eps * std::sin(2.0 * M_PI * u);
      if (q < prev) {
        throw std::invalid_argument(
            "perturbed_quantile: amplitude breaks quantile monotonicity");
      }
      prev = q;
    }
    DatumTails bt = ptr->tails();
    double var = bt.variance;
    if (std::isfinite(var)) {
      // Var(Q(U) + eps g(U)) = Var(Q) + 2 eps Cov(Q, g) + eps^2 / 2
      auto cov = integrate_adaptive(
          [&](double u) {
            return ptr->quantile(u) * std::sin(2.0 * M_PI * u);
          },
          0.0, 1.0, 1e-11);
      var += 2.0 * eps * cov.value + 0.5 * eps * eps;
    }
    d.tails_ = {bt.c0_plus, bt.c0_minus, bt.gamma0, var};
    return d;
  }

  static InitialDatum quantile_table(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("quantile_table: empty");
    std::sort(values.begin(), values.end());
    InitialDatum d;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = values.size() > 1 ? sample_variance(values) : 0.0;
    d.repr_ = Table{std::make_shared<const std::vector<double>>(std::move(values))};
    d.tails_ = {0.0, 0.0, mean, var};
    return d;
  }

  double quantile(double u) const {
    if (!(u > 0.0 && u < 1.0)) {
      throw std::domain_error("quantile: u outside (0,1)");
    }
    if (const auto* p = std::get_if<Point>(&repr_)) return p->a;
    if (const auto* p = std::get_if<Uniform>(&repr_)) {
      return p->a + (p->b - p->a) * u;
    }
    if (const auto* p = std::get_if<Gauss>(&repr_)) {
      return p->mean + std::sqrt(p->var) * inverse_normal_cdf(u);
    }
    if (const auto* p = std::get_if<Cauchy>(&repr_)) {
      return p->pos + p->scale * std::tan(M_PI * (u - 0.5));
    }
    if (const auto* p = std::get_if<Pareto>(&repr_)) {
      if (u < 0.25) return -std::pow(p->c0 / u, 1.0 / p->alpha);
      if (u > 0.75) return std::pow(p->c0 / (1.0 - u), 1.0 / p->alpha);
      return 2.0 * p->xc * (2.0 * u - 1.0);
    }
    if (const auto* p = std::get_if<Perturbed>(&repr_)) {
      return p->base->quantile(u) + p->eps * std::sin(2.0 * M_PI * u);
    }
    const auto& t = std::get<Table>(repr_);
    const auto& v = *t.values;
    auto idx = static_cast<std::size_t>(u * static_cast<double>(v.size()));
    return v[std::min(idx, v.size() - 1)];
  }

  double sample(Rng& rng) const { return quantile(rng.uniform_open()); }

  const DatumTails& tails() const { return tails_; }

  std::optional<double> cdf(double x) const {
    if (const auto* p = std::get_if<Point>(&repr_)) {
      return x < p->a ? 0.0 : 1.0;
    }
    if (const auto* p = std::get_if<Uniform>(&repr_)) {
      return std::clamp((x - p->a) / (p->b - p->a), 0.0, 1.0);
    }
    if (const auto* p = std::get_if<Gauss>(&repr_)) {
      if (p->var == 0.0) return x < p->mean ? 0.0 : 1.0;
      return normal_cdf((x - p->mean) / std::sqrt(p->var));
    }
    if (const auto* p = std::get_if<Cauchy>(&repr_)) {
      return 0.5 + std::atan((x - p->pos) / p->scale) / M_PI;
    }
    if (const auto* p = std::get_if<Pareto>(&repr_)) {
      if (x <= -p->xc) return p->c0 * std::pow(-x, -p->alpha);
      if (x >= p->xc) return 1.0 - p->c0 * std::pow(x, -p->alpha);
      return 0.25 + (x + p->xc) / (4.0 * p->xc);
    }
    if (const auto* t = std::get_if<Table>(&repr_)) {
      const auto& v = *t->values;
      auto it = std::upper_bound(v.begin(), v.end(), x);
      return static_cast<double>(it - v.begin()) / static_cast<double>(v.size());
    }
    return std::nullopt;
  }

  std::optional<std::complex<double>> cf(double xi) const {
    const std::complex<double> i1(0.0, 1.0);
    if (const auto* p = std::get_if<Point>(&repr_)) {
      return std::exp(i1 * (p->a * xi));
    }
    if (const auto* p = std::get_if<Uniform>(&repr_)) {
      double w = p->b - p->a;
      if (std::abs(xi) * w < 1e-6) {
        // series around xi = 0, third order is enough below the threshold
        double m1 = 0.5 * (p->a + p->b);
        double m2 = (p->a * p->a + p->a * p->b + p->b * p->b) / 3.0;
        return std::complex<double>(1.0 - 0.5 * m2 * xi * xi, m1 * xi);
      }
      return (std::exp(i1 * (p->b * xi)) - std::exp(i1 * (p->a * xi))) /
             (i1 * (w * xi));
    }
    if (const auto* p = std::get_if<Gauss>(&repr_)) {
      return std::exp(std::complex<double>(-0.5 * p->var * xi * xi,
                                           p->mean * xi));
    }
    if (const auto* p = std::get_if<Cauchy>(&repr_)) {
      return std::exp(std::complex<double>(-p->scale * std::abs(xi),
                                           p->pos * xi));
    }
    if (const auto* t = std::get_if<Table>(&repr_)) {
      std::complex<double> s(0.0, 0.0);
      for (double v : *t->values) s += std::exp(i1 * (v * xi));
      return s / static_cast<double>(t->values->size());
    }
    return std::nullopt;
  }

  std::string describe() const {
    if (const auto* p = std::get_if<Point>(&repr_)) {
      return "point:a=" + format_double(p->a);
    }
    if (const auto* p = std::get_if<Uniform>(&repr_)) {
      return "uniform:a=" + format_double(p->a) + ",b=" + format_double(p->b);
    }
    if (const auto* p = std::get_if<Gauss>(&repr_)) {
      return "gaussian:mean=" + format_double(p->mean) +
             ",var=" + format_double(p->var);
    }
    if (const auto* p = std::get_if<Cauchy>(&repr_)) {
      return "cauchy:scale=" + format_double(p->scale) +
             ",pos=" + format_double(p->pos);
    }
    if (const auto* p = std::get_if<Pareto>(&repr_)) {
      return "pareto-sym:alpha=" + format_double(p->alpha) +
             ",c0=" + format_double(p->c0);
    }
    if (const auto* p = std::get_if<Perturbed>(&repr_)) {
      return "perturbed:eps=" + format_double(p->eps) +
             ",base=" + p->base->describe();
    }
    const auto& t = std::get<Table>(repr_);
    return "table:n=" + std::to_string(t.values->size());
  }

 private:
  struct Point {
    double a;
  };
  struct Uniform {
    double a, b;
  };
  struct Gauss {
    double mean, var;
  };
  struct Cauchy {
    double scale, pos;
  };
  struct Pareto {
    double alpha, c0, xc;
  };
  struct Perturbed {
    std::shared_ptr<const InitialDatum> base;
    double eps;
  };
  struct Table {
    std::shared_ptr<const std::vector<double>> values;
  };

  InitialDatum() = default;

  std::variant<Point, Uniform, Gauss, Cauchy, Pareto, Perturbed, Table> repr_;
  DatumTails tails_;
};

inline InitialDatum parse_datum(const std::string& spec) {
  auto bad = [&](const std::string& why) {
    return std::invalid_argument("parse_datum: " + why + " in '" + spec + "'");
  };
  auto colon = spec.find(':');
  std::string head = spec.substr(0, colon);
  std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  auto fields = [&](std::size_t want) {
    auto kvs = split(rest, ',');
    if (kvs.size() != want) throw bad("wrong field count");
    std::vector<double> out;
    for (const auto& kv : kvs) out.push_back(parse_double(split_kv(kv).second));
    return out;
  };
  if (head == "point") {
    return InitialDatum::point_mass(fields(1)[0]);
  }
  if (head == "uniform") {
    auto f = fields(2);
    return InitialDatum::uniform_interval(f[0], f[1]);
  }
  if (head == "gaussian") {
    auto f = fields(2);
    return InitialDatum::gaussian(f[0], f[1]);
  }
  if (head == "cauchy") {
    auto f = fields(2);
    return InitialDatum::cauchy(f[0], f[1]);
  }
  if (head == "pareto-sym") {
    auto f = fields(2);
    return InitialDatum::pareto_symmetric(f[0], f[1]);
  }
  if (head == "perturbed") {
    auto basepos = rest.find(",base=");
    if (rest.rfind("eps=", 0) != 0 || basepos == std::string::npos) {
      throw bad("expected perturbed:eps=<v>,base=<datum spec>");
    }
    double eps = parse_double(rest.substr(4, basepos - 4));
    return InitialDatum::perturbed_quantile(
        parse_datum(rest.substr(basepos + 6)), eps);
  }
  throw bad("unknown datum family");
}

}  // namespace kaclab
