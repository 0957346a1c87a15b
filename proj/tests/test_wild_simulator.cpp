#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "kaclab/datum.hpp"
#include "kaclab/quadrature.hpp"
#include "kaclab/wild.hpp"
#include "oracles.hpp"

using kaclab::CollisionKernel;
using kaclab::InitialDatum;
using kaclab::Rng;
using kaclab::WeightArray;

namespace {

CollisionKernel mixing_kernel() {
  // two atoms, neither power-sum conserving pathwise; alpha ~ 1.1
  return CollisionKernel::discrete({{0.9, 0.3, 0.5}, {0.2, 0.7, 0.5}});
}

}  // namespace

TEST(WeightGrowth, StartStateAndFirstSplit) {
  auto k = CollisionKernel::deterministic(0.35, 0.85);
  WeightArray a(k);
  ASSERT_EQ(a.weights.size(), 1u);
  EXPECT_EQ(a.weights[0], 1.0);
  Rng rng(1);
  grow_weights(a, 0, rng);
  EXPECT_EQ(a.weights.size(), 1u);
  grow_weights(a, 1, rng);
  ASSERT_EQ(a.weights.size(), 2u);
  EXPECT_EQ(a.weights[0], 0.35);
  EXPECT_EQ(a.weights[1], 0.85);
}

TEST(WeightGrowth, PathwiseConservation) {
  Rng rng(2);
  // each kernel conserves sum beta^alpha along every path
  struct Case {
    CollisionKernel k;
    double alpha;
  } cases[] = {
      {CollisionKernel::uniform(), 1.0},
      {CollisionKernel::deterministic(M_SQRT1_2, M_SQRT1_2), 2.0},
      {CollisionKernel::inelastic_kac(1.0), 1.0},
  };
  for (const auto& c : cases) {
    WeightArray a(c.k);
    grow_weights(a, 200, rng);
    double s = 0.0;
    for (double w : a.weights) s += std::pow(w, c.alpha);
    EXPECT_NEAR(s, 1.0, 1e-12) << c.k.describe();
  }
}

TEST(WeightGrowth, MartingaleAtAlpha) {
  auto k = mixing_kernel();
  double alpha = kaclab::find_alpha(k);
  Rng rng(3);
  for (std::size_t n : {8u, 64u, 512u}) {
    std::size_t reps = n <= 64 ? 4000 : 1500;
    auto ms = kaclab::weight_p_sum_stats(k, alpha, n, reps, rng);
    EXPECT_NEAR(ms.mean, 1.0, 4.0 * ms.stderr_) << "n=" << n;
  }
}

TEST(WeightMoments, GammaRatioReference) {
  auto uni = CollisionKernel::uniform();
  // S(1)=0, S(2)=-1/3, S(3)=-1/2 feed the Gamma-ratio mean identity
  EXPECT_NEAR(kaclab::weight_p_sum_reference(uni, 1.0, 17), 1.0, 1e-12);
  double want32 = std::exp(std::lgamma(32.0 - 1.0 / 3.0) - std::lgamma(32.0) -
                           std::lgamma(2.0 / 3.0));
  EXPECT_NEAR(kaclab::weight_p_sum_reference(uni, 2.0, 32), want32, 1e-12);
  // S(p) = -1 exactly when both factors vanish almost surely
  auto absorbing = CollisionKernel::discrete({{0.0, 0.0, 1.0}});
  EXPECT_THROW(kaclab::weight_p_sum_reference(absorbing, 2.0, 4),
               std::invalid_argument);

  Rng rng(4);
  for (double p : {1.0, 2.0, 3.0}) {
    for (std::size_t n : {8u, 32u}) {
      auto ms = kaclab::weight_p_sum_stats(uni, p, n, 10000, rng);
      double want = kaclab::weight_p_sum_reference(uni, p, n);
      EXPECT_NEAR(ms.mean, want, 4.0 * ms.stderr_ + 1e-12)
          << "p=" << p << " n=" << n;
    }
  }
}

TEST(WeightMoments, TimeRandomizedExponential) {
  auto uni = CollisionKernel::uniform();
  Rng rng(5);
  for (double t : {1.0, 2.0, 3.0}) {
    auto ms = kaclab::time_randomized_p_sum_stats(uni, 2.0, t, 20000, rng);
    EXPECT_NEAR(ms.mean, std::exp(-t / 3.0), 4.0 * ms.stderr_) << "t=" << t;
  }
}

TEST(LeafCount, TZeroIsOneWithoutDraws) {
  Rng a(6), b(6);
  EXPECT_EQ(kaclab::sample_n_t(0.0, a), 1u);
  EXPECT_EQ(a.bits(), b.bits());  // rng untouched at t=0
}

TEST(LeafCount, MeanAndPmf) {
  Rng rng(7);
  const int n = 100000;
  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += static_cast<double>(kaclab::sample_n_t(2.0, rng));
  mean /= n;
  double var = (1.0 - std::exp(-2.0)) * std::exp(4.0);
  EXPECT_NEAR(mean, std::exp(2.0), 4.0 * std::sqrt(var / n));

  int ones = 0;
  for (int i = 0; i < n; ++i) ones += kaclab::sample_n_t(1.0, rng) == 1;
  double p = std::exp(-1.0);
  EXPECT_NEAR(static_cast<double>(ones) / n, p,
              4.0 * std::sqrt(p * (1.0 - p) / n));
}

TEST(LeafCount, TruncationAccounting) {
  EXPECT_NEAR(kaclab::truncation_mass(3.0, 4),
              std::pow(-std::expm1(-3.0), 4.0), 1e-15);
  EXPECT_EQ(kaclab::truncation_mass(0.0, 4), 0.0);

  Rng rng(8);
  kaclab::TruncationCounter counter;
  auto datum = InitialDatum::point_mass(1.0);
  auto k = CollisionKernel::uniform();
  const int n = 20000;
  int aborted = 0;
  for (int i = 0; i < n; ++i) {
    aborted += !kaclab::sample_v_t(k, datum, 3.0, rng, 4, &counter).has_value();
  }
  EXPECT_EQ(counter.attempts, static_cast<std::uint64_t>(n));
  EXPECT_EQ(counter.truncated, static_cast<std::uint64_t>(aborted));
  double p = kaclab::truncation_mass(3.0, 4);
  EXPECT_NEAR(counter.rate(), p, 4.0 * std::sqrt(p * (1.0 - p) / n));
}

TEST(SampleVt, TZeroIsOneDatumDraw) {
  auto k = CollisionKernel::uniform();
  auto datum = InitialDatum::cauchy(1.0, 0.3);
  Rng a(9), b(9);
  auto v = kaclab::sample_v_t(k, datum, 0.0, a);
  ASSERT_TRUE(v.has_value());
  EXPECT_EQ(*v, datum.sample(b));
}

TEST(SampleVt, CauchyIsStationaryForUniformKernel) {
  auto k = CollisionKernel::uniform();
  auto datum = InitialDatum::cauchy(1.0, 0.3);
  Rng rng(10);
  for (double t : {1.0, 4.0}) {
    std::vector<double> xs;
    xs.reserve(30000);
    while (xs.size() < 30000) {
      auto v = kaclab::sample_v_t(k, datum, t, rng);
      if (v) xs.push_back(*v);
    }
    double ks = kaclab::kolmogorov_distance(
        xs, [&](double x) { return *datum.cdf(x); });
    EXPECT_LT(ks, kaclab::ks_critical_one_sample(xs.size())) << "t=" << t;
  }
}

TEST(SampleVt, GaussianIsStationaryWhenSquaresConserved) {
  auto k = CollisionKernel::deterministic(M_SQRT1_2, M_SQRT1_2);
  auto datum = InitialDatum::gaussian(0.0, 2.0);
  Rng rng(11);
  std::vector<double> xs;
  xs.reserve(20000);
  while (xs.size() < 20000) {
    auto v = kaclab::sample_v_t(k, datum, 2.0, rng);
    if (v) xs.push_back(*v);
  }
  double ks = kaclab::kolmogorov_distance(
      xs, [&](double x) { return *datum.cdf(x); });
  EXPECT_LT(ks, kaclab::ks_critical_one_sample(xs.size()));
  auto ms = kaclab::mean_stderr(xs);
  EXPECT_NEAR(ms.mean, 0.0, 4.0 * ms.stderr_);
  double var = kaclab::sample_variance(xs);
  EXPECT_NEAR(var, 2.0, 4.0 * var * std::sqrt(2.0 / 20000.0));
}

TEST(CoupledPair, IdenticalLawsGiveIdenticalCoordinates) {
  auto k = CollisionKernel::uniform();
  auto datum = InitialDatum::cauchy(1.0, 0.0);
  auto steady = [&](double u) { return datum.quantile(u); };
  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    auto pr = kaclab::coupled_pair(k, datum, steady, 2.0, rng);
    ASSERT_TRUE(pr.has_value());
    EXPECT_EQ(pr->first, pr->second);
  }
}

TEST(CoupledPair, TZeroIsTheOptimalMarginalCoupling) {
  auto k = CollisionKernel::uniform();
  auto datum = InitialDatum::uniform_interval(-1.0, 1.0);
  auto steady = [](double u) { return kaclab::inverse_normal_cdf(u); };
  Rng a(13), b(13);
  auto pr = kaclab::coupled_pair(k, datum, steady, 0.0, a);
  ASSERT_TRUE(pr.has_value());
  double u = b.uniform_open();
  EXPECT_EQ(pr->first, datum.quantile(u));
  EXPECT_EQ(pr->second, steady(u));
}

TEST(CoupledPair, SquaredGapContractsExponentially) {
  auto k = CollisionKernel::uniform();
  auto base = InitialDatum::cauchy(1.0, 0.0);
  auto datum = InitialDatum::perturbed_quantile(base, 0.5);
  auto steady = [&](double u) { return base.quantile(u); };
  Rng rng(14);
  const double t = 2.0;
  std::vector<double> gaps;
  gaps.reserve(30000);
  while (gaps.size() < 30000) {
    auto pr = kaclab::coupled_pair(k, datum, steady, t, rng);
    if (pr) {
      double d = pr->first - pr->second;
      gaps.push_back(d * d);
    }
  }
  auto ms = kaclab::mean_stderr(gaps);
  // with sin perturbation the coupled second moment is exactly
  // (eps^2/2) e^{t S(2)}; S(2) = -1/3 for the uniform kernel
  double exact = 0.125 * std::exp(-t / 3.0);
  EXPECT_NEAR(ms.mean, exact, 4.0 * ms.stderr_);
  // and it sits below the generic bound 2 E|q0-qinf|^2 e^{t S(2)}
  EXPECT_LT(ms.mean - 4.0 * ms.stderr_, 2.0 * 0.125 * std::exp(-t / 3.0));
}

TEST(CoupledPair, RejectsMissingSteadyQuantile) {
  auto k = CollisionKernel::uniform();
  auto datum = InitialDatum::cauchy(1.0, 0.0);
  Rng rng(15);
  EXPECT_THROW(
      kaclab::coupled_pair(k, datum, std::function<double(double)>{}, 1.0, rng),
      kaclab::CouplingUnavailable);
}

TEST(Enumeration, ReplaceAppendMatchesOrderedRecursion) {
  oracle::TwoAtomKernel k1{0.9, 0.3, 0.5, 0.2, 0.7};
  oracle::TwoAtomKernel k2{0.5, 0.5, 0.7, 1.2, 0.1};
  oracle::TwoPointLaw x{-1.0, 0.6, 2.0};
  for (const auto& k : {k1, k2}) {
    for (int n = 1; n <= 4; ++n) {
      auto a = oracle::weighted_sum_ordered_insert(k, x, n);
      auto b = oracle::weighted_sum_replace_append(k, x, n);
      EXPECT_LE(oracle::total_variation(a, b), 1e-12) << "n=" << n;
    }
  }
}

TEST(Enumeration, LibraryGrowthMatchesEnumeratedFrequencies) {
  oracle::TwoAtomKernel ok{0.9, 0.3, 0.5, 0.2, 0.7};
  oracle::TwoPointLaw ox{-1.0, 0.6, 2.0};
  auto exact = oracle::weighted_sum_replace_append(ok, ox, 3);

  auto k = mixing_kernel();
  // five-entry table realizes P{X=-1}=3/5, P{X=2}=2/5 exactly
  auto datum = InitialDatum::quantile_table({-1.0, -1.0, -1.0, 2.0, 2.0});
  Rng rng(16);
  const int reps = 300000;
  oracle::Dist emp;
  for (int i = 0; i < reps; ++i) {
    WeightArray a(k);
    grow_weights(a, 2, rng);
    double v = 0.0;
    for (double b : a.weights) v += b * datum.sample(rng);
    oracle::add_outcome(emp, v, 1.0 / reps);
  }
  EXPECT_LE(oracle::total_variation(exact, emp), 0.03);
}

TEST(Datum, QuantileCdfRoundTrip) {
  auto data = {
      InitialDatum::uniform_interval(-2.0, 3.0),
      InitialDatum::gaussian(0.5, 2.0),
      InitialDatum::cauchy(1.5, -0.7),
      InitialDatum::pareto_symmetric(1.5, 1.0),
  };
  for (const auto& d : data) {
    for (double u = 0.02; u < 1.0; u += 0.02) {
      EXPECT_NEAR(*d.cdf(d.quantile(u)), u, 1e-9) << d.describe();
    }
  }
}

TEST(Datum, ParetoSpliceIsContinuousWithExactTails) {
  double alpha = 1.5, c0 = 1.0;
  auto d = InitialDatum::pareto_symmetric(alpha, c0);
  double xc = std::pow(4.0 * c0, 1.0 / alpha);
  // quantile continuous across the splice probabilities 1/4 and 3/4
  EXPECT_NEAR(d.quantile(0.25 - 1e-12), -xc, 1e-9);
  EXPECT_NEAR(d.quantile(0.25 + 1e-12), -xc, 1e-9);
  EXPECT_NEAR(d.quantile(0.75 - 1e-12), xc, 1e-9);
  EXPECT_NEAR(d.quantile(0.75 + 1e-12), xc, 1e-9);
  // survival is exactly c0 x^-alpha beyond the splice
  for (double x : {xc, 2.0 * xc, 10.0 * xc}) {
    EXPECT_NEAR(1.0 - *d.cdf(x), c0 * std::pow(x, -alpha), 1e-14);
    EXPECT_NEAR(*d.cdf(-x), c0 * std::pow(x, -alpha), 1e-14);
  }
  EXPECT_EQ(d.tails().c0_plus, c0);
  EXPECT_EQ(d.tails().gamma0, 0.0);
  EXPECT_TRUE(std::isinf(d.tails().variance));
}

TEST(Datum, ParetoVarianceMatchesQuadratureWhenFinite) {
  auto d = InitialDatum::pareto_symmetric(3.0, 2.0);
  // x_c = 8^(1/3) = 2, variance = x_c^2/6 + 3 x_c^2/2 = 20/3
  EXPECT_NEAR(d.tails().variance, 20.0 / 3.0, 1e-12);
  // u = s^3 flattens the u^(-2/3) tail integrand; both tails are equal by
  // symmetry of the squared quantile
  auto mid = kaclab::integrate_adaptive(
      [&](double u) {
        double q = d.quantile(u);
        return q * q;
      },
      0.25, 0.75, 1e-10);
  auto tail = kaclab::integrate_adaptive(
      [&](double s) {
        double q = d.quantile(s * s * s);
        return q * q * 3.0 * s * s;
      },
      0.0, std::cbrt(0.25), 1e-10);
  ASSERT_TRUE(mid.converged);
  ASSERT_TRUE(tail.converged);
  EXPECT_NEAR(mid.value + 2.0 * tail.value, 20.0 / 3.0, 1e-7);
}

TEST(Datum, PerturbedGuardsMonotonicityAndTracksVariance) {
  EXPECT_THROW(
      InitialDatum::perturbed_quantile(InitialDatum::point_mass(0.0), 0.1),
      std::invalid_argument);
  auto base = InitialDatum::gaussian(0.0, 1.0);
  auto d = InitialDatum::perturbed_quantile(base, 0.3);
  EXPECT_EQ(d.tails().gamma0, 0.0);
  EXPECT_EQ(d.tails().c0_plus, 0.0);

  Rng rng(17);
  std::vector<double> xs(500000);
  for (auto& x : xs) x = d.sample(rng);
  auto ms = kaclab::mean_stderr(xs);
  EXPECT_NEAR(ms.mean, 0.0, 4.0 * ms.stderr_);
  double var = kaclab::sample_variance(xs);
  EXPECT_NEAR(var, d.tails().variance,
              5.0 * var * std::sqrt(2.0 / static_cast<double>(xs.size())));

  auto heavy = InitialDatum::perturbed_quantile(InitialDatum::cauchy(1.0, 0.0), 0.5);
  EXPECT_NEAR(heavy.tails().c0_plus, 1.0 / M_PI, 1e-15);
  EXPECT_TRUE(std::isinf(heavy.tails().variance));
}

TEST(Datum, CharacteristicFunctions) {
  auto uni = InitialDatum::uniform_interval(-1.0, 1.0);
  EXPECT_NEAR(uni.cf(0.5)->real(), std::sin(0.5) / 0.5, 1e-14);
  EXPECT_NEAR(uni.cf(0.5)->imag(), 0.0, 1e-14);
  // series branch continues the exact form smoothly near 0
  EXPECT_NEAR(uni.cf(2e-7)->real(), 1.0 - 4e-14 / 6.0, 1e-16);

  auto pt = InitialDatum::point_mass(0.4);
  EXPECT_NEAR(pt.cf(3.0)->real(), std::cos(1.2), 1e-15);
  EXPECT_NEAR(pt.cf(3.0)->imag(), std::sin(1.2), 1e-15);

  auto g = InitialDatum::gaussian(0.5, 2.0);
  auto gv = *g.cf(1.1);
  EXPECT_NEAR(std::abs(gv), std::exp(-0.5 * 2.0 * 1.21), 1e-14);
  EXPECT_NEAR(std::arg(gv), 0.5 * 1.1, 1e-14);

  auto c = InitialDatum::cauchy(1.5, -0.7);
  auto cv = *c.cf(2.0);
  EXPECT_NEAR(std::abs(cv), std::exp(-3.0), 1e-14);

  auto tab = InitialDatum::quantile_table({-1.0, 2.0});
  auto tv = *tab.cf(0.9);
  std::complex<double> want =
      0.5 * (std::exp(std::complex<double>(0, -0.9)) +
             std::exp(std::complex<double>(0, 1.8)));
  EXPECT_NEAR(tv.real(), want.real(), 1e-14);
  EXPECT_NEAR(tv.imag(), want.imag(), 1e-14);

  EXPECT_FALSE(InitialDatum::pareto_symmetric(1.5, 1.0).cf(1.0).has_value());
}

TEST(Datum, TableQuantiles) {
  auto d = InitialDatum::quantile_table({3.0, 1.0, 2.0});
  EXPECT_EQ(d.quantile(0.1), 1.0);
  EXPECT_EQ(d.quantile(0.5), 2.0);
  EXPECT_EQ(d.quantile(0.9), 3.0);
  EXPECT_EQ(*d.cdf(1.5), 1.0 / 3.0);
  EXPECT_EQ(*d.cdf(0.0), 0.0);
  EXPECT_EQ(*d.cdf(3.0), 1.0);
}

TEST(Datum, ParseRoundTrip) {
  const char* specs[] = {
      "point:a=0.5",
      "uniform:a=-1,b=1",
      "gaussian:mean=0,var=1",
      "cauchy:scale=3.1416,pos=0",
      "pareto-sym:alpha=1.5,c0=1",
      "perturbed:eps=0.5,base=cauchy:scale=1,pos=0",
  };
  for (const char* s : specs) {
    auto d = kaclab::parse_datum(s);
    EXPECT_EQ(d.describe(), s);
    auto again = kaclab::parse_datum(d.describe());
    Rng r1(18), r2(18);
    EXPECT_EQ(d.sample(r1), again.sample(r2)) << s;
  }
  EXPECT_THROW(kaclab::parse_datum("gaussian:mean=0"), std::invalid_argument);
  EXPECT_THROW(kaclab::parse_datum("perturbed:base=point:a=0"),
               std::invalid_argument);
  EXPECT_THROW(kaclab::parse_datum("wat:x=1"), std::invalid_argument);
  EXPECT_THROW(kaclab::parse_datum("uniform:a=2,b=1"), std::invalid_argument);
}
