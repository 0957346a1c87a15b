#include <gtest/gtest.h>

#include <cmath>

#include "kaclab/kernel.hpp"
#include "oracles.hpp"

using kaclab::CollisionKernel;
using kaclab::RateRegime;

namespace {

CollisionKernel inelastic_as_angle_map(double d) {
  double c = 1.0 + d;
  return CollisionKernel::angle_map(
      [c](double th) { return std::pow(std::abs(std::cos(th)), c); },
      [c](double th) { return std::pow(std::abs(std::sin(th)), c); });
}

}  // namespace

TEST(SFunction, UniformClosedForm) {
  auto k = CollisionKernel::uniform();
  for (double s : {0.5, 1.0, 2.0, 3.0, 5.0}) {
    EXPECT_NEAR(k.s_function(s), (1.0 - s) / (1.0 + s), 1e-12) << "s=" << s;
  }
  EXPECT_NEAR(k.phi(2.0), -1.0 / 6.0, 1e-12);
  EXPECT_NEAR(k.phi(3.0), -1.0 / 6.0, 1e-12);
  EXPECT_NEAR(k.s_function(1.0), 0.0, 1e-15);
}

TEST(SFunction, IdentityPairIsIdenticallyZero) {
  auto k = CollisionKernel::deterministic(1.0, 0.0);
  for (double q : {0.0, 0.3, 1.0, 2.0, 7.5}) {
    EXPECT_EQ(k.s_function(q), 0.0) << "q=" << q;
  }
}

TEST(SFunction, ZeroConventionAtQZero) {
  // S(0) must read the positivity mass, not the raw count of factors.
  auto k = CollisionKernel::deterministic(0.5, 0.0);
  EXPECT_EQ(k.s_function(0.0), 0.0);  // P{L>0} + P{R>0} - 1 = 1 + 0 - 1
  auto k2 = CollisionKernel::discrete({{0.7, 0.0, 0.5}, {0.3, 0.4, 0.5}});
  EXPECT_NEAR(k2.s_function(0.0), 0.5, 1e-15);  // 1 + 0.5 - 1
}

TEST(SFunction, InelasticClosedFormMatchesQuadrature) {
  for (double d : {0.0, 1.0, 2.5}) {
    auto closed = CollisionKernel::inelastic_kac(d);
    auto quad = inelastic_as_angle_map(d);
    for (double q : {0.5, 1.0, 2.0, 3.7}) {
      EXPECT_NEAR(closed.s_function(q), quad.s_function(q), 1e-8)
          << "d=" << d << " q=" << q;
    }
  }
}

TEST(SFunction, ConvexOnRandomDiscreteKernels) {
  kaclab::Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    double w = 0.2 + 0.6 * rng.uniform();
    auto k = CollisionKernel::discrete({{rng.uniform(), rng.uniform(), w},
                                        {rng.uniform(), rng.uniform(), 1.0 - w}});
    double prev = k.s_function(0.1);
    double cur = k.s_function(0.2);
    for (double q = 0.3; q <= 6.0; q += 0.1) {
      double next = k.s_function(q);
      EXPECT_GE(next - cur, cur - prev - 1e-12) << k.describe() << " q=" << q;
      prev = cur;
      cur = next;
    }
  }
}

TEST(SDerivative, ClosedForms) {
  EXPECT_NEAR(CollisionKernel::uniform().s_derivative(2.0), -2.0 / 9.0, 1e-12);
  double isq = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(CollisionKernel::deterministic(isq, isq).s_derivative(2.0),
              -0.5 * std::log(2.0), 1e-12);
  EXPECT_EQ(CollisionKernel::deterministic(1.0, 0.0).s_derivative(3.0), 0.0);
}

TEST(SDerivative, MatchesFiniteDifferences) {
  std::vector<CollisionKernel> kernels = {
      CollisionKernel::uniform(),
      CollisionKernel::inelastic_kac(1.0),
      CollisionKernel::inelastic_kac(0.4),
      CollisionKernel::deterministic(0.3, 0.8),
      CollisionKernel::discrete({{0.9, 0.3, 0.5}, {0.2, 0.7, 0.5}}),
  };
  for (const auto& k : kernels) {
    for (double q : {0.5, 1.0, 2.0, 3.5}) {
      double fd = oracle::derivative([&](double x) { return k.s_function(x); }, q);
      EXPECT_NEAR(k.s_derivative(q), fd, 1e-6) << k.describe() << " q=" << q;
    }
  }
}

TEST(MixedMoment, UniformAndInelasticClosedForms) {
  auto u = CollisionKernel::uniform();
  // E[U (1-U)] = 1/6, E[U^2 (1-U)] = 1/12
  EXPECT_NEAR(u.mixed_moment(1.0, 1.0), 1.0 / 6.0, 1e-13);
  EXPECT_NEAR(u.mixed_moment(2.0, 1.0), 1.0 / 12.0, 1e-13);
  auto ik = CollisionKernel::inelastic_kac(1.0);
  auto am = inelastic_as_angle_map(1.0);
  for (double a : {0.5, 1.0, 2.0}) {
    for (double b : {0.5, 1.0, 3.0}) {
      EXPECT_NEAR(ik.mixed_moment(a, b), am.mixed_moment(a, b), 1e-8);
    }
  }
  // consistency: E[L^q] + E[R^q] - 1 = S(q)
  for (double q : {0.7, 1.3, 2.6}) {
    EXPECT_NEAR(ik.mixed_moment(q, 0.0) + ik.mixed_moment(0.0, q) - 1.0,
                ik.s_function(q), 1e-12);
  }
}

TEST(FindAlpha, KnownRoots) {
  EXPECT_NEAR(kaclab::find_alpha(CollisionKernel::uniform()), 1.0, 1e-9);
  for (double d : {0.0, 1.0, 3.0}) {
    EXPECT_NEAR(kaclab::find_alpha(CollisionKernel::inelastic_kac(d)),
                2.0 / (1.0 + d), 1e-6)
        << "d=" << d;
  }
  double isq = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(kaclab::find_alpha(CollisionKernel::deterministic(isq, isq)), 2.0, 1e-9);
  EXPECT_NEAR(kaclab::find_alpha(CollisionKernel::deterministic(0.4, 0.4)),
              std::log(2.0) / std::log(2.5), 1e-9);
}

TEST(FindAlpha, RootResidualIsTiny) {
  std::vector<CollisionKernel> kernels = {
      CollisionKernel::uniform(),
      CollisionKernel::inelastic_kac(0.7),
      CollisionKernel::discrete({{0.9, 0.3, 0.5}, {0.2, 0.7, 0.5}}),
  };
  for (const auto& k : kernels) {
    double a = kaclab::find_alpha(k);
    EXPECT_LE(std::abs(k.s_function(a)), 1e-9) << k.describe();
  }
}

TEST(FindAlpha, NoRootCases) {
  EXPECT_THROW(kaclab::find_alpha(CollisionKernel::deterministic(0.9, 0.9)),
               kaclab::NoRootInRange);
  EXPECT_THROW(kaclab::find_alpha(CollisionKernel::deterministic(1.0, 0.0)),
               kaclab::NoRootInRange);
}

TEST(FindP0, UniformMinimizerIsOnePlusSqrtTwo) {
  auto k = CollisionKernel::uniform();
  auto p0 = kaclab::find_p0(k, 1.0);
  ASSERT_TRUE(p0.has_value());
  // phi = (1-s)/(s+s^2); the minimizer solves s^2 - 2s - 1 = 0
  EXPECT_NEAR(*p0, 1.0 + std::sqrt(2.0), 1e-5);
}

TEST(FindP0, MatchesDenseGridScan) {
  auto k = CollisionKernel::deterministic(0.5, 0.5);
  double alpha = kaclab::find_alpha(k);
  EXPECT_NEAR(alpha, 1.0, 1e-9);
  auto p0 = kaclab::find_p0(k, alpha);
  ASSERT_TRUE(p0.has_value());
  double ref = oracle::grid_argmin([&](double q) { return k.phi(q); },
                                   alpha + 1e-4, 20.0, 1e-4);
  EXPECT_NEAR(*p0, ref, 2e-4);
}

TEST(FindP0, InelasticNeighborhood) {
  auto p0 = kaclab::find_p0(CollisionKernel::inelastic_kac(1.0), 1.0);
  ASSERT_TRUE(p0.has_value());
  EXPECT_NEAR(*p0, 2.413, 2e-3);
  // scaling family: minimizer location scales like the root does
  auto p0d = kaclab::find_p0(CollisionKernel::inelastic_kac(0.0), 2.0);
  ASSERT_TRUE(p0d.has_value());
  EXPECT_NEAR(*p0d, 2.0 * *p0, 5e-3);
}

TEST(FindP0, EmptyWhenNoNegativeStretch) {
  EXPECT_FALSE(kaclab::find_p0(CollisionKernel::deterministic(0.9, 0.9), 2.0).has_value());
}

TEST(PBar, FiniteAndInfiniteCases) {
  EXPECT_TRUE(std::isinf(kaclab::p_bar(CollisionKernel::uniform(), 1.0)));
  auto k = CollisionKernel::discrete({{0.02, 0.02, 0.9}, {1.6, 1.6, 0.1}});
  double alpha = kaclab::find_alpha(k);
  double pb = kaclab::p_bar(k, alpha);
  ASSERT_TRUE(std::isfinite(pb));
  EXPECT_LT(k.s_function(pb - 1e-6), 0.0);
  EXPECT_GT(k.s_function(pb + 1e-6), 0.0);
}

TEST(RateConstant, UniformWorkedValues) {
  auto k = CollisionKernel::uniform();
  auto r25 = kaclab::rate_constant(k, 2.5, RateRegime::alpha_in_1_2);
  EXPECT_NEAR(r25.rate, 1.0 / 6.0, 1e-12);
  EXPECT_FALSE(r25.log_correction);
  auto r4 = kaclab::rate_constant(k, 4.0, RateRegime::alpha_in_1_2);
  EXPECT_NEAR(r4.rate, 3.0 / 20.0, 1e-12);
  EXPECT_FALSE(r4.log_correction);
  // the p=3 endpoint ties phi(3) = phi(2), which costs a factor of t
  auto r3 = kaclab::rate_constant(k, 3.0, RateRegime::alpha_in_1_2);
  EXPECT_NEAR(r3.rate, 1.0 / 6.0, 1e-12);
  EXPECT_TRUE(r3.log_correction);
  auto rw = kaclab::rate_constant(k, 2.0, RateRegime::wasserstein_low);
  EXPECT_NEAR(rw.rate, 1.0 / 6.0, 1e-12);
  // p < 1 needs a kernel with a root below p; the exponent picks up the p factor
  auto heavy = CollisionKernel::inelastic_kac(3.0);  // root at 1/2
  auto rhalf = kaclab::rate_constant(heavy, 0.8, RateRegime::wasserstein_low);
  EXPECT_NEAR(rhalf.rate, 0.8 * std::abs(heavy.phi(0.8)), 1e-12);
  auto rchi = kaclab::rate_constant(k, 2.0, RateRegime::chi);
  EXPECT_NEAR(rchi.rate, 1.0 / 3.0, 1e-12);
}

TEST(RateConstant, TracksEnvelopeOnDenseGrid) {
  auto k = CollisionKernel::uniform();
  for (double p = 2.0; p <= 8.0; p += 0.05) {
    double expected = std::abs(std::max(k.phi(2.0), k.phi(p)));
    EXPECT_NEAR(kaclab::rate_constant(k, p, RateRegime::alpha_in_1_2).rate, expected, 1e-12)
        << "p=" << p;
  }
  // constant stretch: phi(p) <= phi(2) throughout [2,3]
  for (double p = 2.0; p <= 3.0; p += 0.05) {
    EXPECT_NEAR(kaclab::rate_constant(k, p, RateRegime::alpha_in_1_2).rate, 1.0 / 6.0, 1e-12);
  }
}

TEST(RateConstant, AlphaTwoRegime) {
  double isq = 1.0 / std::sqrt(2.0);
  auto k = CollisionKernel::deterministic(isq, isq);
  // S(4) = -1/2, phi(4) = -1/8, phi(3)/12 = (2^{-1/2}-1)/36
  auto r4 = kaclab::rate_constant(k, 4.0, RateRegime::alpha_eq_2);
  double expected = std::abs(std::max(k.phi(4.0), k.phi(3.0) / 12.0));
  EXPECT_NEAR(r4.rate, expected, 1e-14);
  EXPECT_NEAR(r4.rate, (1.0 - isq) / 36.0, 1e-14);
  EXPECT_FALSE(r4.log_correction);
}

TEST(RateConstant, RejectsOutOfRange) {
  auto k = CollisionKernel::uniform();
  EXPECT_THROW(kaclab::rate_constant(k, 1.0, RateRegime::wasserstein_low),
               kaclab::RateUndefined);  // S(1) = 0
  EXPECT_THROW(kaclab::rate_constant(k, 0.5, RateRegime::chi), kaclab::RateUndefined);
  EXPECT_THROW(kaclab::rate_constant(k, 3.0, RateRegime::wasserstein_low),
               kaclab::RateUndefined);
  EXPECT_THROW(kaclab::rate_constant(k, 1.5, RateRegime::alpha_in_1_2),
               kaclab::RateUndefined);
}

TEST(ValidateH0, Reports) {
  auto good = kaclab::validate_h0(CollisionKernel::uniform(), 2.0);
  EXPECT_TRUE(good.ok());
  EXPECT_NEAR(good.positive_mass, 2.0, 1e-12);
  ASSERT_TRUE(good.alpha.has_value());
  EXPECT_NEAR(*good.alpha, 1.0, 1e-9);

  auto degen = kaclab::validate_h0(CollisionKernel::deterministic(1.0, 0.0), 2.0);
  EXPECT_FALSE(degen.ok());
  EXPECT_FALSE(degen.nondegenerate_ok);
  EXPECT_NEAR(degen.degenerate_mass, 1.0, 1e-12);

  auto small = kaclab::validate_h0(CollisionKernel::deterministic(0.4, 0.4), 1.0);
  EXPECT_TRUE(small.ok());
  ASSERT_TRUE(small.alpha.has_value());
  EXPECT_NEAR(*small.alpha, std::log(2.0) / std::log(2.5), 1e-9);
  EXPECT_NEAR(small.s_at_p, -0.2, 1e-12);
}

TEST(SpectralProfile, BundlesEverything) {
  auto prof = kaclab::spectral_profile(CollisionKernel::uniform());
  EXPECT_NEAR(prof.alpha, 1.0, 1e-9);
  ASSERT_TRUE(prof.p0.has_value());
  EXPECT_NEAR(*prof.p0, 1.0 + std::sqrt(2.0), 1e-5);
  EXPECT_TRUE(std::isinf(prof.p_bar));
  EXPECT_NEAR(prof.phi(2.0), -1.0 / 6.0, 1e-12);
  EXPECT_NEAR(prof.s_derivative(2.0), -2.0 / 9.0, 1e-12);
}

TEST(KernelSpec, ParseRoundTrip) {
  for (const char* spec :
       {"uniform", "inelastic-kac:d=1.5", "deterministic:l=0.5,r=0.25",
        "discrete:0.9,0.3,0.5;0.2,0.7,0.5"}) {
    auto k = kaclab::parse_kernel(spec);
    EXPECT_EQ(k.describe(), spec);
    auto again = kaclab::parse_kernel(k.describe());
    EXPECT_EQ(again.describe(), spec);
  }
  EXPECT_THROW(kaclab::parse_kernel("triangle"), std::invalid_argument);
  EXPECT_THROW(kaclab::parse_kernel("inelastic-kac:x=1"), std::invalid_argument);
  EXPECT_THROW(kaclab::parse_kernel("deterministic:l=0.5"), std::invalid_argument);
  EXPECT_THROW(kaclab::parse_kernel("discrete:0.5,0.5"), std::invalid_argument);
  EXPECT_THROW(kaclab::parse_kernel("discrete:0.5,0.5,0.7;0.1,0.1,0.7"),
               std::invalid_argument);
}

TEST(KernelSampling, MatchesMoments) {
  kaclab::Rng rng(99);
  std::vector<CollisionKernel> kernels = {
      CollisionKernel::uniform(),
      CollisionKernel::inelastic_kac(1.0),
      CollisionKernel::discrete({{0.9, 0.3, 0.5}, {0.2, 0.7, 0.5}}),
  };
  const int n = 200000;
  for (const auto& k : kernels) {
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      auto [l, r] = k.sample(rng);
      s1 += l + r;
      s2 += l * r;
    }
    s1 /= n;
    s2 /= n;
    double m1 = k.mixed_moment(1.0, 0.0) + k.mixed_moment(0.0, 1.0);
    double m2 = k.mixed_moment(1.0, 1.0);
    EXPECT_NEAR(s1, m1, 6.0 / std::sqrt(static_cast<double>(n))) << k.describe();
    EXPECT_NEAR(s2, m2, 6.0 / std::sqrt(static_cast<double>(n))) << k.describe();
  }
}
