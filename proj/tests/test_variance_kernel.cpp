#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "randpoly/selftest.hpp"
#include "randpoly/variance_kernel.hpp"

using namespace randpoly;

namespace {
VarianceKernel kac(int n) { return VarianceKernel::from_profile(CoefficientProfile::kac(n)); }
}  // namespace

TEST(EvalF, KacGeometricSeries)
{
    for (int n : {1, 5, 40, 1000}) {
        EXPECT_NEAR(kac(n).eval_f(0.5).value, 2.0 * (1.0 - std::pow(2.0, -(n + 1))), 1e-14);
        for (double x : {0.1, 0.9, 0.999, 1.0, 1.5})
            EXPECT_NEAR(kac(n).eval_f(x).value, oracle::geometric(n, x),
                        1e-13 * oracle::geometric(n, x));
    }
}

TEST(EvalF, AtZeroIsLeadingConstant)
{
    const auto k = VarianceKernel::from_profile(CoefficientProfile::power_law(1.0, 3.0, 6));
    // power_law reads k^rho as max(k,1)^rho, so c_0 = scale
    EXPECT_DOUBLE_EQ(k.eval_f(0.0).value, 9.0);
}

TEST(EvalF, LogValueSurvivesOverflow)
{
    const auto k = VarianceKernel::from_profile(CoefficientProfile::hyperbolic(20.0, 5000));
    const auto v = k.eval_f(1.2);
    EXPECT_TRUE(std::isfinite(v.log_value));
    EXPECT_GT(v.log_value, 700.0);
}

TEST(EvalF, RejectsNegativeX) { EXPECT_THROW((void)kac(3).eval_f(-0.1), std::domain_error); }

TEST(EvalFDerivs, KacDegreeTwoAtOne)
{
    const auto d = kac(2).eval_f_derivs(1.0);
    EXPECT_DOUBLE_EQ(d.f, 3.0);
    EXPECT_DOUBLE_EQ(d.df, 3.0);
    EXPECT_DOUBLE_EQ(d.d2f, 2.0);
}

TEST(EvalFDerivs, MatchesFiniteDifference)
{
    for (auto p : {CoefficientProfile::kac(30), CoefficientProfile::hyperbolic(2.5, 30),
                   CoefficientProfile::kac_derivative(2, 30)}) {
        const auto k = VarianceKernel::from_profile(p);
        const double x = 0.7, h = 1e-6;
        const double fd = (k.eval_f(x + h).value - k.eval_f(x - h).value) / (2 * h);
        const auto d = k.eval_f_derivs(x);
        EXPECT_NEAR(d.df, fd, 1e-6 * std::abs(fd)) << p.id();
        const double fd2 = (k.eval_f_derivs(x + h).df - k.eval_f_derivs(x - h).df) / (2 * h);
        EXPECT_NEAR(d.d2f, fd2, 1e-6 * std::abs(fd2)) << p.id();
    }
}

TEST(EvalFDerivs, HyperbolicRatioAtZero)
{
    for (double L : {0.5, 1.0, 3.0, 7.0}) {
        const auto d = VarianceKernel::from_profile(CoefficientProfile::hyperbolic(L, 20))
                           .eval_f_derivs(1e-9);
        EXPECT_NEAR(d.df / d.f, L, 1e-6 * L);
    }
}

TEST(IndexMoments, MatchDirectSums)
{
    const auto p = CoefficientProfile::hyperbolic(3.0, 25);
    const auto seq = coeff_sequence(p);
    const auto k = VarianceKernel(seq);
    for (double x : {0.2, 0.9, 1.0, 1.3}) {
        long double w = 0, m1 = 0, m2 = 0;
        for (std::size_t j = 0; j < seq.size(); ++j) {
            const long double t = static_cast<long double>(seq.values[j]) * seq.values[j] *
                                  std::pow(static_cast<long double>(x), static_cast<long double>(j));
            w += t;
            m1 += j * t;
            m2 += static_cast<long double>(j) * j * t;
        }
        const double mean = static_cast<double>(m1 / w);
        const double var = static_cast<double>(m2 / w - (m1 / w) * (m1 / w));
        const auto im = k.index_moments(x);
        EXPECT_NEAR(im.mean, mean, 1e-12 * mean);
        EXPECT_NEAR(im.variance, var, 1e-9 * var);
        EXPECT_NEAR(k.log_variance_radicand(x), var / x, 1e-9 * var / x);
    }
}

TEST(FBinomial, KacIsGeometric)
{
    for (int n : {0, 3, 50})
        for (double x : {-0.9, 0.0, 0.4, 0.99})
            EXPECT_NEAR(f_binomial(n, 1.0, x), oracle::geometric(n, x), 1e-14 * (1 + oracle::geometric(n, x)));
}

TEST(FBinomial, RecursionResidual)
{
    const int n = 50;
    const double L = 2.5, x = 0.9;
    const double lhs = f_binomial(n, L, x);
    const double b = static_cast<double>(oracle::binom_product(L, n));
    const double rhs =
        detail::f_binomial_dd(n, L - 1.0, x).to_double() / (1.0 - x) - b * std::pow(x, n + 1) / (1.0 - x);
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::abs(lhs));
}

TEST(FBinomial, DirectSumOracle)
{
    for (double L : {0.5, 2.0, 4.5})
        for (double x : {-0.7, 0.3, 0.95}) {
            long double s = 0;
            for (int k = 0; k <= 80; ++k)
                s += oracle::binom_product(L, k) * std::pow(static_cast<long double>(x), k);
            EXPECT_NEAR(f_binomial(80, L, x), static_cast<double>(s), 1e-12 * std::abs(static_cast<double>(s)));
        }
}

TEST(FBinomial, AlternatingSumBound)
{
    // For x in [-1/L, 0] the terms b_{k,L}|x|^k are nonincreasing, so the
    // alternating sum stays within [0, 1].
    for (double L : {1.0, 1.5, 2.0, 4.0})
        for (int n : {1, 2, 7, 64, 301})
            for (int i = 0; i <= 50; ++i) {
                const double x = -static_cast<double>(i) / 50.0 / L;
                const double v = f_binomial(n, L, x);
                EXPECT_LE(v, 1.0 + 1e-14) << L << " " << n << " " << x;
                EXPECT_GE(v, -1e-14) << L << " " << n << " " << x;
            }
}

TEST(FBinomial, HockeyStickAtOne)
{
    for (double L : {1.0, 2.0, 3.5})
        EXPECT_NEAR(f_binomial(30, L, 1.0),
                    static_cast<double>(oracle::binom_product(L + 1, 30)),
                    1e-12 * static_cast<double>(oracle::binom_product(L + 1, 30)));
}

TEST(FReciprocal, KacIsGeometric)
{
    for (int n : {0, 4, 99})
        for (double x : {-1.0, -0.3, 0.0, 0.5, 0.97})
            EXPECT_NEAR(f_reciprocal(n, 1.0, x), oracle::geometric(n, x), 1e-13 * (1 + oracle::geometric(n, x)));
}

TEST(FReciprocal, AtZero)
{
    for (double L : {0.5, 1.0, 6.0})
        EXPECT_EQ(f_reciprocal(17, L, 0.0), 1.0);
}

TEST(FReciprocal, MatchesReversedBinomial)
{
    // x^n f_{n,L}(1/x) / b_{n,L}
    const int n = 40;
    for (double L : {1.5, 3.0})
        for (double x : {0.5, 0.8}) {
            long double s = 0;
            for (int k = 0; k <= n; ++k)
                s += oracle::binom_product(L, k) * std::pow(static_cast<long double>(x), n - k);
            s /= oracle::binom_product(L, n);
            EXPECT_NEAR(f_reciprocal(n, L, x), static_cast<double>(s), 1e-12 * static_cast<double>(s));
        }
}

TEST(FReciprocal, DomainChecks)
{
    EXPECT_THROW(f_reciprocal(5, -2.0, 0.5), std::invalid_argument);
    EXPECT_THROW(f_reciprocal(5, 1.0, 1.5), std::domain_error);
}

TEST(FInfinity, PureHyperbolic)
{
    for (double L : {1.0, 2.0, 3.5})
        for (double x : {0.0, 0.3, 0.75, 0.99}) {
            const auto v = eval_f_infinity(LimitingFunction::hyperbolic(L), x);
            EXPECT_NEAR(v.f, std::pow(1 - x, -L), 1e-12 * v.f);
            EXPECT_NEAR(v.df, L * std::pow(1 - x, -L - 1), 1e-12 * v.df);
            EXPECT_NEAR(v.d2f, L * (L + 1) * std::pow(1 - x, -L - 2), 1e-12 * v.d2f);
        }
    EXPECT_DOUBLE_EQ(eval_f_infinity(LimitingFunction::hyperbolic(1.0), 0.75).f, 4.0);
}

TEST(FInfinity, KacDerivativeMatchesSeries)
{
    const auto p = CoefficientProfile::kac_derivative(2, 4000);
    const auto lim = LimitingFunction::from_profile(p);
    const double x = 0.6;
    const auto v = eval_f_infinity(lim, x);
    const double direct = VarianceKernel::from_profile(p).eval_f(x).value;
    EXPECT_NEAR(v.f, direct, 1e-11 * direct);
}

TEST(FInfinity, RatioConvergesMonotonically)
{
    const double x = 0.9;
    const double finf = eval_f_infinity(LimitingFunction::hyperbolic(2.0), x).f;
    double prev = std::numeric_limits<double>::infinity();
    for (int n = 64; n <= 16384; n *= 2) {
        const double u = VarianceKernel::from_profile(CoefficientProfile::hyperbolic(2.0, n)).eval_f(x).value / finf;
        const double resid = std::abs(1.0 - u);
        EXPECT_LE(resid, prev);
        prev = resid;
    }
    EXPECT_LT(prev, 1e-14);
}

TEST(FInfinity, RejectsOutsideUnitInterval)
{
    EXPECT_THROW(eval_f_infinity(LimitingFunction::hyperbolic(1.0), 1.0), std::domain_error);
}

TEST(FrozenBounds, TailBoundWithinFixture)
{
    const auto fc = selftest::parse_fixture(selftest::read_json_file(selftest::default_fixture_path()));
    for (double L : selftest::bound_exponents())
        EXPECT_LE(selftest::tail_bound_ratio(512, L), fc.tail_bound_C * selftest::kHeadroom) << L;
}

TEST(FrozenBounds, ReciprocalBoundWithinFixture)
{
    const auto fc = selftest::parse_fixture(selftest::read_json_file(selftest::default_fixture_path()));
    for (double L : selftest::bound_exponents())
        EXPECT_LE(selftest::reciprocal_bound_ratio(512, L), fc.reciprocal_bound_C * selftest::kHeadroom) << L;
}
