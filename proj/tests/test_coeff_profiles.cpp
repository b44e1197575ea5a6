#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "randpoly/coeff_profiles.hpp"

using namespace randpoly;

TEST(BinomCoeffLog, KacIsOne) { EXPECT_EQ(binom_coeff_log(1.0, 17), 0.0); }

TEST(BinomCoeffLog, ZeroIndex)
{
    for (double L : {0.3, 1.0, 2.5, 40.0})
        EXPECT_EQ(binom_coeff_log(L, 0), 0.0);
}

TEST(BinomCoeffLog, SmallCase) { EXPECT_NEAR(binom_coeff_log(2.0, 3), std::log(4.0), 1e-15); }

TEST(BinomCoeffLog, MatchesProduct)
{
    for (double L : {0.5, 1.5, 3.0, 7.25})
        for (int k : {1, 5, 20, 150}) {
            const double want = std::log(static_cast<double>(oracle::binom_product(L, k)));
            EXPECT_NEAR(binom_coeff_log(L, k), want, 1e-12 * (1.0 + std::abs(want))) << L << " " << k;
        }
}

TEST(BinomCoeffLog, RejectsBadInput)
{
    EXPECT_THROW(binom_coeff_log(0.0, 3), std::invalid_argument);
    EXPECT_THROW(binom_coeff_log(1.0, -1), std::invalid_argument);
}

TEST(GenPoly, KacCase)
{
    const GeneralizedPolynomial h({{1.0, 1.0}});
    for (int k : {0, 1, 9, 1000})
        EXPECT_NEAR(eval_genpoly(h, k), 1.0, 1e-15);
    EXPECT_EQ(h.degree(), 0.0);
}

TEST(GenPoly, ClassicalLinear)
{
    const GeneralizedPolynomial h({{1.0, -1.0}, {2.0, 1.0}});
    EXPECT_NEAR(eval_genpoly(h, 5), 5.0, 1e-13);
    EXPECT_EQ(h.degree(), 1.0);
}

TEST(GenPoly, TermsMergedAndSorted)
{
    const GeneralizedPolynomial h({{3.0, 1.0}, {1.0, 2.0}, {3.0, 0.5}});
    ASSERT_EQ(h.terms().size(), 2u);
    EXPECT_EQ(h.terms()[0].L, 1.0);
    EXPECT_EQ(h.terms()[1].alpha, 1.5);
}

TEST(GenPoly, ZeroLeadingRejected)
{
    EXPECT_THROW(GeneralizedPolynomial({{2.0, 1.0}, {2.0, -1.0}}), std::invalid_argument);
    EXPECT_THROW(GeneralizedPolynomial({{-1.0, 1.0}}), std::invalid_argument);
}

TEST(GenPoly, FromMonomialMatchesDirectEvaluation)
{
    const std::vector<double> mono = {2.0, -1.0, 0.5, 0.25};  // 2 - k + k^2/2 + k^3/4
    const auto h = genpoly_from_monomial(mono);
    EXPECT_EQ(h.degree(), 3.0);
    for (int k = 0; k < 30; ++k) {
        const double want = 2.0 - k + 0.5 * k * k + 0.25 * k * k * k;
        EXPECT_NEAR(eval_genpoly(h, k), want, 1e-10 * (1.0 + std::abs(want)));
    }
}

TEST(Profiles, HyperbolicOneIsKac)
{
    const auto s = coeff_sequence(CoefficientProfile::hyperbolic(1.0, 8));
    ASSERT_EQ(s.size(), 9u);
    for (double v : s.values)
        EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(Profiles, KacDerivative)
{
    const auto s = coeff_sequence(CoefficientProfile::kac_derivative(1, 4));
    ASSERT_EQ(s.degree(), 3);
    for (int k = 0; k <= 3; ++k)
        EXPECT_DOUBLE_EQ(s.values[k], k + 1.0);
}

TEST(Profiles, KacDerivativeHigherOrder)
{
    // d-th derivative of sum x^k: coefficient of x^k is (k+1)...(k+d)
    const auto s = coeff_sequence(CoefficientProfile::kac_derivative(3, 12));
    ASSERT_EQ(s.degree(), 9);
    for (int k = 0; k <= 9; ++k)
        EXPECT_NEAR(s.values[k], (k + 1.0) * (k + 2.0) * (k + 3.0), 1e-10);
}

TEST(Profiles, HyperbolicCoefficient)
{
    const auto s = coeff_sequence(CoefficientProfile::hyperbolic(3.0, 5));
    EXPECT_NEAR(s.values[2], std::sqrt(6.0), 1e-14);
    for (int k = 0; k <= 5; ++k)
        EXPECT_NEAR(s.values[k] * s.values[k], static_cast<double>(oracle::binom_product(3.0L, k)),
                    1e-12 * s.values[k] * s.values[k]);
}

TEST(Profiles, HyperbolicLargeDegreeStaysFinite)
{
    const auto s = coeff_sequence(CoefficientProfile::hyperbolic(40.0, 20000));
    for (std::size_t k = 0; k < s.size(); ++k)
        ASSERT_TRUE(std::isfinite(s.log_abs[k]));
}

TEST(Profiles, PowerLaw)
{
    const auto s = coeff_sequence(CoefficientProfile::power_law(0.5, 2.0, 10));
    EXPECT_NEAR(s.values[9], 2.0 * 3.0, 1e-13);
}

TEST(Profiles, GenPolySqrtUsesHead)
{
    const GeneralizedPolynomial h({{1.0, -1.0}, {2.0, 1.0}});  // h(k) = k, zero at k = 0
    const auto s = coeff_sequence(CoefficientProfile::genpoly_sqrt(h, 6, 1, {1.0}));
    EXPECT_DOUBLE_EQ(s.values[0], 1.0);
    for (int k = 1; k <= 6; ++k)
        EXPECT_NEAR(s.values[k], std::sqrt(static_cast<double>(k)), 1e-13);
}

TEST(Profiles, GenPolySqrtRejectsNegativeValues)
{
    const GeneralizedPolynomial h({{1.0, 1.0}, {2.0, -1.0}});  // 1 - (k+1) = -k
    EXPECT_THROW(coeff_sequence(CoefficientProfile::genpoly_sqrt(h, 5)), std::invalid_argument);
}

TEST(Profiles, ValidationMeasuresTau)
{
    const auto v = validate_profile(CoefficientProfile::kac_derivative(1, 50));
    EXPECT_EQ(v.rho, 1.0);
    EXPECT_GT(v.tau1, 0.0);
    EXPECT_LE(v.tau1, v.tau2);
    // (k+1)/k^1 lies in [1, 2]
    EXPECT_NEAR(v.tau2, 2.0, 1e-12);
}

TEST(Profiles, ValidationRejectsVanishingTail)
{
    EXPECT_THROW(validate_profile(CoefficientProfile::explicit_list({1.0, 0.0, 1.0, 0.0})),
                 std::invalid_argument);
}

TEST(Profiles, ExplicitDegree)
{
    const auto p = CoefficientProfile::explicit_list({1.0, 2.0, 3.0});
    EXPECT_EQ(p.poly_degree(), 2);
    EXPECT_THROW((void)p.with_degree(5), std::invalid_argument);
}

TEST(Profiles, WithDegreeKeepsFamily)
{
    const auto p = CoefficientProfile::hyperbolic(2.0, 10).with_degree(30);
    EXPECT_EQ(p.poly_degree(), 30);
    EXPECT_EQ(p.L, 2.0);
}
