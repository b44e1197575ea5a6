#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "randpoly/mc_lab.hpp"
#include "randpoly/root_engine.hpp"

using namespace randpoly;

namespace {
RootSample solve(std::vector<double> const& c) { return solve_and_classify(std::span<const double>(c)); }

RootSample kac_sample(int n, std::size_t i, AtomSpec atom = AtomSpec::gaussian(), std::uint64_t seed = 5)
{
    return sample_roots(coeff_sequence(CoefficientProfile::kac(n)), atom, seed, i);
}
}  // namespace

TEST(FindRoots, DifferenceOfSquares)
{
    const auto s = solve({-1.0, 0.0, 1.0});
    ASSERT_EQ(s.roots.size(), 2u);
    auto r = s.real_roots;
    std::sort(r.begin(), r.end());
    ASSERT_EQ(r.size(), 2u);
    EXPECT_NEAR(r[0], -1.0, 1e-14);
    EXPECT_NEAR(r[1], 1.0, 1e-14);
    for (double res : s.residuals)
        EXPECT_LT(res, 1e-14);
    EXPECT_TRUE(s.pairs.empty());
}

TEST(FindRoots, ConjugatePair)
{
    const auto s = solve({1.0, 0.0, 1.0});
    EXPECT_TRUE(s.real_roots.empty());
    ASSERT_EQ(s.pairs.size(), 1u);
    EXPECT_NEAR(std::abs(s.pairs[0].first - cplx(0, 1)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(s.pairs[0].second - cplx(0, -1)), 0.0, 1e-14);
}

TEST(FindRoots, DoubleRealRootWithPair)
{
    // (x-1)^2 (x^2+x+1) = x^4 - x^3 - x + 1
    const auto s = solve({1.0, -1.0, 0.0, -1.0, 1.0});
    ASSERT_EQ(s.real_roots.size(), 2u);
    for (double x : s.real_roots)
        EXPECT_NEAR(x, 1.0, 1e-7);
    ASSERT_EQ(s.pairs.size(), 1u);
    EXPECT_NEAR(std::abs(s.pairs[0].first - std::polar(1.0, 2 * std::numbers::pi / 3)), 0.0, 1e-12);
}

TEST(FindRoots, KnownRootsRecovered)
{
    const std::vector<cplx> want = {0.3, -2.0, {0.5, 1.5}, {0.5, -1.5}, {-0.1, 0.02}, {-0.1, -0.02}, 7.0};
    const auto c = oracle::from_roots(want);
    std::vector<double> rc;
    for (auto z : c)
        rc.push_back(z.real());
    const auto s = solve(rc);
    ASSERT_EQ(s.roots.size(), want.size());
    for (auto w : want) {
        double best = 1e300;
        for (auto z : s.roots)
            best = std::min(best, std::abs(z - w));
        EXPECT_LT(best, 1e-10 * (1 + std::abs(w))) << w;
    }
    EXPECT_EQ(s.real_roots.size(), 3u);
    EXPECT_EQ(s.pairs.size(), 2u);
}

TEST(FindRoots, ZeroAndLeadingTrim)
{
    // x (x - 2) with two vanishing leading coefficients
    const auto s = solve({0.0, -2.0, 1.0, 0.0, 0.0});
    EXPECT_EQ(s.degree, 4);
    EXPECT_EQ(s.effective_degree, 2);
    ASSERT_EQ(s.real_roots.size(), 2u);
    EXPECT_EQ(std::count(s.real_roots.begin(), s.real_roots.end(), 0.0), 1);
}

TEST(FindRoots, ComplexCoefficients)
{
    const std::vector<cplx> want = {{1, 1}, {-0.5, 0.25}, {0, -3}};
    const auto c = oracle::from_roots(want);
    const auto s = find_roots(std::span<const cplx>(c));
    EXPECT_FALSE(s.real_coefficients);
    for (auto w : want) {
        double best = 1e300;
        for (auto z : s.roots)
            best = std::min(best, std::abs(z - w));
        EXPECT_LT(best, 1e-12);
    }
}

TEST(FindRoots, VietaOnKacSamples)
{
    for (std::size_t i = 0; i < 20; ++i) {
        const auto s = kac_sample(64, i);
        cplx sum = 0.0;
        for (auto z : s.roots)
            sum += z;
        const cplx want = -s.coeffs[63] / s.coeffs[64];
        EXPECT_LE(std::abs(sum - want), 1e-8 * (1 + std::abs(sum)));
    }
}

TEST(FindRoots, PartitionParityAndResiduals)
{
    for (auto atom : {AtomSpec::gaussian(), AtomSpec::rademacher(), AtomSpec::uniform_unitvar()})
        for (int n : {16, 64, 257})
            for (std::size_t i = 0; i < 10; ++i) {
                const auto s = kac_sample(n, i, atom);
                ASSERT_FALSE(s.degenerate) << s.failure;
                EXPECT_EQ(s.real_roots.size() + 2 * s.pairs.size(),
                          static_cast<std::size_t>(s.effective_degree));
                EXPECT_EQ((s.effective_degree - static_cast<int>(s.real_roots.size())) % 2, 0);
                for (auto const& [u, l] : s.pairs) {
                    EXPECT_GT(u.imag(), 0.0);
                    EXPECT_LE(std::abs(u - std::conj(l)), 1e-6 * (1 + std::abs(u)));
                }
                for (double r : s.residuals)
                    EXPECT_LT(r, 1e-10);
            }
}

TEST(FindRoots, Deterministic)
{
    const auto a = kac_sample(128, 3);
    const auto b = kac_sample(128, 3);
    ASSERT_EQ(a.roots.size(), b.roots.size());
    for (std::size_t i = 0; i < a.roots.size(); ++i)
        EXPECT_EQ(a.roots[i], b.roots[i]);
}

TEST(FindRoots, ZeroPolynomialRejected)
{
    const std::vector<double> z = {0.0, 0.0};
    EXPECT_THROW(find_roots(std::span<const double>(z)), std::invalid_argument);
}

TEST(CountInSet, Basic)
{
    const auto s = solve({-1.0, 0.0, 1.0});
    EXPECT_EQ(count_in_set(s, Interval{0, 2}), 1);
    EXPECT_EQ(count_in_set(s, Interval{}), 2);
    EXPECT_EQ(count_in_set(s, Interval{-1, 1}), 2);  // closed interval
    EXPECT_EQ(count_in_set(s, Disk{0.0, 1.5}), 2);
    EXPECT_EQ(count_in_set(s, Disk{2.0, 0.5}), 0);
    EXPECT_EQ(count_in_set(s, Annulus{0.0, 0.5, 1.0}), 2);
}

TEST(CountInSet, UnclassifiedIntervalRejected)
{
    const std::vector<double> c = {-1.0, 0.0, 1.0};
    const auto s = find_roots(std::span<const double>(c));
    EXPECT_THROW(count_in_set(s, Interval{}), std::logic_error);
}

TEST(Reciprocal, SelfReciprocal)
{
    const std::vector<double> p = {-1.0, 0.0, 1.0};
    const auto q = reciprocal_transform(std::span<const double>(p));
    EXPECT_EQ(q.coeffs, (std::vector<double>{1.0, 0.0, -1.0}));
    EXPECT_FALSE(q.trimmed);
}

TEST(Reciprocal, Linear)
{
    const std::vector<double> p = {-1.0, 2.0};
    const auto q = reciprocal_transform(std::span<const double>(p));
    EXPECT_EQ(q.coeffs, (std::vector<double>{1.0, -0.5}));
    const auto s = solve(q.coeffs);
    ASSERT_EQ(s.real_roots.size(), 1u);
    EXPECT_NEAR(s.real_roots[0], 2.0, 1e-14);
}

TEST(Reciprocal, CountIdentityPerSample)
{
    const double a = 0.5, b = 0.9;
    const auto seq = coeff_sequence(CoefficientProfile::kac(32));
    for (std::size_t i = 0; i < 1000; ++i) {
        const auto P = sample_roots(seq, AtomSpec::gaussian(), 21, i);
        std::vector<double> re;
        for (auto c : P.coeffs)
            re.push_back(c.real());
        const auto q = reciprocal_transform(std::span<const double>(re));
        const auto Q = solve(q.coeffs);
        ASSERT_EQ(count_in_set(Q, Interval{a, b}), count_in_set(P, Interval{1 / b, 1 / a})) << i;
    }
}

TEST(Jensen, ConstantPolynomial)
{
    const std::vector<double> one = {1.0};
    EXPECT_NEAR(jensen_root_bound(std::span<const double>(one), 0.0, 0.5, 1.0), 0.0, 1e-15);
}

TEST(Jensen, HandExample)
{
    const std::vector<double> p = {-0.25, 0.0, 1.0};
    const double bound = jensen_root_bound(std::span<const double>(p), 0.0, 0.6, 2.0);
    EXPECT_NEAR(bound, std::log(4.25 / 0.25) / std::log(2.0 / 0.6), 1e-12);
    EXPECT_GE(bound, 2.0);
}

TEST(Jensen, DominatesCountOnKacSamples)
{
    const auto seq = coeff_sequence(CoefficientProfile::kac(32));
    for (std::size_t i = 0; i < 1000; ++i) {
        const auto s = sample_roots(seq, AtomSpec::gaussian(), 22, i);
        const double rad = 0.3 + 0.5 * (i % 7) / 7.0;
        const double bound = jensen_root_bound(std::span<const cplx>(s.coeffs), 0.0, rad, rad * 1.5);
        ASSERT_GE(bound + 1e-9, count_in_set(s, Disk{0.0, rad})) << i;
    }
}

TEST(Jensen, VanishingCenterRejected)
{
    const std::vector<double> p = {0.0, 1.0};
    EXPECT_THROW(jensen_root_bound(std::span<const double>(p), 0.0, 0.5, 1.0), std::domain_error);
}

TEST(ArgumentPrinciple, MatchesSolverCounts)
{
    const auto seq = coeff_sequence(CoefficientProfile::kac(128));
    int checked = 0;
    for (std::size_t i = 0; i < 200; ++i) {
        const auto s = sample_roots(seq, AtomSpec::gaussian(), 23, i);
        std::vector<double> re;
        for (auto c : s.coeffs)
            re.push_back(c.real());
        for (double r : {0.0025, 0.01, 0.03}) {
            const auto cnt = count_in_disk_argument(std::span<const double>(re), 0.97, r);
            if (!cnt)
                continue;
            ++checked;
            ASSERT_EQ(*cnt, count_in_set(s, Disk{0.97, r})) << i << " r=" << r;
        }
    }
    EXPECT_GT(checked, 550);
}

TEST(ArgumentPrinciple, WideCircleGivesUpQuickly)
{
    const auto s = sample_roots(coeff_sequence(CoefficientProfile::kac(512)), AtomSpec::gaussian(), 24, 0);
    std::vector<double> re;
    for (auto c : s.coeffs)
        re.push_back(c.real());
    const auto cnt = count_in_disk_argument(std::span<const double>(re), 0.97, 0.5);
    if (cnt)
        EXPECT_EQ(*cnt, count_in_set(s, Disk{0.97, 0.5}));
}
