#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "randpoly/atoms.hpp"

using namespace randpoly;

namespace {
constexpr int kDraws = 1'000'000;
}

TEST(Atoms, RademacherValuesAndMean)
{
    SeedStream s(11);
    double sum = 0.0;
    std::set<double> seen;
    for (int i = 0; i < kDraws; ++i) {
        const double v = sample_real(AtomSpec::rademacher(), s);
        seen.insert(v);
        sum += v;
    }
    EXPECT_EQ(seen, (std::set<double>{-1.0, 1.0}));
    EXPECT_LE(std::abs(sum / kDraws), 4.0 / std::sqrt(double(kDraws)));
}

TEST(Atoms, UniformSupportAndVariance)
{
    SeedStream s(12);
    double s2 = 0.0;
    for (int i = 0; i < kDraws; ++i) {
        const double v = sample_real(AtomSpec::uniform_unitvar(), s);
        ASSERT_LE(std::abs(v), std::sqrt(3.0));
        s2 += v * v;
    }
    EXPECT_NEAR(s2 / kDraws, 1.0, 0.01);
}

TEST(Atoms, GaussianMeanAndVariance)
{
    SeedStream s(13);
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < kDraws; ++i) {
        const double v = sample_real(AtomSpec::gaussian(), s);
        s1 += v;
        s2 += v * v;
    }
    EXPECT_LE(std::abs(s1 / kDraws), 4.0 / std::sqrt(double(kDraws)));
    EXPECT_NEAR(s2 / kDraws, 1.0, 0.01);
}

TEST(Atoms, GaussianShiftedMean)
{
    SeedStream s(14);
    double s1 = 0.0;
    for (int i = 0; i < kDraws; ++i)
        s1 += sample_real(AtomSpec::gaussian(1.0), s);
    EXPECT_LE(std::abs(s1 / kDraws - 1.0), 4.0 / std::sqrt(double(kDraws)));
}

TEST(Atoms, ComplexGaussianUnitVariance)
{
    SeedStream s(15);
    double m2 = 0.0;
    std::complex<double> pseudo = 0.0;
    for (int i = 0; i < kDraws; ++i) {
        const auto z = sample_atom(AtomSpec::complex_gaussian(), s);
        m2 += std::norm(z);
        pseudo += z * z;
    }
    EXPECT_NEAR(m2 / kDraws, 1.0, 0.01);
    EXPECT_LE(std::abs(pseudo / double(kDraws)), 0.01);
    EXPECT_THROW(sample_real(AtomSpec::complex_gaussian(), s), std::invalid_argument);
}

TEST(Atoms, Moments)
{
    EXPECT_EQ(moment(AtomSpec::rademacher(), 2), 1.0);
    EXPECT_NEAR(moment(AtomSpec::uniform_unitvar(), 4), 9.0 / 5.0, 1e-15);
    EXPECT_EQ(moment(AtomSpec::gaussian(), 2), 1.0);
    EXPECT_EQ(moment(AtomSpec::gaussian(), 4), 3.0);
    EXPECT_THROW(moment(AtomSpec::gaussian(), 5), std::invalid_argument);
}

TEST(Atoms, ThirdAbsoluteMomentMatchesEmpirical)
{
    for (auto a : {AtomSpec::gaussian(), AtomSpec::rademacher(), AtomSpec::uniform_unitvar()}) {
        SeedStream s(16);
        double acc = 0.0;
        for (int i = 0; i < kDraws; ++i)
            acc += std::pow(std::abs(sample_real(a, s)), 3);
        EXPECT_NEAR(acc / kDraws, third_absolute_moment(a), 0.01 * third_absolute_moment(a)) << a.id();
    }
}

TEST(SeedStreams, DeterministicAndIndependentOfOrder)
{
    const SeedStream root(42);
    auto a = root.at({3, 1});
    auto b = root.child(3).child(1);
    for (int i = 0; i < 10; ++i)
        EXPECT_EQ(a.next_u64(), b.next_u64());
    auto c = root.at({3, 0});
    auto d = root.at({3, 1});
    EXPECT_NE(c.next_u64(), d.next_u64());
}

TEST(SeedStreams, ParseSeed)
{
    EXPECT_EQ(parse_seed("42"), 42u);
    EXPECT_EQ(parse_seed("0x2a"), 42u);
    EXPECT_EQ(parse_seed("0XFF"), 255u);
    EXPECT_THROW(parse_seed("nope"), std::invalid_argument);
    EXPECT_THROW(parse_seed("-1"), std::invalid_argument);
}
