#pragma once

// Reference computations that share no code with the library.

#include <cmath>
#include <complex>
#include <cstdint>
#include <algorithm>
#include <bit>
#include <numbers>
#include <vector>

#include <boost/math/distributions/binomial.hpp>

namespace oracle {

using ld = long double;

//! b_{k,L} = L(L+1)...(L+k-1)/k! as a direct product.
inline ld binom_product(ld L, int k)
{
    ld v = 1;
    for (int j = 0; j < k; ++j)
        v *= (L + j) / (j + 1);
    return v;
}

//! Kac-Rice density for independent centered Gaussians with variances c_k^2:
//! rho = sqrt(A C - B^2) / (pi A), with A C - B^2 expanded as a pair sum.
inline double pairwise_density(std::vector<double> const& c, double t)
{
    const std::size_t m = c.size();
    ld A = 0, num = 0;
    std::vector<ld> w(m);
    for (std::size_t k = 0; k < m; ++k) {
        w[k] = static_cast<ld>(c[k]) * c[k] * std::pow(static_cast<ld>(t), static_cast<ld>(2 * k));
        A += w[k];
    }
    // sum_{k<j} (j-k)^2 w_k w_j / t^2, written without the division at t = 0
    for (std::size_t k = 0; k < m; ++k)
        for (std::size_t j = k + 1; j < m; ++j) {
            ld term = static_cast<ld>(c[k]) * c[k] * c[j] * c[j] * (ld(j) - k) * (ld(j) - k) *
                      std::pow(static_cast<ld>(t), static_cast<ld>(2 * (k + j) - 2));
            num += term;
        }
    return static_cast<double>(std::sqrt(num) / (std::numbers::pi_v<ld> * A));
}

//! Kac-Rice density of sum c_k (xi_k + mu) t^k - sum f_k t^k with standard Gaussian xi_k:
//! phi_A(m) E[|X'| ; X = 0] from the conditional law of X' given X = 0.
inline double kacrice_density(std::vector<double> const& c, double mu, double t,
                              std::vector<double> const& f = {})
{
    ld A = 0, B = 0, C = 0, m = 0, dm = 0;
    const ld tt = t;
    for (std::size_t k = 0; k < std::max(c.size(), f.size()); ++k) {
        const ld ck = k < c.size() ? c[k] : 0.0;
        const ld e = mu * ck - (k < f.size() ? f[k] : 0.0);
        const ld tk = std::pow(tt, static_cast<ld>(k));
        const ld tk1 = k == 0 ? 0 : k * std::pow(tt, static_cast<ld>(k) - 1);
        A += ck * ck * tk * tk;
        B += ck * ck * tk * tk1;
        C += ck * ck * tk1 * tk1;
        m += e * tk;
        dm += e * tk1;
    }
    const ld s2 = (A * C - B * B) / A;
    const ld s = std::sqrt(std::max(s2, ld(0)));
    const ld eta = dm - B * m / A;
    const ld pi = std::numbers::pi_v<ld>;
    const ld dens0 = std::exp(-m * m / (2 * A)) / std::sqrt(2 * pi * A);
    ld abs_mean = std::abs(eta) * std::erf(std::abs(eta) / (s * std::sqrt(ld(2))));
    abs_mean += s * std::sqrt(2 / pi) * std::exp(-eta * eta / (2 * s2));
    return static_cast<double>(dens0 * abs_mean);
}

//! sum_{k=0}^n x^k in closed form.
inline double geometric(int n, double x)
{
    if (x == 1.0)
        return n + 1.0;
    return (1.0 - std::pow(x, n + 1)) / (1.0 - x);
}

//! P(|sum_{i<n} eps_i| <= r) for Rademacher signs, by enumerating all 2^n vectors.
inline double rademacher_small_ball_enum(int n, double r)
{
    std::uint64_t hits = 0;
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
        const int s = 2 * std::popcount(mask) - n;
        if (std::abs(s) <= r)
            ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

//! Same probability through the binomial distribution: sum = 2B - n, B ~ Bin(n, 1/2).
inline double rademacher_small_ball_binomial(int n, double r)
{
    boost::math::binomial_distribution<double> bin(n, 0.5);
    double p = 0.0;
    for (int b = 0; b <= n; ++b)
        if (std::abs(2 * b - n) <= r)
            p += boost::math::pdf(bin, b);
    return p;
}

//! P(|N(0, n)| <= r).
inline double gaussian_small_ball(int n, double r) { return std::erf(r / std::sqrt(2.0 * n)); }

//! Coefficients of prod (z - r_j), low order first.
inline std::vector<std::complex<double>> from_roots(std::vector<std::complex<double>> const& roots)
{
    std::vector<std::complex<double>> p{1.0};
    for (auto r : roots) {
        std::vector<std::complex<double>> q(p.size() + 1, 0.0);
        for (std::size_t k = 0; k < p.size(); ++k) {
            q[k + 1] += p[k];
            q[k] -= r * p[k];
        }
        p = std::move(q);
    }
    return p;
}

}  // namespace oracle
