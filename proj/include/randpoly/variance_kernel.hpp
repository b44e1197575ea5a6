#pragma once

// Variance function f_n(x) = sum_k c_k^2 x^k, its derivatives, the binomial
// kernels f_{n,L}, their reciprocals, and the limiting function f_infinity.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "randpoly/coeff_profiles.hpp"
#include "randpoly/detail/numerics.hpp"

namespace randpoly {

struct FValue {
    double value = 0.0;
    double log_value = detail::kNegInf;
};

struct FDerivs {
    double f = 0.0;
    double df = 0.0;
    double d2f = 0.0;
    double log_f = detail::kNegInf;
    double log_df = detail::kNegInf;
    double log_d2f = detail::kNegInf;
};

//! Mean and variance of the index k under weights c_k^2 x^k / f(x).
struct IndexMoments {
    double mean = 0.0;
    double variance = 0.0;
    double log_scale = detail::kNegInf;  //!< log of the largest weight c_k^2 x^k
    double weight_sum = 0.0;             //!< sum of weights divided by exp(log_scale)
};

//---------------------------------------------------------------------------//
/*!
 * Variance kernel of a coefficient sequence.
 *
 * Every evaluation factors out the largest log-term before exponentiating and
 * accumulates in ascending k with compensated summation.
 */
class VarianceKernel {
  public:
    VarianceKernel() = default;

    explicit VarianceKernel(CoefficientSequence const& seq)
    {
        log_c2_.reserve(seq.size());
        for (std::size_t k = 0; k < seq.size(); ++k)
            log_c2_.push_back(seq.sign[k] == 0 ? detail::kNegInf : 2.0 * seq.log_abs[k]);
        first_nonzero_ = -1;
        for (std::size_t k = 0; k < log_c2_.size(); ++k) {
            if (log_c2_[k] != detail::kNegInf) {
                first_nonzero_ = static_cast<int>(k);
                break;
            }
        }
        if (first_nonzero_ < 0)
            throw std::invalid_argument("variance kernel: all coefficients vanish");
    }

    static VarianceKernel from_profile(CoefficientProfile const& p)
    {
        return VarianceKernel(coeff_sequence(p));
    }

    [[nodiscard]] int degree() const noexcept { return static_cast<int>(log_c2_.size()) - 1; }
    [[nodiscard]] std::span<const double> log_c2() const noexcept { return log_c2_; }

    [[nodiscard]] FValue eval_f(double x) const
    {
        check_x(x);
        if (x == 0.0)
            return at_zero(0);
        const double lx = std::log(x);
        const double lv = log_sum(lx, 0);
        return {std::exp(lv), lv};
    }

    [[nodiscard]] FDerivs eval_f_derivs(double x) const
    {
        check_x(x);
        FDerivs d;
        if (x == 0.0) {
            auto f0 = at_zero(0);
            auto f1 = at_zero(1);
            auto f2 = at_zero(2);
            return {f0.value, f1.value, f2.value, f0.log_value, f1.log_value, f2.log_value};
        }
        const double lx = std::log(x);
        d.log_f = log_sum(lx, 0);
        d.log_df = log_sum(lx, 1);
        d.log_d2f = log_sum(lx, 2);
        d.f = std::exp(d.log_f);
        d.df = std::exp(d.log_df);
        d.d2f = std::exp(d.log_d2f);
        return d;
    }

    //! Two-pass weighted moments of the index; x > 0.
    [[nodiscard]] IndexMoments index_moments(double x) const
    {
        check_x(x);
        IndexMoments m;
        if (x == 0.0) {
            m.mean = first_nonzero_;
            m.variance = 0.0;
            m.log_scale = log_c2_[first_nonzero_];
            m.weight_sum = 1.0;
            return m;
        }
        const double lx = std::log(x);
        const auto n = log_c2_.size();
        std::vector<double> w(n);
        double mx = detail::kNegInf;
        for (std::size_t k = 0; k < n; ++k) {
            w[k] = log_c2_[k] + static_cast<double>(k) * lx;
            mx = std::max(mx, w[k]);
        }
        detail::CompensatedSum s0, s1;
        for (std::size_t k = 0; k < n; ++k) {
            w[k] = std::exp(w[k] - mx);
            s0 += w[k];
            s1 += static_cast<double>(k) * w[k];
        }
        const double total = s0.value();
        const double mean = s1.value() / total;
        detail::CompensatedSum s2;
        for (std::size_t k = 0; k < n; ++k) {
            const double dk = static_cast<double>(k) - mean;
            s2 += w[k] * dk * dk;
        }
        m.mean = mean;
        m.variance = s2.value() / total;
        m.log_scale = mx;
        m.weight_sum = total;
        return m;
    }

    /*!
     * g'(x) + x g''(x) with g = log f, evaluated as Var(k)/x.
     *
     * At x = 0 the limit is c_{j+1}^2 / c_j^2 where j is the first nonzero
     * index.
     */
    [[nodiscard]] double log_variance_radicand(double x) const
    {
        check_x(x);
        if (x == 0.0) {
            const auto j = static_cast<std::size_t>(first_nonzero_);
            if (j + 1 >= log_c2_.size())
                return 0.0;
            return std::exp(log_c2_[j + 1] - log_c2_[j]);
        }
        return index_moments(x).variance / x;
    }

  private:
    static void check_x(double x)
    {
        if (!(x >= 0.0) || !std::isfinite(x))
            throw std::domain_error("variance kernel: x must be finite and >= 0");
    }

    // log of sum_k k(k-1)..(k-order+1) c_k^2 x^{k-order}
    [[nodiscard]] double log_sum(double lx, int order) const
    {
        const auto n = log_c2_.size();
        double mx = detail::kNegInf;
        std::vector<double> a(n, detail::kNegInf);
        for (std::size_t k = static_cast<std::size_t>(order); k < n; ++k) {
            if (log_c2_[k] == detail::kNegInf)
                continue;
            double lf = 0.0;
            for (int j = 0; j < order; ++j)
                lf += std::log(static_cast<double>(k) - j);
            a[k] = log_c2_[k] + lf + (static_cast<double>(k) - order) * lx;
            mx = std::max(mx, a[k]);
        }
        if (mx == detail::kNegInf)
            return detail::kNegInf;
        detail::CompensatedSum s;
        for (std::size_t k = 0; k < n; ++k)
            if (a[k] != detail::kNegInf)
                s += std::exp(a[k] - mx);
        return mx + std::log(s.value());
    }

    [[nodiscard]] FValue at_zero(int order) const
    {
        const auto k = static_cast<std::size_t>(order);
        if (k >= log_c2_.size() || log_c2_[k] == detail::kNegInf)
            return {0.0, detail::kNegInf};
        double lf = 0.0;
        for (int j = 2; j <= order; ++j)
            lf += std::log(static_cast<double>(j));
        const double lv = log_c2_[k] + lf;
        return {std::exp(lv), lv};
    }

    std::vector<double> log_c2_;
    int first_nonzero_ = 0;
};

//---------------------------------------------------------------------------//
// Binomial kernels f_{n,L}(x) = sum_{k<=n} b_{k,L} x^k
//---------------------------------------------------------------------------//
namespace detail {
//! Direct sum for any real L, in double-double.
inline DoubleDouble f_binomial_dd(int n, double L, double x)
{
    DoubleDouble term(1.0);
    DoubleDouble sum(1.0);
    const DoubleDouble xx(x);
    for (int k = 1; k <= n; ++k) {
        term = term * DoubleDouble(L + (k - 1)) / DoubleDouble(static_cast<double>(k)) * xx;
        sum = sum + term;
    }
    return sum;
}

//! sum_k (b_{n-k,L} / b_{n,L}) x^k for L not in {0,-1,-2,...}.
inline DoubleDouble f_reciprocal_dd(int n, double L, double x)
{
    DoubleDouble ratio(1.0);
    DoubleDouble sum(1.0);
    DoubleDouble xp(1.0);
    const DoubleDouble xx(x);
    for (int k = 1; k <= n; ++k) {
        // b_{m-1,L} / b_{m,L} = m / (L + m - 1) with m = n - k + 1
        const double m = static_cast<double>(n - k + 1);
        ratio = ratio * DoubleDouble(m) / DoubleDouble(L + m - 1.0);
        xp = xp * xx;
        sum = sum + ratio * xp;
    }
    return sum;
}
}  // namespace detail

inline double f_binomial(int n, double L, double x)
{
    if (!(L > 0.0) || !std::isfinite(L))
        throw std::invalid_argument("f_binomial: L must be positive");
    if (n < 0)
        throw std::invalid_argument("f_binomial: n must be nonnegative");
    if (!std::isfinite(x))
        throw std::domain_error("f_binomial: x must be finite");
    // Hockey-stick identity sum_{k<=n} b_{k,L} = b_{n,L+1} at the pole of the recursion.
    if (std::abs(x - 1.0) <= 1e-12)
        return std::exp(binom_coeff_log(L + 1.0, n));
    return detail::f_binomial_dd(n, L, x).to_double();
}

//! f~_{n,L}(x) = x^n f_{n,L}(1/x) / b_{n,L}.
inline double f_reciprocal(int n, double L, double x)
{
    if (L <= 0.0 && detail::is_integer(L))
        throw std::invalid_argument("f_reciprocal: L must not be a nonpositive integer");
    if (!std::isfinite(L))
        throw std::invalid_argument("f_reciprocal: L must be finite");
    if (n < 0)
        throw std::invalid_argument("f_reciprocal: n must be nonnegative");
    if (!(x >= -1.0 && x <= 1.0))
        throw std::domain_error("f_reciprocal: x must lie in [-1, 1]");
    return detail::f_reciprocal_dd(n, L, x).to_double();
}

//---------------------------------------------------------------------------//
// Limiting function f_infinity(x) = g(x) + sum_m alpha_m (1-x)^{-L_m}
//---------------------------------------------------------------------------//
struct LimitingFunction {
    GeneralizedPolynomial h;
    std::vector<double> head;  //!< g_k = c_k^2 - h(k) for k < N_0

    static LimitingFunction hyperbolic(double L)
    {
        return {GeneralizedPolynomial({{L, 1.0}}), {}};
    }

    /*!
     * Limiting description of a profile, when c_k^2 is a generalized
     * polynomial from some index on. Throws for profiles outside that class.
     */
    static LimitingFunction from_profile(CoefficientProfile const& p)
    {
        switch (p.kind) {
        case ProfileKind::kac: return hyperbolic(1.0);
        case ProfileKind::hyperbolic: return hyperbolic(p.L);
        case ProfileKind::kac_derivative: {
            // ((k+1)...(k+d))^2 in the monomial basis
            std::vector<double> poly{1.0};
            for (int j = 1; j <= p.d; ++j) {
                std::vector<double> next(poly.size() + 1, 0.0);
                for (std::size_t i = 0; i < poly.size(); ++i) {
                    next[i] += poly[i] * j;
                    next[i + 1] += poly[i];
                }
                poly = std::move(next);
            }
            std::vector<double> sq(2 * poly.size() - 1, 0.0);
            for (std::size_t i = 0; i < poly.size(); ++i)
                for (std::size_t j = 0; j < poly.size(); ++j)
                    sq[i + j] += poly[i] * poly[j];
            return {genpoly_from_monomial(sq), {}};
        }
        case ProfileKind::power_law: {
            const double two_rho = 2.0 * p.rho;
            if (!detail::is_integer(two_rho) || two_rho < 0.0)
                throw std::invalid_argument("limiting function: power_law needs integer 2*rho >= 0");
            std::vector<double> mono(static_cast<std::size_t>(two_rho) + 1, 0.0);
            mono.back() = p.scale * p.scale;
            LimitingFunction lf{genpoly_from_monomial(mono), {}};
            if (two_rho > 0.0)
                lf.head = {p.scale * p.scale};  // c_0^2 - h(0) with h(0) = 0
            return lf;
        }
        case ProfileKind::genpoly_sqrt: {
            LimitingFunction lf{p.h, {}};
            const auto seq = coeff_sequence(p.with_degree(std::max(p.n, p.n0)));
            for (int k = 0; k < p.n0; ++k)
                lf.head.push_back(seq.values[k] * seq.values[k] - eval_genpoly(p.h, k));
            return lf;
        }
        case ProfileKind::explicit_list:
            throw std::invalid_argument("limiting function: explicit profiles have no closed form");
        }
        return {};
    }
};

struct FInfinity {
    double f = 0.0;
    double df = 0.0;
    double d2f = 0.0;
};

inline FInfinity eval_f_infinity(LimitingFunction const& lim, double x)
{
    if (!(x >= 0.0) || !(x < 1.0))
        throw std::domain_error("eval_f_infinity: x must lie in [0, 1)");
    FInfinity r;
    const double u = 1.0 - x;
    for (auto const& t : lim.h.terms()) {
        const double p0 = std::pow(u, -t.L);
        r.f += t.alpha * p0;
        r.df += t.alpha * t.L * p0 / u;
        r.d2f += t.alpha * t.L * (t.L + 1.0) * p0 / (u * u);
    }
    // polynomial head, Horner for value and both derivatives
    double g = 0.0, g1 = 0.0, g2 = 0.0;
    for (auto it = lim.head.rbegin(); it != lim.head.rend(); ++it) {
        g2 = g2 * x + 2.0 * g1;
        g1 = g1 * x + g;
        g = g * x + *it;
    }
    r.f += g;
    r.df += g1;
    r.d2f += g2;
    return r;
}

}  // namespace randpoly
