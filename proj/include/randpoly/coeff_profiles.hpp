#pragma once

// Deterministic coefficient sequences c_0..c_n and generalized polynomials
// h(k) = sum_j alpha_j * L_j (L_j + 1) ... (L_j + k - 1) / k!.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "randpoly/detail/numerics.hpp"

namespace randpoly {

//---------------------------------------------------------------------------//
/*!
 * Natural log of the generalized binomial coefficient
 * L (L+1) ... (L+k-1) / k!, evaluated as a telescoping sum of log1p terms.
 */
inline double binom_coeff_log(double L, std::int64_t k)
{
    if (!(L > 0.0) || !std::isfinite(L))
        throw std::invalid_argument("binom_coeff_log: L must be positive and finite");
    if (k < 0)
        throw std::invalid_argument("binom_coeff_log: k must be nonnegative");
    detail::CompensatedSum acc;
    const double lm1 = L - 1.0;
    for (std::int64_t j = 0; j < k; ++j)
        acc += std::log1p(lm1 / static_cast<double>(j + 1));
    return acc.value();
}

// Generalized binomial coefficient for any real L (signed, plain double).
inline double binom_coeff(double L, std::int64_t k)
{
    double b = 1.0;
    for (std::int64_t j = 0; j < k; ++j)
        b *= (L + static_cast<double>(j)) / static_cast<double>(j + 1);
    return b;
}

struct GenPolyTerm {
    double L = 1.0;
    double alpha = 0.0;
};

//---------------------------------------------------------------------------//
/*!
 * Generalized polynomial h(k) = sum_j alpha_j b_{k,L_j}.
 *
 * Terms are kept sorted by strictly increasing L; equal exponents are merged
 * on construction and vanishing coefficients dropped. The leading coefficient
 * must be nonzero, so the degree L_d - 1 is always > -1.
 */
class GeneralizedPolynomial {
  public:
    GeneralizedPolynomial() : terms_{{1.0, 1.0}} {}

    explicit GeneralizedPolynomial(std::vector<GenPolyTerm> terms)
    {
        for (auto const& t : terms) {
            if (!(t.L > 0.0) || !std::isfinite(t.L) || !std::isfinite(t.alpha))
                throw std::invalid_argument("generalized polynomial: exponents must be positive");
        }
        std::sort(terms.begin(), terms.end(),
                  [](auto const& a, auto const& b) { return a.L < b.L; });
        for (auto const& t : terms) {
            if (!terms_.empty() && terms_.back().L == t.L)
                terms_.back().alpha += t.alpha;
            else
                terms_.push_back(t);
        }
        std::erase_if(terms_, [](auto const& t) { return t.alpha == 0.0; });
        if (terms_.empty())
            throw std::invalid_argument("generalized polynomial: leading coefficient is zero");
    }

    [[nodiscard]] std::span<const GenPolyTerm> terms() const noexcept { return terms_; }
    [[nodiscard]] double leading_exponent() const noexcept { return terms_.back().L; }
    [[nodiscard]] double leading_coefficient() const noexcept { return terms_.back().alpha; }
    [[nodiscard]] double degree() const noexcept { return terms_.back().L - 1.0; }

    //! h(k) in signed-log form; safe for large k and L.
    [[nodiscard]] detail::SignedLog eval_log(std::int64_t k) const
    {
        std::vector<int> signs;
        std::vector<double> logs;
        signs.reserve(terms_.size());
        logs.reserve(terms_.size());
        for (auto const& t : terms_) {
            signs.push_back(t.alpha > 0 ? 1 : -1);
            logs.push_back(std::log(std::abs(t.alpha)) + binom_coeff_log(t.L, k));
        }
        return detail::signed_log_sum(signs, logs);
    }

    friend bool operator==(GeneralizedPolynomial const& a, GeneralizedPolynomial const& b)
    {
        return std::equal(a.terms_.begin(), a.terms_.end(), b.terms_.begin(), b.terms_.end(),
                          [](auto const& x, auto const& y) {
                              return x.L == y.L && x.alpha == y.alpha;
                          });
    }

  private:
    std::vector<GenPolyTerm> terms_;
};

inline double eval_genpoly(GeneralizedPolynomial const& h, std::int64_t k)
{
    if (k < 0)
        throw std::invalid_argument("eval_genpoly: k must be nonnegative");
    return h.eval_log(k).value();
}

//---------------------------------------------------------------------------//
/*!
 * Convert a classical polynomial sum_j p_j k^j into binomial-basis form.
 *
 * b_{k,m+1} = C(k+m, m) has exact degree m in k with leading coefficient 1/m!,
 * so the change of basis is triangular and is solved from the top degree down.
 */
inline GeneralizedPolynomial genpoly_from_monomial(std::span<const double> monomial)
{
    std::vector<double> rem(monomial.begin(), monomial.end());
    while (!rem.empty() && rem.back() == 0.0)
        rem.pop_back();
    if (rem.empty())
        throw std::invalid_argument("genpoly_from_monomial: zero polynomial");

    const auto deg = static_cast<int>(rem.size()) - 1;
    std::vector<GenPolyTerm> terms;
    for (int m = deg; m >= 0; --m) {
        // monomial coefficients of C(k+m, m) = (k+1)...(k+m)/m!
        std::vector<double> basis{1.0};
        for (int j = 1; j <= m; ++j) {
            std::vector<double> next(basis.size() + 1, 0.0);
            for (std::size_t i = 0; i < basis.size(); ++i) {
                next[i] += basis[i] * j;
                next[i + 1] += basis[i];
            }
            basis = std::move(next);
        }
        double mfact = 1.0;
        for (int j = 2; j <= m; ++j)
            mfact *= j;
        for (auto& b : basis)
            b /= mfact;

        const double alpha = rem[m] / basis[m];
        if (alpha != 0.0) {
            terms.push_back({static_cast<double>(m) + 1.0, alpha});
            for (int i = 0; i <= m; ++i)
                rem[i] -= alpha * basis[i];
        }
        rem[m] = 0.0;
    }
    return GeneralizedPolynomial(std::move(terms));
}

//---------------------------------------------------------------------------//
// Coefficient profiles
//---------------------------------------------------------------------------//
enum class ProfileKind { kac, hyperbolic, kac_derivative, power_law, genpoly_sqrt, explicit_list };

struct CoefficientProfile {
    ProfileKind kind = ProfileKind::kac;
    int n = 1;                       //!< polynomial degree (Kac degree for kac_derivative)
    double L = 1.0;                  //!< hyperbolic
    int d = 0;                       //!< kac_derivative order
    double rho = 0.0;                //!< power_law exponent, or declared exponent for explicit
    double scale = 1.0;              //!< power_law scale
    GeneralizedPolynomial h;         //!< genpoly_sqrt
    int n0 = 0;                      //!< head-exception index N_0
    std::vector<double> head;        //!< genpoly_sqrt: c_0..c_{N_0-1} (optional)
    std::vector<double> values;      //!< explicit list
    std::optional<double> tau1;      //!< optional user bounds for Condition 1 validation
    std::optional<double> tau2;

    static CoefficientProfile kac(int n)
    {
        CoefficientProfile p;
        p.n = n;
        return p;
    }
    static CoefficientProfile hyperbolic(double L, int n)
    {
        CoefficientProfile p;
        p.kind = ProfileKind::hyperbolic;
        p.L = L;
        p.n = n;
        return p;
    }
    static CoefficientProfile kac_derivative(int d, int n)
    {
        CoefficientProfile p;
        p.kind = ProfileKind::kac_derivative;
        p.d = d;
        p.n = n;
        return p;
    }
    static CoefficientProfile power_law(double rho, double scale, int n)
    {
        CoefficientProfile p;
        p.kind = ProfileKind::power_law;
        p.rho = rho;
        p.scale = scale;
        p.n = n;
        return p;
    }
    static CoefficientProfile genpoly_sqrt(GeneralizedPolynomial h, int n, int n0 = 0,
                                           std::vector<double> head = {})
    {
        CoefficientProfile p;
        p.kind = ProfileKind::genpoly_sqrt;
        p.h = std::move(h);
        p.n = n;
        p.n0 = n0;
        p.head = std::move(head);
        return p;
    }
    static CoefficientProfile explicit_list(std::vector<double> values, double rho = 0.0)
    {
        CoefficientProfile p;
        p.kind = ProfileKind::explicit_list;
        p.n = values.empty() ? 0 : static_cast<int>(values.size()) - 1;
        p.values = std::move(values);
        p.rho = rho;
        return p;
    }

    [[nodiscard]] CoefficientProfile with_degree(int new_n) const
    {
        if (kind == ProfileKind::explicit_list)
            throw std::invalid_argument("explicit profiles have a fixed degree");
        CoefficientProfile p = *this;
        p.n = new_n;
        return p;
    }

    //! Degree of the produced polynomial.
    [[nodiscard]] int poly_degree() const noexcept
    {
        return kind == ProfileKind::kac_derivative ? n - d : n;
    }

    //! Growth exponent rho with |c_k| ~ k^rho.
    [[nodiscard]] double growth_exponent() const noexcept
    {
        switch (kind) {
        case ProfileKind::kac: return 0.0;
        case ProfileKind::hyperbolic: return 0.5 * (L - 1.0);
        case ProfileKind::kac_derivative: return static_cast<double>(d);
        case ProfileKind::power_law: return rho;
        case ProfileKind::genpoly_sqrt: return 0.5 * h.degree();
        case ProfileKind::explicit_list: return rho;
        }
        return 0.0;
    }

    [[nodiscard]] std::string id() const
    {
        std::ostringstream os;
        os.precision(17);
        switch (kind) {
        case ProfileKind::kac: os << "kac"; break;
        case ProfileKind::hyperbolic: os << "hyperbolic:L=" << L; break;
        case ProfileKind::kac_derivative: os << "kac_derivative:d=" << d; break;
        case ProfileKind::power_law: os << "power_law:rho=" << rho << ",scale=" << scale; break;
        case ProfileKind::genpoly_sqrt: {
            os << "genpoly_sqrt:";
            bool first = true;
            for (auto const& t : h.terms()) {
                os << (first ? "" : ";") << t.L << "/" << t.alpha;
                first = false;
            }
            if (n0 > 0)
                os << ",N0=" << n0;
            break;
        }
        case ProfileKind::explicit_list: os << "explicit[" << values.size() << "]"; break;
        }
        return os.str();
    }
};

//! Coefficients c_0..c_m with a parallel sign / log-magnitude representation.
struct CoefficientSequence {
    std::vector<double> values;
    std::vector<int> sign;
    std::vector<double> log_abs;

    [[nodiscard]] std::size_t size() const noexcept { return sign.size(); }
    [[nodiscard]] int degree() const noexcept { return static_cast<int>(sign.size()) - 1; }

    void push(int s, double la)
    {
        sign.push_back(s);
        log_abs.push_back(s == 0 ? detail::kNegInf : la);
        values.push_back(s == 0 ? 0.0 : s * std::exp(la));
    }
    void push_value(double v)
    {
        if (v == 0.0) {
            push(0, detail::kNegInf);
        } else {
            push(v > 0 ? 1 : -1, std::log(std::abs(v)));
            values.back() = v;
        }
    }
};

namespace detail {
inline void check_profile_params(CoefficientProfile const& p)
{
    if (p.kind != ProfileKind::explicit_list && p.n < 0)
        throw std::invalid_argument("profile: degree must be nonnegative");
    switch (p.kind) {
    case ProfileKind::kac: break;
    case ProfileKind::hyperbolic:
        if (!(p.L > 0.0) || !std::isfinite(p.L))
            throw std::invalid_argument("hyperbolic profile: L must be positive");
        break;
    case ProfileKind::kac_derivative:
        if (p.d < 0)
            throw std::invalid_argument("kac_derivative profile: d must be nonnegative");
        if (p.n < p.d)
            throw std::invalid_argument("kac_derivative profile: n must be at least d");
        break;
    case ProfileKind::power_law:
        if (!(p.rho > -0.5) || !std::isfinite(p.rho))
            throw std::invalid_argument("power_law profile: rho must exceed -1/2");
        if (!(p.scale > 0.0) || !std::isfinite(p.scale))
            throw std::invalid_argument("power_law profile: scale must be positive");
        break;
    case ProfileKind::genpoly_sqrt:
        if (p.n0 < 0)
            throw std::invalid_argument("genpoly_sqrt profile: N0 must be nonnegative");
        if (p.head.size() > static_cast<std::size_t>(p.n0))
            throw std::invalid_argument("genpoly_sqrt profile: head longer than N0");
        break;
    case ProfileKind::explicit_list:
        if (p.values.empty())
            throw std::invalid_argument("explicit profile: empty coefficient list");
        for (double v : p.values)
            if (!std::isfinite(v))
                throw std::invalid_argument("explicit profile: non-finite coefficient");
        break;
    }
}
}  // namespace detail

//---------------------------------------------------------------------------//
/*!
 * Produce the deterministic coefficients of a profile.
 *
 * Magnitudes are built in log space, so hyperbolic and genpoly profiles stay
 * representable (as logs) even where the linear value overflows.
 */
inline CoefficientSequence coeff_sequence(CoefficientProfile const& p)
{
    detail::check_profile_params(p);
    CoefficientSequence out;
    const int deg = p.poly_degree();
    out.values.reserve(deg + 1);
    out.sign.reserve(deg + 1);
    out.log_abs.reserve(deg + 1);

    switch (p.kind) {
    case ProfileKind::kac:
        for (int i = 0; i <= deg; ++i)
            out.push(1, 0.0);
        break;
    case ProfileKind::hyperbolic: {
        detail::CompensatedSum blog;
        const double lm1 = p.L - 1.0;
        for (int i = 0; i <= deg; ++i) {
            if (i > 0)
                blog += std::log1p(lm1 / i);
            out.push(1, 0.5 * blog.value());
        }
        break;
    }
    case ProfileKind::kac_derivative:
        for (int i = 0; i <= deg; ++i) {
            detail::CompensatedSum lg;
            for (int j = 1; j <= p.d; ++j)
                lg += std::log(static_cast<double>(i + j));
            out.push(1, lg.value());
        }
        break;
    case ProfileKind::power_law: {
        const double ls = std::log(p.scale);
        for (int i = 0; i <= deg; ++i)
            out.push(1, i == 0 ? ls : ls + p.rho * std::log(static_cast<double>(i)));
        break;
    }
    case ProfileKind::genpoly_sqrt:
        for (int i = 0; i <= deg; ++i) {
            if (i < p.n0) {
                if (static_cast<std::size_t>(i) < p.head.size()) {
                    out.push_value(p.head[i]);
                } else {
                    auto hv = p.h.eval_log(i);
                    if (hv.sign > 0)
                        out.push(1, 0.5 * hv.log_abs);
                    else
                        out.push(0, detail::kNegInf);
                }
                continue;
            }
            auto hv = p.h.eval_log(i);
            if (hv.sign <= 0) {
                std::ostringstream os;
                os << "genpoly_sqrt profile: h(" << i << ") <= 0 past N0=" << p.n0;
                throw std::invalid_argument(os.str());
            }
            out.push(1, 0.5 * hv.log_abs);
        }
        break;
    case ProfileKind::explicit_list:
        for (double v : p.values)
            out.push_value(v);
        break;
    }
    return out;
}

//! Empirical Condition 1 constants for a produced sequence.
struct ProfileValidation {
    double rho = 0.0;
    double tau1 = 0.0;
    double tau2 = 0.0;
    int n0 = 0;
};

/*!
 * Check tau1 k^rho <= |c_k| <= tau2 k^rho for k >= N_0 and |c_k| <= tau2 below
 * N_0 (k^rho read as max(k,1)^rho). tau1, tau2 are measured from the sequence;
 * user-supplied bounds, when present, must contain the measured ones.
 */
inline ProfileValidation validate_profile(CoefficientProfile const& p)
{
    const auto seq = coeff_sequence(p);
    ProfileValidation v;
    v.rho = p.growth_exponent();
    v.n0 = p.n0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t k = 0; k < seq.size(); ++k) {
        const double kk = std::max<double>(static_cast<double>(k), 1.0);
        const double ratio =
            seq.sign[k] == 0 ? 0.0 : std::exp(seq.log_abs[k] - v.rho * std::log(kk));
        if (static_cast<int>(k) >= p.n0) {
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        } else {
            hi = std::max(hi, seq.sign[k] == 0 ? 0.0 : std::exp(seq.log_abs[k]));
        }
    }
    if (!(lo > 0.0) || !std::isfinite(hi))
        throw std::invalid_argument("profile violates the growth condition: " + p.id());
    v.tau1 = std::isfinite(lo) ? lo : hi;
    v.tau2 = hi;
    if (p.tau1 && v.tau1 < *p.tau1)
        throw std::invalid_argument("profile violates lower bound tau1: " + p.id());
    if (p.tau2 && v.tau2 > *p.tau2)
        throw std::invalid_argument("profile violates upper bound tau2: " + p.id());
    return v;
}

}  // namespace randpoly
