#pragma once

// Exact densities of real zeros for Gaussian random polynomials, expected
// counts by quadrature, and asymptotic slope predictions.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "randpoly/coeff_profiles.hpp"
#include "randpoly/detail/numerics.hpp"
#include "randpoly/quadrature.hpp"
#include "randpoly/variance_kernel.hpp"

namespace randpoly {

enum class DensityMethod { ek_raw, ek_logvar, kac_closed, kacrice_mean, limiting };

inline std::string to_string(DensityMethod m)
{
    switch (m) {
    case DensityMethod::ek_raw: return "ek_raw";
    case DensityMethod::ek_logvar: return "ek_logvar";
    case DensityMethod::kac_closed: return "kac_closed";
    case DensityMethod::kacrice_mean: return "kacrice_mean";
    case DensityMethod::limiting: return "limiting";
    }
    return "?";
}

struct DensityCurve {
    std::vector<double> t;
    std::vector<double> rho;
    DensityMethod method = DensityMethod::ek_logvar;
    int n = 0;
    std::string profile_id;
};

//! Integral of exp(-s^2) over [0, x] (unnormalized error function).
inline double erf_unnormalized(double x)
{
    return 0.5 * std::sqrt(detail::kPi) * std::erf(x);
}

//---------------------------------------------------------------------------//
// Mean-zero density
//---------------------------------------------------------------------------//

/*!
 * Density of real zeros, (1/pi) sqrt(g'(t^2) + t^2 g''(t^2)) with g = log f.
 *
 * The radicand is evaluated as the variance of the index k under the weights
 * c_k^2 t^{2k} / f(t^2), divided by t^2; every term is nonnegative.
 */
inline double density_ek(VarianceKernel const& kernel, double t)
{
    if (!std::isfinite(t))
        return 0.0;
    const double x = t * t;
    double r = 0.0;
    if (x < 1e-100) {
        r = kernel.log_variance_radicand(0.0);
    } else if (std::isfinite(x)) {
        r = kernel.log_variance_radicand(x);
    } else {
        return 0.0;
    }
    if (r < 0.0) {
        if (r < -1e-12)
            throw std::runtime_error("density_ek: negative radicand");
        r = 0.0;
    }
    return std::sqrt(r) / detail::kPi;
}

/*!
 * Pairwise form rho^2 = sum_{k<m} (m-k)^2 c_k^2 c_m^2 t^{2(k+m)-2} / (pi f)^2.
 * O(n^2); kept for small n and cross-checks.
 */
inline double density_pairwise(VarianceKernel const& kernel, double t)
{
    auto lc = kernel.log_c2();
    const auto n = lc.size();
    if (t == 0.0) {
        if (n < 2 || lc[0] == detail::kNegInf)
            return 0.0;
        return std::sqrt(std::exp(lc[1] - lc[0])) / detail::kPi;
    }
    const double lx = 2.0 * std::log(std::abs(t));
    std::vector<double> w(n);
    double mx = detail::kNegInf;
    for (std::size_t k = 0; k < n; ++k) {
        w[k] = lc[k] + static_cast<double>(k) * lx;
        mx = std::max(mx, w[k]);
    }
    detail::CompensatedSum f;
    for (auto& v : w) {
        v = std::exp(v - mx);
        f += v;
    }
    detail::CompensatedSum num;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t m = k + 1; m < n; ++m) {
            const double d = static_cast<double>(m - k);
            num += d * d * w[k] * w[m];
        }
    const double fv = f.value();
    return std::sqrt(num.value() / (fv * fv) / (t * t)) / detail::kPi;
}

/*!
 * Closed-form Kac density (all c_k = 1).
 *
 * With u = log t^2 and v = u/2 the radicand is
 * (e^{-u}/4) [csch^2 v - (n+1)^2 csch^2((n+1)v)], which is evaluated through
 * csch^2(y) - 1/y^2 near |t| = 1 so the two poles cancel analytically.
 */
inline double kac_density_closed(int n, double t)
{
    if (n < 0)
        throw std::invalid_argument("kac_density_closed: n must be nonnegative");
    if (n == 0 || !std::isfinite(t))
        return 0.0;
    const double a = std::abs(t);
    const double np1 = n + 1.0;
    if (a == 0.0)
        return 1.0 / detail::kPi;
    const double u = 2.0 * std::log(a);
    double r = 0.0;
    if (u < -2.0) {
        const double s = a * a;
        const double t1 = 1.0 / ((s - 1.0) * (s - 1.0));
        const double sn = std::pow(s, n);
        const double den = std::expm1(np1 * u);
        r = t1 - np1 * np1 * sn / (den * den);
    } else if (u > 2.0) {
        const double s1 = std::sinh(0.5 * u);
        const double s2 = std::sinh(0.5 * np1 * u);
        r = 0.25 * std::exp(-u) * (1.0 / (s1 * s1) - np1 * np1 / (s2 * s2));
    } else {
        const double v = 0.5 * u;
        if (v == 0.0)
            r = n * (n + 2.0) / 12.0;
        else
            r = 0.25 * std::exp(-u) *
                (detail::csch2_minus_inv_sq(v) - np1 * np1 * detail::csch2_minus_inv_sq(np1 * v));
    }
    return std::sqrt(std::max(r, 0.0)) / detail::kPi;
}

//---------------------------------------------------------------------------//
// Nonzero mean (Kac-Rice)
//---------------------------------------------------------------------------//

/*!
 * Gaussian model with mean function m(t) = sum_k e_k t^k, where
 * e_k = mu c_k - f_k for a deterministic polynomial f (crossings of P_n = f).
 */
struct GaussianModel {
    VarianceKernel kernel;
    std::vector<int> mean_sign;
    std::vector<double> mean_log;

    GaussianModel(CoefficientSequence const& seq, double mu,
                  std::span<const double> shift = {})
        : kernel(seq)
    {
        const auto len = std::max(seq.size(), shift.size());
        mean_sign.assign(len, 0);
        mean_log.assign(len, detail::kNegInf);
        for (std::size_t k = 0; k < len; ++k) {
            const double fk = k < shift.size() ? shift[k] : 0.0;
            const bool has_c = k < seq.size() && seq.sign[k] != 0 && mu != 0.0;
            if (fk == 0.0) {
                if (has_c) {
                    mean_sign[k] = seq.sign[k] * (mu > 0 ? 1 : -1);
                    mean_log[k] = std::log(std::abs(mu)) + seq.log_abs[k];
                }
                continue;
            }
            const double e = (has_c ? mu * seq.values[k] : 0.0) - fk;
            if (e != 0.0) {
                mean_sign[k] = e > 0 ? 1 : -1;
                mean_log[k] = std::log(std::abs(e));
            }
        }
    }

    [[nodiscard]] bool mean_zero() const noexcept
    {
        return std::all_of(mean_sign.begin(), mean_sign.end(), [](int s) { return s == 0; });
    }
};

/*!
 * Kac-Rice ingredients at t, all divided by a common scale sigma^2 = exp(log_scale)
 * (m and m' by sigma). The density depends only on scale-free ratios.
 */
struct KacRiceTerms {
    double m = 0.0;
    double dm = 0.0;
    double P = 0.0;
    double Q = 0.0;
    double R = 0.0;
    double S = 0.0;
    double cond_mean = 0.0;   //!< m' - m R / P
    double var_ratio = 0.0;   //!< S / P^2
    double log_scale = 0.0;
};

inline KacRiceTerms kacrice_terms(GaussianModel const& model, double t)
{
    auto lc = model.kernel.log_c2();
    const auto n = lc.size();
    KacRiceTerms r;
    auto mean_at = [&](std::size_t k) -> std::pair<int, double> {
        if (k >= model.mean_sign.size())
            return {0, detail::kNegInf};
        return {model.mean_sign[k], model.mean_log[k]};
    };
    if (std::abs(t) < 1e-100) {
        if (lc[0] == detail::kNegInf)
            throw std::domain_error("kacrice_terms: c_0 = 0, variance vanishes at t = 0");
        r.log_scale = lc[0];
        r.P = 1.0;
        r.R = 0.0;
        r.Q = n > 1 ? std::exp(lc[1] - lc[0]) : 0.0;
        r.S = r.Q;
        r.var_ratio = r.Q;
        auto [s0, l0] = mean_at(0);
        auto [s1, l1] = mean_at(1);
        r.m = s0 == 0 ? 0.0 : s0 * std::exp(l0 - 0.5 * lc[0]);
        r.dm = s1 == 0 ? 0.0 : s1 * std::exp(l1 - 0.5 * lc[0]);
        r.cond_mean = r.dm;
        return r;
    }
    const double lt = std::log(std::abs(t));
    const bool neg = t < 0.0;
    std::vector<double> w(n);
    double mx = detail::kNegInf;
    for (std::size_t k = 0; k < n; ++k) {
        w[k] = lc[k] + 2.0 * static_cast<double>(k) * lt;
        mx = std::max(mx, w[k]);
    }
    detail::CompensatedSum s0, s1;
    for (std::size_t k = 0; k < n; ++k) {
        w[k] = std::exp(w[k] - mx);
        s0 += w[k];
        s1 += static_cast<double>(k) * w[k];
    }
    const double P = s0.value();
    const double kbar = s1.value() / P;
    detail::CompensatedSum s2;
    for (std::size_t k = 0; k < n; ++k) {
        const double dk = static_cast<double>(k) - kbar;
        s2 += w[k] * dk * dk;
    }
    const double var = s2.value() / P;
    r.log_scale = mx;
    r.P = P;
    r.R = P * kbar / t;
    r.Q = P * (var + kbar * kbar) / (t * t);
    r.var_ratio = var / (t * t);
    r.S = P * P * r.var_ratio;

    detail::CompensatedSum m, dm, cm;
    const double half = 0.5 * mx;
    for (std::size_t k = 0; k < model.mean_sign.size(); ++k) {
        if (model.mean_sign[k] == 0)
            continue;
        int sg = model.mean_sign[k];
        if (neg && (k % 2 == 1))
            sg = -sg;
        const double v = sg * std::exp(model.mean_log[k] + static_cast<double>(k) * lt - half);
        m += v;
        dm += static_cast<double>(k) * v / t;
        cm += (static_cast<double>(k) - kbar) * v / t;
    }
    r.m = m.value();
    r.dm = dm.value();
    r.cond_mean = cm.value();
    return r;
}

/*!
 * Density of real zeros with a nonzero mean: the integrand of I_1 + I_2,
 *
 *   I_1: sqrt(S)/(pi P) exp(-(m^2 Q + m'^2 P - 2 m m' R) / (2 S))
 *   I_2: sqrt(2)|m'P - mR| / (pi P^{3/2}) exp(-m^2/(2P)) erf(|m'P - mR| / sqrt(2 P S))
 *
 * with erf the unnormalized integral of exp(-s^2). The I_1 exponent is
 * rewritten as m^2/(2P) + (m'P - mR)^2/(2 P S).
 */
inline double kacrice_mean_density(GaussianModel const& model, double t)
{
    if (!std::isfinite(t))
        return 0.0;
    const auto k = kacrice_terms(model, t);
    if (!std::isfinite(k.m) || !std::isfinite(k.cond_mean))
        return 0.0;
    const double V = std::max(k.var_ratio, 0.0);
    const double q1 = k.m * k.m / (2.0 * k.P);
    const double a = std::abs(k.cond_mean);
    double i1 = 0.0;
    double i2 = 0.0;
    if (V > 0.0) {
        i1 = std::sqrt(V) / detail::kPi * std::exp(-q1 - a * a / (2.0 * V * k.P));
        if (a > 0.0)
            i2 = std::sqrt(2.0) * a / (detail::kPi * std::sqrt(k.P)) * std::exp(-q1) *
                 erf_unnormalized(a / std::sqrt(2.0 * V * k.P));
    } else if (a > 0.0) {
        i2 = std::sqrt(2.0) * a / (detail::kPi * std::sqrt(k.P)) * std::exp(-q1) *
             erf_unnormalized(std::numeric_limits<double>::infinity());
    }
    const double rho = i1 + i2;
    return std::isfinite(rho) ? rho : 0.0;
}

//---------------------------------------------------------------------------//
// Limiting density
//---------------------------------------------------------------------------//
inline double limiting_density(LimitingFunction const& lim, double t)
{
    if (!(std::abs(t) < 1.0))
        throw std::domain_error("limiting_density: |t| must be < 1");
    const double x = t * t;
    const auto F = eval_f_infinity(lim, x);
    const double g1 = F.df / F.f;
    const double g2 = F.d2f / F.f - g1 * g1;
    const double r = g1 + x * g2;
    return std::sqrt(std::max(r, 0.0)) / detail::kPi;
}

//---------------------------------------------------------------------------//
// Expected counts
//---------------------------------------------------------------------------//
struct ExpectedCount {
    double value = 0.0;
    double abs_error = 0.0;
    int evaluations = 0;
    bool converged = true;
};

namespace detail {
inline std::vector<QuadPiece> density_pieces(std::function<double(double)> const& rho, double a,
                                             double b, int n)
{
    const double w = std::min(1.0 / std::max(n, 1), 0.125);
    const double inf = std::numeric_limits<double>::infinity();
    // Panel edges on the real line; each panel carries its own substitution.
    enum class Map { plain, left_of, right_of, tail };
    struct Panel {
        double lo, hi;
        Map map;
        double pole;
    };
    const std::vector<Panel> layout = {
        {-inf, -2.0, Map::tail, 0.0},          {-2.0, -1.0 - w, Map::right_of, -1.0},
        {-1.0 - w, -1.0, Map::plain, 0.0},     {-1.0, -1.0 + w, Map::plain, 0.0},
        {-1.0 + w, -0.5, Map::left_of, -1.0},  {-0.5, 0.5, Map::plain, 0.0},
        {0.5, 1.0 - w, Map::left_of, 1.0},     {1.0 - w, 1.0, Map::plain, 0.0},
        {1.0, 1.0 + w, Map::plain, 0.0},       {1.0 + w, 2.0, Map::right_of, 1.0},
        {2.0, inf, Map::tail, 0.0}};

    std::vector<QuadPiece> pieces;
    for (auto const& p : layout) {
        const double lo = std::max(a, p.lo);
        const double hi = std::min(b, p.hi);
        if (!(hi > lo))
            continue;
        switch (p.map) {
        case Map::plain: pieces.push_back({rho, lo, hi}); break;
        case Map::left_of: {
            // panel approaches the pole from the side where |t| < 1:
            // |t - pole| = exp(-u)
            const double pole = p.pole;
            const double sgn = pole > 0 ? -1.0 : 1.0;  // t = pole + sgn * exp(-u)
            const double d_lo = std::abs(pole - (sgn < 0 ? lo : hi));
            const double d_hi = std::abs(pole - (sgn < 0 ? hi : lo));
            pieces.push_back({[rho, pole, sgn](double u) {
                                  const double d = std::exp(-u);
                                  return rho(pole + sgn * d) * d;
                              },
                              -std::log(d_lo), -std::log(d_hi)});
            break;
        }
        case Map::right_of: {
            const double pole = p.pole;
            const double sgn = pole > 0 ? 1.0 : -1.0;  // t = pole + sgn * exp(u)
            const double d_lo = std::abs((sgn > 0 ? lo : hi) - pole);
            const double d_hi = std::abs((sgn > 0 ? hi : lo) - pole);
            pieces.push_back({[rho, pole, sgn](double u) {
                                  const double d = std::exp(u);
                                  return rho(pole + sgn * d) * d;
                              },
                              std::log(d_lo), std::log(d_hi)});
            break;
        }
        case Map::tail: {
            // t = u / (1 - |u|)
            auto to_u = [](double t) {
                if (std::isinf(t))
                    return t > 0 ? 1.0 : -1.0;
                return t / (1.0 + std::abs(t));
            };
            pieces.push_back({[rho](double u) {
                                  const double s = 1.0 - std::abs(u);
                                  return rho(u / s) / (s * s);
                              },
                              to_u(lo), to_u(hi)});
            break;
        }
        }
    }
    return pieces;
}
}  // namespace detail

/*!
 * Integral of a density over [a, b] (endpoints may be infinite).
 *
 * The line is split at +-1 and +-(1 -+ w), w = min(1/n, 1/8); panels
 * approaching +-1 substitute |t -+ 1| = e^{-u}, and |t| >= 2 uses
 * t = u/(1-|u|).
 */
inline ExpectedCount expected_count(std::function<double(double)> const& rho, double a, double b,
                                    int n, double rel_tol = 1e-9)
{
    if (!(b >= a))
        throw std::invalid_argument("expected_count: need a <= b");
    ExpectedCount out;
    if (a == b)
        return out;
    const auto q = integrate_pieces(detail::density_pieces(rho, a, b, n), rel_tol, 1e-14);
    out.value = q.value;
    out.abs_error = q.abs_error;
    out.evaluations = q.evaluations;
    out.converged = q.converged;
    return out;
}

inline ExpectedCount expected_count_ek(VarianceKernel const& kernel, double a, double b,
                                       double rel_tol = 1e-9)
{
    return expected_count([&kernel](double t) { return density_ek(kernel, t); }, a, b,
                          kernel.degree(), rel_tol);
}

inline ExpectedCount expected_count_kacrice(GaussianModel const& model, double a, double b,
                                            double rel_tol = 1e-9)
{
    return expected_count([&model](double t) { return kacrice_mean_density(model, t); }, a, b,
                          model.kernel.degree(), rel_tol);
}

/*!
 * Expected number of crossings of the Gaussian polynomial with mean mu and a
 * deterministic polynomial f (monomial coefficients), i.e. real zeros of P_n - f.
 */
inline ExpectedCount crossing_count(CoefficientSequence const& seq, double mu,
                                    std::span<const double> f, double a, double b,
                                    double rel_tol = 1e-9)
{
    const GaussianModel model(seq, mu, f);
    return expected_count_kacrice(model, a, b, rel_tol);
}

//---------------------------------------------------------------------------//
// Asymptotic slopes
//---------------------------------------------------------------------------//

/*!
 * Coefficient of log n in E N_n(R).
 *
 * Mean zero: (1 + sqrt(deg h + 1))/pi where c_k^2 ~ h(k). Nonzero mean:
 * (1 + sqrt(2 rho + 1))/(2 pi) where c_k is a classical polynomial of degree rho.
 */
inline double predicted_slope(CoefficientProfile const& p, double mu)
{
    if (mu == 0.0) {
        double deg = 0.0;
        switch (p.kind) {
        case ProfileKind::kac: deg = 0.0; break;
        case ProfileKind::hyperbolic: deg = p.L - 1.0; break;
        case ProfileKind::kac_derivative: deg = 2.0 * p.d; break;
        case ProfileKind::power_law: deg = 2.0 * p.rho; break;
        case ProfileKind::genpoly_sqrt: deg = p.h.degree(); break;
        case ProfileKind::explicit_list: deg = 2.0 * p.rho; break;
        }
        return (1.0 + std::sqrt(deg + 1.0)) / detail::kPi;
    }
    double rho = 0.0;
    switch (p.kind) {
    case ProfileKind::kac: rho = 0.0; break;
    case ProfileKind::kac_derivative: rho = p.d; break;
    case ProfileKind::hyperbolic:
        if (p.L != 1.0)
            throw std::invalid_argument(
                "predicted_slope: nonzero mean needs polynomial coefficients (hyperbolic L != 1)");
        rho = 0.0;
        break;
    case ProfileKind::power_law:
        if (!detail::is_integer(p.rho) || p.rho < 0.0)
            throw std::invalid_argument("predicted_slope: nonzero mean needs integer growth exponent");
        rho = p.rho;
        break;
    case ProfileKind::genpoly_sqrt:
        if (p.h.degree() != 0.0 || p.h.terms().size() != 1)
            throw std::invalid_argument(
                "predicted_slope: nonzero mean needs a classical polynomial profile");
        rho = 0.0;
        break;
    case ProfileKind::explicit_list:
        throw std::invalid_argument("predicted_slope: explicit profile is not a classical polynomial");
    }
    return (1.0 + std::sqrt(2.0 * rho + 1.0)) / (2.0 * detail::kPi);
}

//! Density curve on a grid for the CLI and plotting.
inline DensityCurve density_curve(DensityMethod method, CoefficientProfile const& profile,
                                  double mu, std::span<const double> grid)
{
    DensityCurve c;
    c.method = method;
    c.n = profile.poly_degree();
    c.profile_id = profile.id();
    c.t.assign(grid.begin(), grid.end());
    c.rho.reserve(grid.size());
    const auto seq = coeff_sequence(profile);
    switch (method) {
    case DensityMethod::ek_raw: {
        const VarianceKernel k(seq);
        for (double t : grid)
            c.rho.push_back(density_pairwise(k, t));
        break;
    }
    case DensityMethod::ek_logvar: {
        const VarianceKernel k(seq);
        for (double t : grid)
            c.rho.push_back(density_ek(k, t));
        break;
    }
    case DensityMethod::kac_closed:
        if (profile.kind != ProfileKind::kac)
            throw std::invalid_argument("kac_closed density requires the kac profile");
        for (double t : grid)
            c.rho.push_back(kac_density_closed(profile.n, t));
        break;
    case DensityMethod::kacrice_mean: {
        const GaussianModel m(seq, mu);
        for (double t : grid)
            c.rho.push_back(kacrice_mean_density(m, t));
        break;
    }
    case DensityMethod::limiting: {
        const auto lim = LimitingFunction::from_profile(profile);
        for (double t : grid)
            c.rho.push_back(limiting_density(lim, t));
        break;
    }
    }
    return c;
}

}  // namespace randpoly
