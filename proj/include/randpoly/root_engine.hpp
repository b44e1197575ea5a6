#pragma once

// Roots of realized polynomials: simultaneous (Aberth-Ehrlich) iteration,
// real/conjugate classification, counting in sets, reciprocal transform.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "randpoly/atoms.hpp"
#include "randpoly/detail/numerics.hpp"

namespace randpoly {

using cplx = std::complex<double>;

struct RootSolveOptions {
    double rel_tol = 1e-13;
    int max_iterations = 500;
    int max_restarts = 3;
    int polish_steps = 3;
};

struct RootSample {
    int degree = 0;                 //!< nominal degree (coefficient count - 1)
    int effective_degree = 0;       //!< after trimming vanishing leading coefficients
    bool real_coefficients = true;
    std::vector<cplx> coeffs;       //!< realized a_0..a_n
    std::vector<cplx> roots;        //!< all finite roots, with multiplicity
    std::vector<double> residuals;  //!< |P(z)| / sum |a_k||z|^k per root
    int iterations = 0;
    int restarts = 0;
    bool degenerate = false;
    std::string failure;

    // filled by classify_real
    bool classified = false;
    std::vector<double> real_roots;                  //!< with multiplicity
    std::vector<std::pair<cplx, cplx>> pairs;        //!< (upper, lower), with multiplicity
};

namespace detail {

struct EvalResult {
    cplx p;
    cplx dp;
    double abs_bound = 0.0;  //!< sum |a_k| |z|^k
};

//! Coefficients split into real arrays with precomputed moduli.
class PolyEval {
  public:
    explicit PolyEval(std::span<const cplx> a) : re_(a.size()), im_(a.size()), mod_(a.size())
    {
        for (std::size_t k = 0; k < a.size(); ++k) {
            re_[k] = a[k].real();
            im_[k] = a[k].imag();
            mod_[k] = std::abs(a[k]);
        }
    }

    [[nodiscard]] std::size_t degree() const noexcept { return re_.size() - 1; }

    // p(z), p'(z) and the absolute bound by Horner in the given direction.
    template <bool Reversed>
    [[nodiscard]] EvalResult horner(double zr, double zi) const noexcept
    {
        const std::size_t n = degree();
        auto at = [&](std::size_t k) { return Reversed ? n - k : k; };
        double pr = re_[at(n)], pi = im_[at(n)];
        double dr = 0.0, di = 0.0;
        double b = mod_[at(n)];
        const double az = std::sqrt(zr * zr + zi * zi);
        for (std::size_t k = n; k-- > 0;) {
            const double ndr = dr * zr - di * zi + pr;
            const double ndi = dr * zi + di * zr + pi;
            dr = ndr;
            di = ndi;
            const double npr = pr * zr - pi * zi + re_[at(k)];
            const double npi = pr * zi + pi * zr + im_[at(k)];
            pr = npr;
            pi = npi;
            b = b * az + mod_[at(k)];
        }
        return {cplx(pr, pi), cplx(dr, di), b};
    }

  private:
    std::vector<double> re_, im_, mod_;
};

inline EvalResult horner(std::span<const cplx> a, cplx z)
{
    return PolyEval(a).horner<false>(z.real(), z.imag());
}

// Newton correction p/p' and relative residual, overflow-safe for |z| > 1.
struct NewtonStep {
    cplx step;
    double rel_residual = 0.0;
};

inline NewtonStep newton_ratio(PolyEval const& P, cplx z)
{
    if (std::norm(z) <= 1.0) {
        const auto e = P.horner<false>(z.real(), z.imag());
        const double rr = e.abs_bound > 0 ? std::abs(e.p) / e.abs_bound : 0.0;
        return {e.p / e.dp, rr};
    }
    // q(w) = w^n p(1/w) has reversed coefficients; p/p' = q / (w (n q - w q')).
    const cplx w = 1.0 / z;
    const auto e = P.horner<true>(w.real(), w.imag());
    const double rr = e.abs_bound > 0 ? std::abs(e.p) / e.abs_bound : 0.0;
    return {e.p / (w * (static_cast<double>(P.degree()) * e.p - w * e.dp)), rr};
}

inline NewtonStep newton_ratio(std::span<const cplx> a, cplx z)
{
    return newton_ratio(PolyEval(a), z);
}

inline double relative_residual(PolyEval const& P, cplx z)
{
    return newton_ratio(P, z).rel_residual;
}

inline double relative_residual(std::span<const cplx> a, cplx z)
{
    return newton_ratio(a, z).rel_residual;
}

// Initial points on circles from the upper convex hull of (k, log|a_k|).
inline std::vector<cplx> newton_polygon_starts(std::span<const cplx> a, double angle_offset)
{
    const int n = static_cast<int>(a.size()) - 1;
    std::vector<int> idx;
    std::vector<double> la(a.size());
    for (int k = 0; k <= n; ++k)
        la[k] = a[k] == cplx(0.0) ? kNegInf : std::log(std::abs(a[k]));
    for (int k = 0; k <= n; ++k) {
        if (la[k] == kNegInf)
            continue;
        while (idx.size() >= 2) {
            const int i = idx[idx.size() - 2];
            const int j = idx.back();
            // remove j if it lies on or below segment i-k
            const double cross = (j - i) * (la[k] - la[i]) - (k - i) * (la[j] - la[i]);
            if (cross >= 0.0)
                idx.pop_back();
            else
                break;
        }
        idx.push_back(k);
    }
    std::vector<cplx> z;
    z.reserve(n);
    for (std::size_t e = 0; e + 1 < idx.size(); ++e) {
        const int i = idx[e];
        const int j = idx[e + 1];
        const int cnt = j - i;
        const double r = std::exp((la[i] - la[j]) / cnt);
        for (int l = 0; l < cnt; ++l) {
            const double th = 2.0 * kPi * (static_cast<double>(l) / cnt) +
                              angle_offset + 2.0 * kPi * static_cast<double>(e) / n;
            z.push_back(std::polar(r, th));
        }
    }
    return z;
}

// Gauss-Seidel Aberth iteration; returns true if every root converged.
inline bool aberth(std::span<const cplx> a, std::vector<cplx>& z, RootSolveOptions const& opt,
                   int& iterations)
{
    const auto n = z.size();
    std::vector<double> re(n), im(n);
    for (std::size_t i = 0; i < n; ++i) {
        re[i] = z[i].real();
        im[i] = z[i].imag();
    }
    std::vector<std::size_t> active(n);
    std::iota(active.begin(), active.end(), 0);
    const double eps = std::numeric_limits<double>::epsilon();
    bool finite = true;
    const PolyEval P(a);
    for (int it = 0; it < opt.max_iterations && !active.empty() && finite; ++it) {
        iterations = it + 1;
        std::size_t keep = 0;
        for (std::size_t ai = 0; ai < active.size(); ++ai) {
            const auto i = active[ai];
            const auto ns = newton_ratio(P, cplx(re[i], im[i]));
            if (ns.rel_residual <= 8.0 * eps)
                continue;
            double sr = 0.0, si = 0.0;
            const double xr = re[i], xi = im[i];
            // four independent partial sums keep the divider busy
            double ar[4] = {0, 0, 0, 0}, aim[4] = {0, 0, 0, 0};
            auto accumulate = [&](std::size_t lo, std::size_t hi) {
                std::size_t j = lo;
                for (; j + 4 <= hi; j += 4) {
                    for (int l = 0; l < 4; ++l) {
                        const double dr = xr - re[j + l];
                        const double di = xi - im[j + l];
                        const double inv = 1.0 / (dr * dr + di * di);
                        ar[l] += dr * inv;
                        aim[l] -= di * inv;
                    }
                }
                for (; j < hi; ++j) {
                    const double dr = xr - re[j];
                    const double di = xi - im[j];
                    const double inv = 1.0 / (dr * dr + di * di);
                    ar[0] += dr * inv;
                    aim[0] -= di * inv;
                }
            };
            accumulate(0, i);
            accumulate(i + 1, n);
            sr = (ar[0] + ar[1]) + (ar[2] + ar[3]);
            si = (aim[0] + aim[1]) + (aim[2] + aim[3]);
            const cplx corr = ns.step / (1.0 - ns.step * cplx(sr, si));
            if (!std::isfinite(corr.real()) || !std::isfinite(corr.imag())) {
                finite = false;
                break;
            }
            re[i] -= corr.real();
            im[i] -= corr.imag();
            if (std::abs(corr) > opt.rel_tol * std::hypot(re[i], im[i]))
                active[keep++] = i;
        }
        if (finite)
            active.resize(keep);
    }
    for (std::size_t i = 0; i < n; ++i)
        z[i] = cplx(re[i], im[i]);
    return finite && active.empty();
}

}  // namespace detail

/*!
 * All roots of sum_k a_k z^k.
 *
 * Vanishing leading coefficients are trimmed (effective_degree records the
 * result) and vanishing low coefficients give exact roots at 0. Initial
 * points sit on Newton-polygon circles with an angular offset drawn from
 * `jitter`; each failed attempt restarts with a fresh offset. A sample that
 * fails all restarts is returned with degenerate = true.
 */
inline RootSample find_roots(std::span<const cplx> coeffs, SeedStream jitter = SeedStream(0),
                             RootSolveOptions const& opt = {})
{
    RootSample s;
    s.coeffs.assign(coeffs.begin(), coeffs.end());
    s.degree = static_cast<int>(coeffs.size()) - 1;
    s.real_coefficients = std::all_of(coeffs.begin(), coeffs.end(),
                                      [](cplx c) { return c.imag() == 0.0; });
    int top = s.degree;
    while (top >= 0 && coeffs[top] == cplx(0.0))
        --top;
    if (top < 0)
        throw std::invalid_argument("find_roots: all coefficients vanish");
    s.effective_degree = top;
    int low = 0;
    while (coeffs[low] == cplx(0.0))
        ++low;
    for (int k = 0; k < low; ++k) {
        s.roots.emplace_back(0.0, 0.0);
        s.residuals.push_back(0.0);
    }
    std::span<const cplx> red = coeffs.subspan(low, top - low + 1);
    const int m = top - low;
    std::span<const cplx> full = coeffs.subspan(0, top + 1);
    if (m == 0)
        return s;
    if (m == 1) {
        const cplx r = -red[0] / red[1];
        s.roots.push_back(r);
        s.residuals.push_back(detail::relative_residual(full, r));
        return s;
    }

    std::vector<cplx> z;
    bool ok = false;
    for (int attempt = 0; attempt <= opt.max_restarts && !ok; ++attempt) {
        const double offset = attempt == 0 ? 0.7 : 2.0 * detail::kPi * jitter.next_open01();
        z = detail::newton_polygon_starts(red, offset);
        int iters = 0;
        ok = detail::aberth(red, z, opt, iters);
        s.iterations += iters;
        s.restarts = attempt;
    }
    if (!ok) {
        s.degenerate = true;
        s.failure = "no convergence after restarts";
    }
    // polish each root by Newton on the trimmed original polynomial
    const detail::PolyEval Pfull(full);
    for (auto& r : z) {
        double res = detail::relative_residual(Pfull, r);
        for (int k = 0; k < opt.polish_steps && res > 0.0; ++k) {
            const auto ns = detail::newton_ratio(Pfull, r);
            if (!std::isfinite(ns.step.real()) || !std::isfinite(ns.step.imag()))
                break;
            if (std::abs(ns.step) > 1e-6 * (1.0 + std::abs(r)))
                break;
            const cplx cand = r - ns.step;
            const double cres = detail::relative_residual(Pfull, cand);
            if (!(cres < res))
                break;
            r = cand;
            res = cres;
        }
        s.roots.push_back(r);
        s.residuals.push_back(res);
    }
    return s;
}

inline RootSample find_roots(std::span<const double> coeffs, SeedStream jitter = SeedStream(0),
                             RootSolveOptions const& opt = {})
{
    std::vector<cplx> c(coeffs.begin(), coeffs.end());
    return find_roots(std::span<const cplx>(c), jitter, opt);
}

//---------------------------------------------------------------------------//
// Classification
//---------------------------------------------------------------------------//
struct ClassifyOptions {
    double im_tol = 1e-9;
    double merge_tol = 1e-7;
    double pair_tol = 1e-6;
};

namespace detail {
// Newton restricted to the real line; returns the limit if it converges.
inline std::optional<double> real_newton(PolyEval const& a, double x0, int multiplicity)
{
    double x = x0;
    for (int it = 0; it < 60; ++it) {
        const auto ns = newton_ratio(a, cplx(x, 0.0));
        if (ns.rel_residual == 0.0)
            return x;
        const double step = multiplicity * ns.step.real();
        if (!std::isfinite(step))
            return std::nullopt;
        x -= step;
        if (std::abs(step) <= 1e-14 * (1.0 + std::abs(x)) || ns.rel_residual <= 4e-16)
            return x;
    }
    return std::nullopt;
}
}  // namespace detail

/*!
 * Split roots into real roots and conjugate pairs (real coefficients only).
 *
 * Roots within merge_tol (1+|z|) of each other are merged with multiplicity.
 * A cluster is real iff its imaginary part is within im_tol (1+|z|) and real
 * Newton started at its real part stays within the same tolerance. Remaining
 * clusters are matched greedily to conjugates; a leftover marks the sample
 * degenerate.
 */
inline void classify_real(RootSample& s, ClassifyOptions const& opt = {})
{
    s.real_roots.clear();
    s.pairs.clear();
    s.classified = true;
    if (!s.real_coefficients)
        return;
    const detail::PolyEval full(
        std::span<const cplx>(s.coeffs.data(), static_cast<std::size_t>(s.effective_degree) + 1));

    // clusters by union-find over sorted real parts
    const auto n = s.roots.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](auto i, auto j) { return s.roots[i].real() < s.roots[j].real(); });
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t i) {
        while (parent[i] != i)
            i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t a = 0; a < n; ++a) {
        const auto i = order[a];
        const double tol_i = opt.merge_tol * (1.0 + std::abs(s.roots[i]));
        for (std::size_t b = a + 1; b < n; ++b) {
            const auto j = order[b];
            if (s.roots[j].real() - s.roots[i].real() > 2.0 * tol_i + 1e-300)
                break;
            const double tol = opt.merge_tol * (1.0 + std::max(std::abs(s.roots[i]), std::abs(s.roots[j])));
            if (std::abs(s.roots[i] - s.roots[j]) <= tol)
                parent[find(j)] = find(i);
        }
    }
    struct Cluster {
        cplx c;
        int mult = 0;
    };
    std::vector<Cluster> clusters;
    std::vector<long> slot(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = find(i);
        if (slot[r] < 0) {
            slot[r] = static_cast<long>(clusters.size());
            clusters.push_back({});
        }
        auto& c = clusters[slot[r]];
        c.c += s.roots[i];
        ++c.mult;
    }
    std::vector<Cluster> upper, lower;
    for (auto& c : clusters) {
        c.c /= static_cast<double>(c.mult);
        const double tol = opt.im_tol * (1.0 + std::abs(c.c));
        bool is_real = false;
        if (std::abs(c.c.imag()) <= tol) {
            if (c.c == cplx(0.0)) {
                is_real = true;
            } else {
                const auto x = detail::real_newton(full, c.c.real(), c.mult);
                is_real = x && std::abs(*x - c.c.real()) <= tol;
            }
        }
        if (is_real) {
            for (int k = 0; k < c.mult; ++k)
                s.real_roots.push_back(c.c.real());
        } else if (c.c.imag() >= 0.0) {
            upper.push_back(c);
        } else {
            lower.push_back(c);
        }
    }
    std::sort(s.real_roots.begin(), s.real_roots.end());
    std::vector<char> used(lower.size(), 0);
    for (auto const& u : upper) {
        const cplx target = std::conj(u.c);
        long best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < lower.size(); ++j) {
            if (used[j] || lower[j].mult != u.mult)
                continue;
            const double d = std::abs(lower[j].c - target);
            if (d < best_d) {
                best_d = d;
                best = static_cast<long>(j);
            }
        }
        if (best < 0 || best_d > opt.pair_tol * (1.0 + std::abs(u.c))) {
            s.degenerate = true;
            s.failure = "unmatched non-real root";
            continue;
        }
        used[best] = 1;
        for (int k = 0; k < u.mult; ++k)
            s.pairs.emplace_back(u.c, lower[best].c);
    }
    for (std::size_t j = 0; j < lower.size(); ++j) {
        if (!used[j]) {
            s.degenerate = true;
            s.failure = "unmatched non-real root";
        }
    }
}

inline RootSample solve_and_classify(std::span<const double> coeffs,
                                     SeedStream jitter = SeedStream(0))
{
    auto s = find_roots(coeffs, jitter);
    classify_real(s);
    return s;
}

//---------------------------------------------------------------------------//
// Counting
//---------------------------------------------------------------------------//
struct Interval {
    double a = -std::numeric_limits<double>::infinity();
    double b = std::numeric_limits<double>::infinity();
};
struct Disk {
    cplx center;
    double radius = 1.0;
};
struct Annulus {
    cplx center;
    double r_inner = 0.0;
    double r_outer = 1.0;
};
using RootSet = std::variant<Interval, Disk, Annulus>;

namespace detail {
inline double boundary_slack(double scale) { return 1e-12 * (1.0 + std::abs(scale)); }
}  // namespace detail

//! Closed-set counts with multiplicity; intervals count classified real roots.
inline int count_in_set(RootSample const& s, RootSet const& set)
{
    return std::visit(
        [&](auto const& S) -> int {
            using T = std::decay_t<decltype(S)>;
            int c = 0;
            if constexpr (std::is_same_v<T, Interval>) {
                if (!s.classified)
                    throw std::logic_error("count_in_set: sample not classified");
                for (double x : s.real_roots)
                    if (x >= S.a - detail::boundary_slack(S.a) &&
                        x <= S.b + detail::boundary_slack(S.b))
                        ++c;
            } else if constexpr (std::is_same_v<T, Disk>) {
                for (auto z : s.roots)
                    if (std::abs(z - S.center) <= S.radius + detail::boundary_slack(S.radius))
                        ++c;
            } else {
                for (auto z : s.roots) {
                    const double d = std::abs(z - S.center);
                    if (d >= S.r_inner - detail::boundary_slack(S.r_inner) &&
                        d <= S.r_outer + detail::boundary_slack(S.r_outer))
                        ++c;
                }
            }
            return c;
        },
        set);
}

//---------------------------------------------------------------------------//
// Reciprocal polynomial Q(z) = z^n P(1/z) / a_n
//---------------------------------------------------------------------------//
template <class T>
struct ReciprocalResult {
    std::vector<T> coeffs;
    bool trimmed = false;  //!< a_n vanished; transform applied to the trimmed degree
};

template <class T>
ReciprocalResult<T> reciprocal_transform(std::span<const T> a)
{
    ReciprocalResult<T> r;
    int top = static_cast<int>(a.size()) - 1;
    while (top >= 0 && a[top] == T(0))
        --top;
    if (top < 0)
        throw std::invalid_argument("reciprocal_transform: zero polynomial");
    r.trimmed = top != static_cast<int>(a.size()) - 1;
    const T lead = a[top];
    r.coeffs.reserve(top + 1);
    for (int k = top; k >= 0; --k)
        r.coeffs.push_back(a[k] / lead);
    return r;
}

//---------------------------------------------------------------------------//
// Jensen bound on the number of roots in B(z, s)
//---------------------------------------------------------------------------//
inline double jensen_root_bound(std::span<const cplx> a, cplx z, double s, double R,
                                int circle_points = 64)
{
    if (!(s > 0.0) || !(R > s))
        throw std::invalid_argument("jensen_root_bound: need 0 < s < R");
    const auto ez = detail::horner(a, z);
    if (std::abs(ez.p) <= 4.0 * std::numeric_limits<double>::epsilon() * ez.abs_bound)
        throw std::domain_error("jensen_root_bound: P(z) vanishes");
    double M = 0.0;
    for (int k = 0; k < circle_points; ++k) {
        const cplx w = z + std::polar(R, 2.0 * detail::kPi * k / circle_points);
        M = std::max(M, std::abs(detail::horner(a, w).p));
    }
    return (std::log(M) - std::log(std::abs(ez.p))) / std::log(R / s);
}

inline double jensen_root_bound(std::span<const double> a, cplx z, double s, double R,
                                int circle_points = 64)
{
    std::vector<cplx> c(a.begin(), a.end());
    return jensen_root_bound(std::span<const cplx>(c), z, s, R, circle_points);
}

//---------------------------------------------------------------------------//
// Disk count by the argument principle
//---------------------------------------------------------------------------//

/*!
 * Number of roots in the open disk |z - center| < radius for a real
 * polynomial, by a certified winding number.
 *
 * The polynomial is Taylor-shifted to the center so that
 * B = sum_j j |b_j| radius^{j-1} bounds |P'| on the circle. An arc from w1 of
 * length len is accepted when 2 len B < |P(w1)|, which keeps its image in a
 * disk around P(w1) that excludes 0. Returns nullopt when refinement fails
 * (a root on or extremely close to the circle, or a circle so wide that the
 * global derivative bound needs more than max_evals evaluations).
 */
inline std::optional<int> count_in_disk_argument(std::span<const double> a, double center,
                                                 double radius, int max_depth = 40,
                                                 int max_evals = 1 << 14)
{
    const auto n = a.size();
    if (n == 0)
        return 0;
    // Taylor shift: b_j = P^{(j)}(center) / j!
    std::vector<double> b(a.begin(), a.end());
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t k = n - 1; k-- > i;)
            b[k] += center * b[k + 1];
    double B = 0.0;
    double rp = 1.0;
    for (std::size_t j = 1; j < n; ++j) {
        B += static_cast<double>(j) * std::abs(b[j]) * rp;
        rp *= radius;
    }
    B *= 2.0;
    auto eval = [&](double th) {
        const cplx v = std::polar(radius, th);
        cplx p = b[n - 1];
        for (std::size_t k = n - 1; k-- > 0;)
            p = p * v + b[k];
        return p;
    };
    double winding = 0.0;
    int evals = 0;
    struct Arc {
        double t0, t1;
        cplx p0, p1;
        int depth;
    };
    std::vector<Arc> stack;
    const int initial = 16;
    std::vector<cplx> pv(initial + 1);
    for (int k = 0; k <= initial; ++k)
        pv[k] = eval(2.0 * detail::kPi * k / initial);
    for (int k = initial; k-- > 0;)
        stack.push_back({2.0 * detail::kPi * k / initial, 2.0 * detail::kPi * (k + 1) / initial,
                         pv[k], pv[k + 1], 0});
    while (!stack.empty()) {
        auto arc = stack.back();
        stack.pop_back();
        const double len = radius * (arc.t1 - arc.t0);
        if (len * B < std::max(std::abs(arc.p0), std::abs(arc.p1))) {
            winding += std::arg(arc.p1 / arc.p0);
            continue;
        }
        if (arc.depth >= max_depth || ++evals > max_evals)
            return std::nullopt;
        const double tm = 0.5 * (arc.t0 + arc.t1);
        const cplx pm = eval(tm);
        stack.push_back({tm, arc.t1, pm, arc.p1, arc.depth + 1});
        stack.push_back({arc.t0, tm, arc.p0, pm, arc.depth + 1});
    }
    return static_cast<int>(std::lround(winding / (2.0 * detail::kPi)));
}

}  // namespace randpoly
