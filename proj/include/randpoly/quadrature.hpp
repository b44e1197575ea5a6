#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <queue>
#include <vector>

#include "randpoly/detail/numerics.hpp"

namespace randpoly {

struct QuadResult {
    double value = 0.0;
    double abs_error = 0.0;
    int evaluations = 0;
    bool converged = true;
};

namespace detail {

// 7-point Gauss / 15-point Kronrod nodes on [-1, 1] (QUADPACK qk15).
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct GkPanel {
    double a = 0.0;
    double b = 0.0;
    double value = 0.0;
    double error = 0.0;
    int depth = 0;
    int source = 0;  //!< which integrand this panel belongs to

    bool operator<(GkPanel const& o) const noexcept
    {
        if (error != o.error)
            return error < o.error;
        return a > o.a;  // deterministic tie-break
    }
};

template <class F>
GkPanel gk15(F const& f, double a, double b)
{
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double kron = fc * kWgk[7];
    double gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        const double fsum = f(c - dx) + f(c + dx);
        kron += kWgk[j] * fsum;
        if (j % 2 == 1)
            gauss += kWg[j / 2] * fsum;
    }
    GkPanel p;
    p.a = a;
    p.b = b;
    p.value = kron * h;
    p.error = std::abs((kron - gauss) * h);
    return p;
}

}  // namespace detail

/*!
 * Globally adaptive Gauss-Kronrod over several finite pieces at once.
 *
 * Each piece is a (function, a, b) triple; the panel with the largest error
 * estimate is bisected until the summed error meets
 * max(abs_tol, rel_tol * |total|). Refinement stops once the worst panel
 * has been bisected max_depth times; the estimated error is then reported
 * with converged = false.
 */
struct QuadPiece {
    std::function<double(double)> f;
    double a = 0.0;
    double b = 0.0;
};

inline QuadResult integrate_pieces(std::vector<QuadPiece> const& pieces, double rel_tol,
                                   double abs_tol = 0.0, int max_depth = 60,
                                   int max_panels = 20000)
{
    QuadResult r;
    std::priority_queue<detail::GkPanel> heap;
    double value = 0.0, error = 0.0;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        if (!(pieces[i].b > pieces[i].a))
            continue;
        auto p = detail::gk15(pieces[i].f, pieces[i].a, pieces[i].b);
        p.source = static_cast<int>(i);
        r.evaluations += 15;
        value += p.value;
        error += p.error;
        heap.push(p);
    }

    int panels = static_cast<int>(heap.size());
    while (!heap.empty() && error > std::max(abs_tol, rel_tol * std::abs(value))) {
        auto worst = heap.top();
        if (worst.depth >= max_depth || panels >= max_panels) {
            r.converged = false;
            break;
        }
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        auto const& f = pieces[worst.source].f;
        auto left = detail::gk15(f, worst.a, mid);
        auto right = detail::gk15(f, mid, worst.b);
        r.evaluations += 30;
        left.depth = right.depth = worst.depth + 1;
        left.source = right.source = worst.source;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++panels;
    }

    // final totals re-summed in a fixed panel order
    std::vector<detail::GkPanel> all;
    all.reserve(heap.size());
    while (!heap.empty()) {
        all.push_back(heap.top());
        heap.pop();
    }
    std::sort(all.begin(), all.end(), [](auto const& x, auto const& y) {
        return x.source != y.source ? x.source < y.source : x.a < y.a;
    });
    detail::CompensatedSum v, e;
    for (auto const& p : all) {
        v += p.value;
        e += p.error;
    }
    r.value = v.value();
    r.abs_error = e.value();
    if (r.abs_error > std::max(abs_tol, rel_tol * std::abs(r.value)))
        r.converged = false;
    return r;
}

template <class F>
QuadResult integrate(F f, double a, double b, double rel_tol, double abs_tol = 0.0)
{
    return integrate_pieces({QuadPiece{std::function<double(double)>(std::move(f)), a, b}},
                            rel_tol, abs_tol);
}

}  // namespace randpoly
