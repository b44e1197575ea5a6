#pragma once

// Monte Carlo experiments on realized random polynomials.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "randpoly/atoms.hpp"
#include "randpoly/coeff_profiles.hpp"
#include "randpoly/density_engine.hpp"
#include "randpoly/parallel.hpp"
#include "randpoly/quadrature.hpp"
#include "randpoly/root_engine.hpp"

namespace randpoly {

struct McConfig {
    std::size_t samples = 1000;
    std::uint64_t root_seed = 0;
    unsigned workers = 1;
};

struct Statistic {
    std::string name;
    double estimate = 0.0;
    double se = 0.0;
    std::size_t samples = 0;   //!< included samples
    std::size_t excluded = 0;  //!< degenerate samples
};

struct ExperimentReport {
    nlohmann::json config;
    std::uint64_t root_seed = 0;
    std::vector<Statistic> stats;
    double wall_time = 0.0;

    [[nodiscard]] Statistic const& at(std::string_view name) const
    {
        for (auto const& s : stats)
            if (s.name == name)
                return s;
        throw std::out_of_range("no statistic named " + std::string(name));
    }

    [[nodiscard]] nlohmann::json to_json() const
    {
        nlohmann::json j;
        j["config"] = config;
        j["root_seed"] = root_seed;
        j["wall_time_s"] = wall_time;
        auto& arr = j["statistics"] = nlohmann::json::array();
        for (auto const& s : stats)
            arr.push_back({{"name", s.name},
                           {"estimate", s.estimate},
                           {"se", s.se},
                           {"samples", s.samples},
                           {"excluded", s.excluded}});
        return j;
    }
};

//! Difference of two independent estimates with standard errors combined in quadrature.
struct Gap {
    double diff = 0.0;
    double se = 0.0;
};

inline Gap gap(Statistic const& a, Statistic const& b)
{
    return {a.estimate - b.estimate, std::hypot(a.se, b.se)};
}

//---------------------------------------------------------------------------//
// Sample statistics
//---------------------------------------------------------------------------//
struct MeanSe {
    double mean = 0.0;
    double sd = 0.0;
    double se = 0.0;
};

//! Mean and SE = sample sd / sqrt(m), with order-fixed sums.
inline MeanSe mean_se(std::span<const double> v)
{
    MeanSe r;
    const auto m = v.size();
    if (m == 0)
        return r;
    r.mean = pairwise_sum(v) / static_cast<double>(m);
    if (m < 2)
        return r;
    std::vector<double> dev(m);
    for (std::size_t i = 0; i < m; ++i)
        dev[i] = (v[i] - r.mean) * (v[i] - r.mean);
    r.sd = std::sqrt(pairwise_sum(dev) / static_cast<double>(m - 1));
    r.se = r.sd / std::sqrt(static_cast<double>(m));
    return r;
}

struct McMean {
    double mean = 0.0;
    double se = 0.0;
    std::optional<double> chebyshev;  //!< bound on P(|S - E S| >= lambda)
};

/*!
 * Empirical average with an optional Chebyshev tail bound
 * variance_bound / (m lambda^2) for the deviation of the mean.
 */
inline McMean mc_mean(std::span<const double> values, std::optional<double> variance_bound = {},
                      double lambda = 0.0)
{
    if (values.empty())
        throw std::invalid_argument("mc_mean: empty sequence");
    const auto ms = mean_se(values);
    McMean r{ms.mean, ms.se, std::nullopt};
    if (variance_bound) {
        if (!(lambda > 0.0))
            throw std::invalid_argument("mc_mean: lambda must be positive");
        r.chebyshev = *variance_bound / (static_cast<double>(values.size()) * lambda * lambda);
    }
    return r;
}

//---------------------------------------------------------------------------//
// Slope fits
//---------------------------------------------------------------------------//
struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::vector<double> residuals;
    std::vector<double> pairwise_slopes;  //!< (E_{i+1} - E_i) / ln(n_{i+1} / n_i)
};

//! Least-squares fit of counts against ln n.
inline SlopeFit slope_fit(std::span<const double> ns, std::span<const double> counts)
{
    if (ns.size() != counts.size())
        throw std::invalid_argument("slope_fit: size mismatch");
    if (ns.size() < 3)
        throw std::invalid_argument("slope_fit: need at least 3 grid points");
    const auto m = ns.size();
    std::vector<double> x(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (!(ns[i] > 0.0))
            throw std::invalid_argument("slope_fit: n must be positive");
        x[i] = std::log(ns[i]);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        mx += x[i];
        my += counts[i];
    }
    mx /= static_cast<double>(m);
    my /= static_cast<double>(m);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (counts[i] - my);
    }
    if (sxx == 0.0)
        throw std::invalid_argument("slope_fit: grid needs distinct n");
    SlopeFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    for (std::size_t i = 0; i < m; ++i)
        f.residuals.push_back(counts[i] - (f.intercept + f.slope * x[i]));
    for (std::size_t i = 0; i + 1 < m; ++i)
        f.pairwise_slopes.push_back((counts[i + 1] - counts[i]) / (x[i + 1] - x[i]));
    return f;
}

/*!
 * Exponent beta of p(gamma) = A gamma^beta from event counts out of m trials,
 * by maximizing the Poisson likelihood (zero counts are used, not dropped).
 * Returns +inf if all events fall at the largest gamma.
 */
inline double power_law_exponent_mle(std::span<const double> gammas,
                                     std::span<const double> counts)
{
    if (gammas.size() != counts.size() || gammas.size() < 2)
        throw std::invalid_argument("power_law_exponent_mle: need matching lists of size >= 2");
    double C = 0.0, cl = 0.0;
    for (std::size_t j = 0; j < gammas.size(); ++j) {
        C += counts[j];
        cl += counts[j] * std::log(gammas[j]);
    }
    if (C <= 0.0)
        return std::numeric_limits<double>::quiet_NaN();
    const double target = cl / C;
    // weighted mean of ln gamma with weights gamma^beta, increasing in beta
    auto wmean = [&](double beta) {
        double lmax = -std::numeric_limits<double>::infinity();
        for (double g : gammas)
            lmax = std::max(lmax, beta * std::log(g));
        double num = 0.0, den = 0.0;
        for (double g : gammas) {
            const double w = std::exp(beta * std::log(g) - lmax);
            num += w * std::log(g);
            den += w;
        }
        return num / den;
    };
    double lo = -50.0, hi = 50.0;
    if (wmean(hi) <= target)
        return std::numeric_limits<double>::infinity();
    if (wmean(lo) >= target)
        return -std::numeric_limits<double>::infinity();
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (wmean(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

//! Least-squares slope of log p against log gamma over strictly positive p.
inline double power_law_exponent_ols(std::span<const double> gammas, std::span<const double> p)
{
    std::vector<double> x, y;
    for (std::size_t j = 0; j < gammas.size(); ++j)
        if (p[j] > 0.0) {
            x.push_back(std::log(gammas[j]));
            y.push_back(std::log(p[j]));
        }
    if (x.size() < 2)
        return std::numeric_limits<double>::quiet_NaN();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    return sxy / sxx;
}

//---------------------------------------------------------------------------//
// Realizations
//---------------------------------------------------------------------------//
namespace detail {

inline SeedStream coeff_stream(std::uint64_t root_seed, std::size_t sample)
{
    return SeedStream(root_seed).at({sample, 0});
}

inline SeedStream jitter_stream(std::uint64_t root_seed, std::size_t sample)
{
    return SeedStream(root_seed).at({sample, 1});
}

// Nonzero-mean experiments are restricted to classical polynomial profiles.
inline void check_mean_profile(CoefficientProfile const& p, AtomSpec const& atom)
{
    if (atom.kind == AtomKind::gaussian && atom.mean != 0.0)
        (void)predicted_slope(p, atom.mean);
}

inline nlohmann::json base_config(std::string_view op, CoefficientProfile const& p,
                                  AtomSpec const& atom, McConfig const& cfg)
{
    return {{"op", op},
            {"profile", p.id()},
            {"atom", atom.id()},
            {"n", p.poly_degree()},
            {"samples", cfg.samples},
            {"root_seed", cfg.root_seed}};
}

class Stopwatch {
  public:
    [[nodiscard]] double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

  private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

inline Statistic make_stat(std::string name, std::vector<double> const& values,
                           std::vector<char> const& excluded)
{
    std::vector<double> kept;
    kept.reserve(values.size());
    std::size_t ex = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (excluded[i])
            ++ex;
        else
            kept.push_back(values[i]);
    }
    if (kept.empty())
        throw std::runtime_error(name + ": all samples degenerate");
    const auto ms = mean_se(kept);
    return {std::move(name), ms.mean, ms.se, kept.size(), ex};
}

}  // namespace detail

//! Realized coefficients a_k = c_k xi_k for one sample.
inline std::vector<cplx> realize(CoefficientSequence const& seq, AtomSpec const& atom,
                                 SeedStream stream)
{
    std::vector<cplx> a(seq.size());
    for (std::size_t k = 0; k < seq.size(); ++k)
        a[k] = seq.values[k] * sample_atom(atom, stream);
    return a;
}

inline std::vector<double> realize_real(CoefficientSequence const& seq, AtomSpec const& atom,
                                        SeedStream stream)
{
    if (atom.is_complex())
        throw std::invalid_argument("realize_real: complex atom");
    std::vector<double> a(seq.size());
    for (std::size_t k = 0; k < seq.size(); ++k)
        a[k] = seq.values[k] * sample_real(atom, stream);
    return a;
}

//! Solved (and, for real atoms, classified) sample `index` of an experiment.
inline RootSample sample_roots(CoefficientSequence const& seq, AtomSpec const& atom,
                               std::uint64_t root_seed, std::size_t index)
{
    const auto a = realize(seq, atom, detail::coeff_stream(root_seed, index));
    auto s = find_roots(std::span<const cplx>(a), detail::jitter_stream(root_seed, index));
    if (s.real_coefficients)
        classify_real(s);
    return s;
}

//---------------------------------------------------------------------------//
// Counts
//---------------------------------------------------------------------------//

//! Mean and SE of the number of roots in `set` (default: all of R).
inline ExperimentReport mc_expected_count(CoefficientProfile const& profile, AtomSpec const& atom,
                                          McConfig const& cfg, RootSet const& set = Interval{})
{
    if (cfg.samples < 2)
        throw std::invalid_argument("mc_expected_count: need at least 2 samples");
    if (atom.is_complex() && std::holds_alternative<Interval>(set))
        throw std::invalid_argument("mc_expected_count: real intervals need real atoms");
    detail::check_mean_profile(profile, atom);
    detail::Stopwatch sw;
    const auto seq = coeff_sequence(profile);
    std::vector<double> count(cfg.samples);
    std::vector<char> bad(cfg.samples, 0);
    parallel_for(cfg.samples, cfg.workers, [&](std::size_t i) {
        const auto s = sample_roots(seq, atom, cfg.root_seed, i);
        bad[i] = s.degenerate;
        count[i] = s.degenerate ? 0.0 : count_in_set(s, set);
    });
    ExperimentReport r;
    r.config = detail::base_config("mc-count", profile, atom, cfg);
    std::visit(
        [&](auto const& S) {
            using T = std::decay_t<decltype(S)>;
            if constexpr (std::is_same_v<T, Interval>)
                r.config["set"] = {{"interval", {S.a, S.b}}};
            else if constexpr (std::is_same_v<T, Disk>)
                r.config["set"] = {{"disk", {S.center.real(), S.center.imag(), S.radius}}};
            else
                r.config["set"] = {
                    {"annulus", {S.center.real(), S.center.imag(), S.r_inner, S.r_outer}}};
        },
        set);
    r.root_seed = cfg.root_seed;
    r.stats.push_back(detail::make_stat("count", count, bad));
    r.wall_time = sw.seconds();
    return r;
}

/*!
 * Sample variance of N(R), with a jackknife standard error.
 * Statistics: "variance", "count" (mean).
 */
inline ExperimentReport mc_variance_count(CoefficientProfile const& profile, AtomSpec const& atom,
                                          McConfig const& cfg)
{
    if (cfg.samples < 30)
        throw std::invalid_argument("mc_variance_count: need at least 30 samples");
    if (atom.is_complex())
        throw std::invalid_argument("mc_variance_count: real atoms only");
    detail::check_mean_profile(profile, atom);
    detail::Stopwatch sw;
    const auto seq = coeff_sequence(profile);
    std::vector<double> count(cfg.samples);
    std::vector<char> bad(cfg.samples, 0);
    parallel_for(cfg.samples, cfg.workers, [&](std::size_t i) {
        const auto s = sample_roots(seq, atom, cfg.root_seed, i);
        bad[i] = s.degenerate;
        count[i] = s.degenerate ? 0.0 : static_cast<double>(s.real_roots.size());
    });
    ExperimentReport r;
    r.config = detail::base_config("mc-var", profile, atom, cfg);
    r.root_seed = cfg.root_seed;
    const auto mean = detail::make_stat("count", count, bad);

    std::vector<double> x;
    for (std::size_t i = 0; i < count.size(); ++i)
        if (!bad[i])
            x.push_back(count[i]);
    const auto m = x.size();
    if (m < 3)
        throw std::runtime_error("mc_variance_count: fewer than 3 usable samples");
    const auto ms = mean_se(x);
    const double var = ms.sd * ms.sd;
    // leave-one-out variances from deviations about the full mean
    std::vector<double> dev2(m);
    for (std::size_t i = 0; i < m; ++i)
        dev2[i] = (x[i] - ms.mean) * (x[i] - ms.mean);
    const double ss = pairwise_sum(dev2);
    const double md = static_cast<double>(m);
    std::vector<double> loo(m);
    for (std::size_t i = 0; i < m; ++i) {
        // removing x_i shifts the mean by (mean - x_i)/(m-1)
        const double ss_i = ss - dev2[i] * md / (md - 1.0);
        loo[i] = ss_i / (md - 2.0);
    }
    const auto lms = mean_se(loo);
    const double jk_se = std::sqrt((md - 1.0) / md * lms.sd * lms.sd * (md - 1.0));
    r.stats.push_back({"variance", var, jk_se, m, mean.excluded});
    r.stats.push_back(mean);
    r.wall_time = sw.seconds();
    return r;
}

struct Histogram {
    std::vector<double> edges;    //!< bins + 1 edges
    std::vector<double> density;  //!< real roots per unit length per sample
    std::vector<double> se;
    std::size_t samples = 0;
    std::size_t excluded = 0;
};

//! Binned real-root density on [lo, hi].
inline Histogram empirical_density(CoefficientProfile const& profile, AtomSpec const& atom,
                                   int bins, double lo, double hi, McConfig const& cfg)
{
    if (bins < 1)
        throw std::invalid_argument("empirical_density: need at least one bin");
    if (!(hi > lo))
        throw std::invalid_argument("empirical_density: empty range");
    if (atom.is_complex())
        throw std::invalid_argument("empirical_density: real atoms only");
    detail::check_mean_profile(profile, atom);
    const auto seq = coeff_sequence(profile);
    const double width = (hi - lo) / bins;
    std::vector<std::vector<double>> per(cfg.samples);
    std::vector<char> bad(cfg.samples, 0);
    parallel_for(cfg.samples, cfg.workers, [&](std::size_t i) {
        const auto s = sample_roots(seq, atom, cfg.root_seed, i);
        bad[i] = s.degenerate;
        per[i].assign(bins, 0.0);
        if (s.degenerate)
            return;
        for (double x : s.real_roots) {
            if (x < lo || x > hi)
                continue;
            const int b = std::min(bins - 1, static_cast<int>((x - lo) / width));
            per[i][b] += 1.0;
        }
    });
    Histogram h;
    for (int b = 0; b <= bins; ++b)
        h.edges.push_back(lo + b * width);
    for (int b = 0; b < bins; ++b) {
        std::vector<double> col;
        for (std::size_t i = 0; i < cfg.samples; ++i)
            if (!bad[i])
                col.push_back(per[i][b]);
        if (col.empty())
            throw std::runtime_error("empirical_density: all samples degenerate");
        const auto ms = mean_se(col);
        h.density.push_back(ms.mean / width);
        h.se.push_back(ms.se / width);
        h.samples = col.size();
    }
    h.excluded = cfg.samples - h.samples;
    return h;
}

//---------------------------------------------------------------------------//
// Correlation functions at microscopic scale
//---------------------------------------------------------------------------//
enum class CorrelationKind {
    complex_points,  //!< k-point correlation of all roots in C
    mixed,           //!< k real slots followed by l upper-half-plane slots
};

namespace detail {
inline double bump_raw(double r2) { return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0; }

//! Integral of exp(-1/(1-u^2)) over the unit ball in dimension 1 or 2.
inline double bump_mass(int dim)
{
    static const double m1 =
        integrate([](double u) { return bump_raw(u * u); }, -1.0, 1.0, 1e-13).value;
    static const double m2 =
        2.0 * kPi * integrate([](double r) { return r * bump_raw(r * r); }, 0.0, 1.0, 1e-13).value;
    return dim == 1 ? m1 : m2;
}
}  // namespace detail

/*!
 * Window for correlation estimates.
 *
 * Points are rescaled as z / (1e-3 delta). The default test function is a
 * product of normalized mollifiers exp(-1/(1-|u|^2)) of radius `support`
 * (rescaled units), one-dimensional on real slots and two-dimensional on
 * complex slots. A user function may be supplied instead; it must vanish
 * unless every |u_j| < support.
 */
struct CorrelationWindow {
    double delta = 0.05;
    std::vector<cplx> centers;
    double support = 1e-3;
    std::function<double(std::span<const cplx>)> custom;

    [[nodiscard]] double rescale() const noexcept { return 1e-3 * delta; }

    //! Centers at radius 1 - 1.5 delta: real slots on the positive axis,
    //! complex slots at angle `angle`.
    static CorrelationWindow standard(double delta, int real_slots, int complex_slots,
                                      double angle = detail::kPi / 4)
    {
        CorrelationWindow w;
        w.delta = delta;
        const double r = 1.0 - 1.5 * delta;
        for (int j = 0; j < real_slots; ++j)
            w.centers.emplace_back(r, 0.0);
        for (int j = 0; j < complex_slots; ++j)
            w.centers.push_back(std::polar(r, angle));
        return w;
    }

    void validate(std::size_t slots) const
    {
        if (!(delta > 0.0 && delta < 1.0))
            throw std::invalid_argument("CorrelationWindow: delta must lie in (0, 1)");
        if (!(support > 0.0))
            throw std::invalid_argument("CorrelationWindow: support must be positive");
        if (centers.size() != slots)
            throw std::invalid_argument("CorrelationWindow: need one center per slot");
        for (auto c : centers) {
            const double r = std::abs(c);
            if (r < 1.0 - 2.0 * delta - 1e-12 || r > 1.0 - delta + 1e-12)
                throw std::invalid_argument("CorrelationWindow: |center| outside [1-2delta, 1-delta]");
        }
    }

    //! Test function value at rescaled offsets u_j = z_j - c_j; `real_slot`
    //! marks one-dimensional slots.
    [[nodiscard]] double eval(std::span<const cplx> u, std::span<const char> real_slot) const
    {
        if (custom)
            return custom(u);
        double v = 1.0;
        for (std::size_t j = 0; j < u.size(); ++j) {
            const double r2 = std::norm(u[j]) / (support * support);
            if (r2 >= 1.0)
                return 0.0;
            const int dim = real_slot[j] ? 1 : 2;
            v *= detail::bump_raw(r2) /
                 (detail::bump_mass(dim) * (dim == 1 ? support : support * support));
        }
        return v;
    }
};

struct CorrelationEstimate {
    int k = 0;
    int l = 0;
    CorrelationKind kind = CorrelationKind::complex_points;
    CorrelationWindow window;
    double estimate = 0.0;
    double se = 0.0;
    std::size_t samples = 0;
    std::size_t excluded = 0;
};

namespace detail {

/*
 * Sum of G over tuples of distinct roots; slot j draws from pools[j]
 * (indices into `pts`) and uses center centers[j]. `rot` multiplies the
 * offsets before evaluation (rotated test function).
 */
inline double distinct_tuple_sum(std::span<const cplx> pts,
                                 std::vector<std::vector<std::size_t>> const& pools,
                                 CorrelationWindow const& w, std::span<const cplx> centers,
                                 std::span<const char> real_slot, cplx rot)
{
    const auto slots = pools.size();
    const double scale = w.rescale();
    // candidate roots per slot: within the support around the center
    std::vector<std::vector<std::size_t>> cand(slots);
    for (std::size_t j = 0; j < slots; ++j) {
        const double reach = w.support * scale * (1.0 + 1e-12);
        for (auto idx : pools[j])
            if (std::abs(pts[idx] - centers[j]) < reach)
                cand[j].push_back(idx);
        if (cand[j].empty())
            return 0.0;
    }
    std::vector<std::size_t> pick(slots);
    std::vector<cplx> u(slots);
    double total = 0.0;
    auto rec = [&](auto&& self, std::size_t j) -> void {
        if (j == slots) {
            for (std::size_t s = 0; s < slots; ++s)
                u[s] = (pts[pick[s]] / scale - centers[s] / scale) * rot;
            total += w.eval(u, real_slot);
            return;
        }
        for (auto idx : cand[j]) {
            if (std::find(pick.begin(), pick.begin() + j, idx) != pick.begin() + j)
                continue;
            pick[j] = idx;
            self(self, j + 1);
        }
    };
    rec(rec, 0);
    return total;
}

struct CorrelationPools {
    std::vector<cplx> pts;
    std::vector<std::vector<std::size_t>> pools;
    std::vector<char> real_slot;
};

inline CorrelationPools correlation_pools(RootSample const& s, CorrelationKind kind, int k, int l)
{
    CorrelationPools p;
    if (kind == CorrelationKind::complex_points) {
        p.pts = s.roots;
        std::vector<std::size_t> all(p.pts.size());
        std::iota(all.begin(), all.end(), 0);
        p.pools.assign(k, all);
        p.real_slot.assign(k, 0);
        return p;
    }
    std::vector<std::size_t> reals, upper;
    for (double x : s.real_roots) {
        reals.push_back(p.pts.size());
        p.pts.emplace_back(x, 0.0);
    }
    for (auto const& pr : s.pairs) {
        upper.push_back(p.pts.size());
        p.pts.push_back(pr.first);
    }
    for (int j = 0; j < k; ++j) {
        p.pools.push_back(reals);
        p.real_slot.push_back(1);
    }
    for (int j = 0; j < l; ++j) {
        p.pools.push_back(upper);
        p.real_slot.push_back(0);
    }
    return p;
}

inline void check_orders(CorrelationKind kind, int k, int l, AtomSpec const& atom,
                         CorrelationWindow const& w)
{
    if (k < 0 || l < 0 || k + l < 1)
        throw std::invalid_argument("correlation: need k + l >= 1");
    if (kind == CorrelationKind::complex_points && l != 0)
        throw std::invalid_argument("correlation: complex k-point estimates take l = 0");
    if (kind == CorrelationKind::mixed) {
        if (atom.is_complex())
            throw std::invalid_argument("correlation: mixed estimates need real atoms");
        for (int j = 0; j < k; ++j)
            if (w.centers[j].imag() != 0.0)
                throw std::invalid_argument("correlation: real slots need real centers");
        for (int j = k; j < k + l; ++j)
            if (!(w.centers[j].imag() > 0.0))
                throw std::invalid_argument("correlation: complex slots need centers in the upper half-plane");
    }
}

}  // namespace detail

/*!
 * Monte Carlo estimate of the integral of G against the k-point (or mixed
 * (k,l)) correlation function of the rescaled roots: the average over samples
 * of the sum of G over tuples of distinct roots. In mixed mode, roots tagged
 * real fill the first k slots and upper-half-plane roots the last l.
 */
inline CorrelationEstimate correlation_estimate(CoefficientProfile const& profile,
                                                AtomSpec const& atom, CorrelationWindow const& w,
                                                CorrelationKind kind, int k, int l,
                                                McConfig const& cfg)
{
    w.validate(static_cast<std::size_t>(std::max(0, k + l)));
    detail::check_orders(kind, k, l, atom, w);
    detail::check_mean_profile(profile, atom);
    if (cfg.samples < 2)
        throw std::invalid_argument("correlation_estimate: need at least 2 samples");
    const auto seq = coeff_sequence(profile);
    std::vector<double> val(cfg.samples);
    std::vector<char> bad(cfg.samples, 0);
    parallel_for(cfg.samples, cfg.workers, [&](std::size_t i) {
        const auto s = sample_roots(seq, atom, cfg.root_seed, i);
        bad[i] = s.degenerate;
        if (s.degenerate)
            return;
        const auto p = detail::correlation_pools(s, kind, k, l);
        val[i] = detail::distinct_tuple_sum(p.pts, p.pools, w, w.centers, p.real_slot, 1.0);
    });
    const auto st = detail::make_stat("correlation", val, bad);
    return {k, l, kind, w, st.estimate, st.se, st.samples, st.excluded};
}

struct RotationGap {
    double estimate_base = 0.0;
    double estimate_rotated = 0.0;
    double gap = 0.0;  //!< |base - rotated|
    double se = 0.0;   //!< SE of the paired per-sample difference
    std::size_t samples = 0;
    std::size_t excluded = 0;
};

/*!
 * Compares the complex k-point estimate at centers z_j with the estimate at
 * e^{i theta} z_j using the rotated test function, on the same samples.
 */
inline RotationGap rotation_invariance_check(CoefficientProfile const& profile,
                                             AtomSpec const& atom, CorrelationWindow const& w,
                                             int k, double theta, McConfig const& cfg)
{
    if (!atom.is_complex())
        throw std::invalid_argument("rotation_invariance_check: complex Gaussian atoms required");
    w.validate(static_cast<std::size_t>(std::max(0, k)));
    detail::check_orders(CorrelationKind::complex_points, k, 0, atom, w);
    if (cfg.samples < 2)
        throw std::invalid_argument("rotation_invariance_check: need at least 2 samples");
    const cplx rot = std::polar(1.0, theta);
    const cplx unrot = std::conj(rot);
    std::vector<cplx> rc;
    for (auto c : w.centers)
        rc.push_back(c * rot);
    const auto seq = coeff_sequence(profile);
    std::vector<double> base(cfg.samples), turned(cfg.samples), diff(cfg.samples);
    std::vector<char> bad(cfg.samples, 0);
    parallel_for(cfg.samples, cfg.workers, [&](std::size_t i) {
        const auto s = sample_roots(seq, atom, cfg.root_seed, i);
        bad[i] = s.degenerate;
        if (s.degenerate)
            return;
        const auto p = detail::correlation_pools(s, CorrelationKind::complex_points, k, 0);
        base[i] = detail::distinct_tuple_sum(p.pts, p.pools, w, w.centers, p.real_slot, 1.0);
        turned[i] = detail::distinct_tuple_sum(p.pts, p.pools, w, rc, p.real_slot, unrot);
        diff[i] = base[i] - turned[i];
    });
    const auto b = detail::make_stat("base", base, bad);
    const auto t = detail::make_stat("rotated", turned, bad);
    const auto d = detail::make_stat("diff", diff, bad);
    return {b.estimate, t.estimate, std::abs(d.estimate), d.se, d.samples, d.excluded};
}

//---------------------------------------------------------------------------//
// Probes
//---------------------------------------------------------------------------//
struct RepulsionOptions {
    double delta = 0.05;
    //! Ball radius is gamma * unit in original coordinates; <= 0 means the
    //! microscopic rescale 1e-3 delta.
    double unit = 0.0;
};

struct RepulsionReport {
    std::vector<double> gammas;
    std::vector<Statistic> probability;  //!< P(at least 2 roots in the ball)
    double exponent_mle = 0.0;           //!< fitted exponent of p ~ gamma^beta
    double exponent_ols = 0.0;
    double wall_time = 0.0;
};

/*!
 * Probability of at least two roots in B(x, gamma * unit) for each gamma.
 * Real-coefficient samples are counted by the certified argument principle,
 * falling back to a full solve when the circle passes too close to a root.
 */
inline RepulsionReport repulsion_probe(CoefficientProfile const& profile, AtomSpec const& atom,
                                       double x, std::vector<double> gammas, McConfig const& cfg,
                                       RepulsionOptions const& opt = {})
{
    if (!(opt.delta > 0.0 && opt.delta < 1.0))
        throw std::invalid_argument("repulsion_probe: delta must lie in (0, 1)");
    const double ax = std::abs(x);
    if (ax < 1.0 - 2.0 * opt.delta - 1e-12 || ax > 1.0 - opt.delta + 1e-12)
        throw std::invalid_argument("repulsion_probe: |x| outside [1-2delta, 1-delta]");
    if (gammas.empty())
        throw std::invalid_argument("repulsion_probe: empty gamma list");
    for (double g : gammas)
        if (!(g > 0.0))
            throw std::invalid_argument("repulsion_probe: gamma must be positive");
    if (cfg.samples < 2)
        throw std::invalid_argument("repulsion_probe: need at least 2 samples");
    detail::check_mean_profile(profile, atom);
    detail::Stopwatch sw;
    const double unit = opt.unit > 0.0 ? opt.unit : 1e-3 * opt.delta;
    const auto seq = coeff_sequence(profile);
    const auto G = gammas.size();
    // visit radii from the largest down; a ball with < 2 roots bounds the smaller ones
    std::vector<std::size_t> order(G);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto i, auto j) { return gammas[i] > gammas[j]; });

    std::vector<std::vector<double>> hit(G, std::vector<double>(cfg.samples, 0.0));
    std::vector<char> bad(cfg.samples, 0);
    parallel_for(cfg.samples, cfg.workers, [&](std::size_t i) {
        std::optional<RootSample> full;
        auto solve = [&]() -> RootSample const& {
            if (!full)
                full = sample_roots(seq, atom, cfg.root_seed, i);
            return *full;
        };
        std::vector<double> real_coeffs;
        if (!atom.is_complex())
            real_coeffs = realize_real(seq, atom, detail::coeff_stream(cfg.root_seed, i));
        for (auto g : order) {
            const double r = gammas[g] * unit;
            std::optional<int> c;
            if (!atom.is_complex()) {
                // trim vanishing leading coefficients for the winding count
                std::size_t top = real_coeffs.size();
                while (top > 0 && real_coeffs[top - 1] == 0.0)
                    --top;
                c = count_in_disk_argument(std::span<const double>(real_coeffs.data(), top), x, r);
            }
            if (!c) {
                auto const& s = solve();
                if (s.degenerate) {
                    bad[i] = 1;
                    return;
                }
                c = count_in_set(s, Disk{cplx(x, 0.0), r});
            }
            if (*c < 2)
                break;
            hit[g][i] = 1.0;
        }
    });
    RepulsionReport rep;
    rep.gammas = gammas;
    std::vector<double> counts, probs;
    for (std::size_t g = 0; g < G; ++g) {
        auto st = detail::make_stat("p_ge2", hit[g], bad);
        counts.push_back(st.estimate * static_cast<double>(st.samples));
        probs.push_back(st.estimate);
        rep.probability.push_back(std::move(st));
    }
    rep.exponent_mle = rep.exponent_ols = std::numeric_limits<double>::quiet_NaN();
    if (G >= 2) {
        rep.exponent_mle = power_law_exponent_mle(gammas, counts);
        rep.exponent_ols = power_law_exponent_ols(gammas, probs);
    }
    rep.wall_time = sw.seconds();
    return rep;
}

/*!
 * P(|sum_i a_i xi_i - z| <= radius); every |a_i| must be at least a_min > 0.
 */
inline Statistic anticoncentration_probe(AtomSpec const& atom, std::span<const double> weights,
                                         cplx z, double radius, McConfig const& cfg,
                                         double a_min = 0.0)
{
    if (weights.empty())
        throw std::invalid_argument("anticoncentration_probe: no weights");
    if (!(radius >= 0.0))
        throw std::invalid_argument("anticoncentration_probe: radius must be nonnegative");
    if (cfg.samples < 2)
        throw std::invalid_argument("anticoncentration_probe: need at least 2 samples");
    double amin = std::numeric_limits<double>::infinity();
    for (double a : weights)
        amin = std::min(amin, std::abs(a));
    if (!(amin > 0.0) || amin < a_min)
        throw std::invalid_argument("anticoncentration_probe: weights below the stated lower bound");
    std::vector<double> hit(cfg.samples);
    parallel_for(cfg.samples, cfg.workers, [&](std::size_t i) {
        auto st = detail::coeff_stream(cfg.root_seed, i);
        cplx s = 0.0;
        for (double a : weights)
            s += a * sample_atom(atom, st);
        hit[i] = std::abs(s - z) <= radius ? 1.0 : 0.0;
    });
    std::vector<char> none(cfg.samples, 0);
    return detail::make_stat("p_small_ball", hit, none);
}

}  // namespace randpoly
