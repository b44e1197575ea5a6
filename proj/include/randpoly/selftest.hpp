#pragma once

// Fast acceptance subset and frozen-constant fixture handling.

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "randpoly/density_engine.hpp"
#include "randpoly/mc_lab.hpp"
#include "randpoly/root_engine.hpp"
#include "randpoly/variance_kernel.hpp"

namespace randpoly::selftest {

struct CriterionResult {
    std::string id;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

//! Headroom applied to every frozen constant.
inline constexpr double kHeadroom = 1.5;

//---------------------------------------------------------------------------//
// Frozen constants
//---------------------------------------------------------------------------//
struct FrozenConstants {
    double tail_bound_C = 0.0;
    double reciprocal_bound_C = 0.0;
    double anticoncentration_D = 0.0;
};

inline FrozenConstants parse_fixture(nlohmann::json const& j)
{
    auto positive = [](nlohmann::json const& node, char const* key) {
        const double v = node.at(key).get<double>();
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument(std::string("fixture constant ") + key + " must be positive");
        return v;
    };
    FrozenConstants c;
    c.tail_bound_C = positive(j.at("tail_bound"), "C");
    c.reciprocal_bound_C = positive(j.at("reciprocal_bound"), "C");
    c.anticoncentration_D = positive(j.at("anticoncentration"), "D");
    return c;
}

inline nlohmann::json read_json_file(std::string const& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    return nlohmann::json::parse(in);
}

#ifdef RANDPOLY_FIXTURE_DIR
inline std::string default_fixture_path()
{
    return std::string(RANDPOLY_FIXTURE_DIR) + "/frozen_constants.json";
}
#else
inline std::string default_fixture_path() { return "tests/fixtures/frozen_constants.json"; }
#endif

/*!
 * sup over x in [0, 1 - 2/n] of |f_{n,L}(x)(1-x)^L - 1| / ((1 + [n(1-x)]^{L-1}) x^{n+1}).
 *
 * Grid points where the bound itself falls below 1e-9 are skipped: there the
 * deviation is below the resolution of f (1-x)^L in double precision.
 */
inline double tail_bound_ratio(int n, double L, int points = 200)
{
    const double s_lo = 2.0;
    const double s_hi = std::min<double>(n, 40.0);
    double worst = 0.0;
    for (int i = 0; i <= points; ++i) {
        const double s = s_lo * std::exp(std::log(s_hi / s_lo) * i / points);
        const double x = 1.0 - s / n;
        const double rhs = (1.0 + std::pow(s, L - 1.0)) * std::pow(x, n + 1.0);
        if (rhs < 1e-9)
            continue;
        const double lhs = std::abs(f_binomial(n, L, x) * std::pow(1.0 - x, L) - 1.0);
        worst = std::max(worst, lhs / rhs);
    }
    return worst;
}

//! sup over x in [1/2, 1 - 2/n] of |f~_{n,L}(x)(1-x) - 1| n (1-x).
inline double reciprocal_bound_ratio(int n, double L, int points = 200)
{
    double worst = 0.0;
    const double hi = 1.0 - 2.0 / n;
    for (int i = 0; i <= points; ++i) {
        const double x = 0.5 + (hi - 0.5) * i / points;
        const double dev = std::abs(f_reciprocal(n, L, x) * (1.0 - x) - 1.0);
        worst = std::max(worst, dev * n * (1.0 - x));
    }
    return worst;
}

//! P(|sum of n Rademacher signs| <= 1/2) sqrt(n) by Monte Carlo.
inline Statistic anticoncentration_scaled(int n, McConfig const& cfg)
{
    const std::vector<double> w(n, 1.0);
    auto st = anticoncentration_probe(AtomSpec::rademacher(), w, 0.0, 0.5, cfg);
    st.estimate *= std::sqrt(static_cast<double>(n));
    st.se *= std::sqrt(static_cast<double>(n));
    return st;
}

inline const std::vector<double>& bound_exponents()
{
    static const std::vector<double> L = {1.0, 2.0, 4.0};
    return L;
}

//! Calibration run (seed 0, smallest n) producing the fixture document.
inline nlohmann::json calibrate_fixture(unsigned workers = 1)
{
    const int n_cal = 256;
    double tail = 0.0, recip = 0.0;
    for (double L : bound_exponents()) {
        tail = std::max(tail, tail_bound_ratio(n_cal, L));
        recip = std::max(recip, reciprocal_bound_ratio(n_cal, L));
    }
    McConfig cfg{20000, 0, workers};
    const int n_anti = 16;
    const auto D = anticoncentration_scaled(n_anti, cfg);
    nlohmann::json j;
    j["tail_bound"] = {{"C", tail},
                       {"c", 2},
                       {"calibration", {{"n", n_cal}, {"L", bound_exponents()}}}};
    j["reciprocal_bound"] = {{"C", recip},
                             {"c", 2},
                             {"calibration", {{"n", n_cal}, {"L", bound_exponents()}}}};
    j["anticoncentration"] = {
        {"D", D.estimate},
        {"calibration",
         {{"n", n_anti}, {"samples", cfg.samples}, {"seed", cfg.root_seed}, {"radius", 0.5}}}};
    j["headroom"] = kHeadroom;
    return j;
}

//---------------------------------------------------------------------------//
// Criteria
//---------------------------------------------------------------------------//
namespace detail {

inline std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

inline CriterionResult timed(std::string id, std::string name,
                             std::function<bool(std::string&)> const& body)
{
    CriterionResult r{std::move(id), std::move(name), false, {}, 0.0};
    const auto t0 = std::chrono::steady_clock::now();
    try {
        r.pass = body(r.detail);
    } catch (std::exception const& e) {
        r.pass = false;
        r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

// Recursion f_{n,L} = f_{n,L-1}/(1-x) - b_{n,L} x^{n+1}/(1-x), evaluated in double-double.
inline double binomial_recursion_error(int n, double L, double x)
{
    using randpoly::detail::DoubleDouble;
    const DoubleDouble lhs(f_binomial(n, L, x));
    const DoubleDouble prev = randpoly::detail::f_binomial_dd(n, L - 1.0, x);
    DoubleDouble b(1.0), xp(x);
    for (int k = 1; k <= n; ++k) {
        b = b * DoubleDouble(L + (k - 1)) / DoubleDouble(static_cast<double>(k));
        xp = xp * DoubleDouble(x);
    }
    const DoubleDouble om = DoubleDouble(1.0) - DoubleDouble(x);
    const DoubleDouble rhs = prev / om - b * xp / om;
    return std::abs((lhs - rhs).to_double()) / std::abs(lhs.to_double());
}

// Recursion f~_{n,L} = 1/(1-x) - x/(1-x) h with h = sum_k b_{n-k,L-1} x^k / b_{n,L};
// h = (L-1)/(L+n-1) f~_{n,L-1} except at L = 1, where h = x^n.
inline double reciprocal_recursion_error(int n, double L, double x)
{
    using randpoly::detail::DoubleDouble;
    const DoubleDouble lhs(f_reciprocal(n, L, x));
    DoubleDouble h;
    if (L == 1.0) {
        h = DoubleDouble(1.0);
        for (int k = 0; k < n; ++k)
            h = h * DoubleDouble(x);
    } else {
        h = DoubleDouble(L - 1.0) / DoubleDouble(L + n - 1.0) *
            randpoly::detail::f_reciprocal_dd(n, L - 1.0, x);
    }
    const DoubleDouble om = DoubleDouble(1.0) - DoubleDouble(x);
    const DoubleDouble rhs = DoubleDouble(1.0) / om - DoubleDouble(x) / om * h;
    return std::abs((lhs - rhs).to_double()) / std::abs(lhs.to_double());
}

}  // namespace detail

inline CriterionResult criterion_linear_count(unsigned workers)
{
    return detail::timed("1", "exact linear count", [&](std::string& d) {
        const auto q = expected_count_ek(VarianceKernel::from_profile(CoefficientProfile::kac(1)),
                                         -std::numeric_limits<double>::infinity(),
                                         std::numeric_limits<double>::infinity());
        const auto r = mc_expected_count(CoefficientProfile::kac(1), AtomSpec::gaussian(),
                                         {10000, 1, workers});
        auto const& c = r.at("count");
        d = "quadrature=" + detail::fmt(q.value) + " mc_mean=" + detail::fmt(c.estimate) +
            " mc_se=" + detail::fmt(c.se) + " excluded=" + std::to_string(c.excluded);
        return std::abs(q.value - 1.0) <= 1e-9 && c.estimate == 1.0 && c.se == 0.0 &&
               c.excluded == 0 && c.samples == 10000;
    });
}

inline CriterionResult criterion_density_at_zero()
{
    return detail::timed("2", "density at zero is 1/pi", [&](std::string& d) {
        double worst = 0.0;
        for (int n : {1, 2, 8, 64, 1024}) {
            const auto k = VarianceKernel::from_profile(CoefficientProfile::kac(n));
            worst = std::max(worst, std::abs(density_ek(k, 0.0) - 1.0 / randpoly::detail::kPi));
        }
        d = "max_abs_err=" + detail::fmt(worst);
        return worst <= 1e-12;
    });
}

inline CriterionResult criterion_density_equivalence()
{
    return detail::timed("3", "density form equivalence", [&](std::string& d) {
        std::vector<double> grid;
        for (int i = 0; i < 200; ++i)
            grid.push_back(-2.0 + 4.0 * (i + 0.5) / 200.0);
        double worst_pair = 0.0;
        for (auto const& base : {CoefficientProfile::kac(1), CoefficientProfile::hyperbolic(4.0, 1),
                                 CoefficientProfile::kac_derivative(1, 2)}) {
            for (int n : {2, 7, 64, 200, 512}) {
                const auto k = VarianceKernel::from_profile(base.with_degree(n));
                for (double t : grid) {
                    const double a = density_ek(k, t);
                    const double b = density_pairwise(k, t);
                    worst_pair = std::max(worst_pair, std::abs(a - b) / std::abs(b));
                }
            }
        }
        double worst_closed = 0.0;
        std::vector<double> cgrid;
        for (int i = 0; i <= 400; ++i) {
            const double t = -3.0 + 6.0 * i / 400.0;
            if (std::abs(std::abs(t) - 1.0) > 1e-3)
                cgrid.push_back(t);
        }
        for (double t : {0.998, 0.9989, 1.0011, 1.002, -0.998, -1.0011, 1e-3, 30.0})
            cgrid.push_back(t);
        for (int n : {1, 2, 3, 16, 100, 512, 1000, 4096}) {
            const auto k = VarianceKernel::from_profile(CoefficientProfile::kac(n));
            for (double t : cgrid) {
                const double a = kac_density_closed(n, t);
                const double b = density_ek(k, t);
                worst_closed = std::max(worst_closed, std::abs(a - b) / b);
            }
        }
        d = "logvar_vs_pairwise_rel=" + detail::fmt(worst_pair) +
            " closed_vs_logvar_rel=" + detail::fmt(worst_closed);
        return worst_pair <= 1e-10 && worst_closed <= 1e-8;
    });
}

inline CriterionResult criterion_reciprocal_identity(unsigned workers)
{
    return detail::timed("7", "reciprocal identity per sample", [&](std::string& d) {
        const auto seq = coeff_sequence(CoefficientProfile::kac(32));
        const std::size_t samples = 1000;
        std::vector<char> ok(samples, 0), bad(samples, 0);
        parallel_for(samples, workers, [&](std::size_t i) {
            const auto a = realize_real(seq, AtomSpec::gaussian(),
                                        randpoly::detail::coeff_stream(3, i));
            auto P = find_roots(std::span<const double>(a), randpoly::detail::jitter_stream(3, i));
            classify_real(P);
            const auto q = reciprocal_transform(std::span<const double>(a));
            auto Q = find_roots(std::span<const double>(q.coeffs),
                                randpoly::detail::jitter_stream(3, i));
            classify_real(Q);
            bad[i] = P.degenerate || Q.degenerate;
            ok[i] = count_in_set(Q, Interval{0.5, 0.9}) == count_in_set(P, Interval{1 / 0.9, 2.0});
        });
        std::size_t mism = 0, deg = 0;
        for (std::size_t i = 0; i < samples; ++i) {
            mism += !ok[i];
            deg += bad[i];
        }
        d = "mismatches=" + std::to_string(mism) + " degenerate=" + std::to_string(deg);
        return mism == 0 && deg == 0;
    });
}

inline CriterionResult criterion_recursions()
{
    return detail::timed("8", "recursion identities", [&](std::string& d) {
        double wf = 0.0, wr = 0.0;
        for (int n : {0, 1, 2, 3, 5, 10, 25, 50, 100, 150, 200})
            for (double L : {0.5, 1.0, 2.0, 3.5, 7.0})
                for (double x : {-0.9, -0.5, 0.3, 0.9, 0.999}) {
                    wf = std::max(wf, detail::binomial_recursion_error(n, L, x));
                    wr = std::max(wr, detail::reciprocal_recursion_error(n, L, x));
                }
        d = "binomial_rel=" + detail::fmt(wf) + " reciprocal_rel=" + detail::fmt(wr);
        return wf <= 1e-11 && wr <= 1e-11;
    });
}

inline CriterionResult criterion_root_invariants(unsigned workers)
{
    return detail::timed("11", "root-engine invariants", [&](std::string& d) {
        const std::vector<CoefficientProfile> profiles = {CoefficientProfile::kac(1),
                                                          CoefficientProfile::hyperbolic(4.0, 1),
                                                          CoefficientProfile::kac_derivative(1, 2)};
        const std::vector<AtomSpec> atoms = {AtomSpec::gaussian(), AtomSpec::rademacher(),
                                             AtomSpec::uniform_unitvar()};
        const std::vector<int> ns = {16, 64};
        const std::size_t per_cell = 56;  // 18 cells, 1008 samples
        std::size_t total = 0, failures = 0, degenerate = 0;
        std::string first;
        for (std::size_t pi = 0; pi < profiles.size(); ++pi)
            for (std::size_t ai = 0; ai < atoms.size(); ++ai)
                for (int n : ns) {
                    auto prof = profiles[pi].with_degree(n + (profiles[pi].kind == ProfileKind::kac_derivative ? 1 : 0));
                    const auto seq = coeff_sequence(prof);
                    std::vector<std::string> why(per_cell);
                    std::vector<char> deg(per_cell, 0);
                    const std::uint64_t seed = 100 + 10 * pi + ai;
                    parallel_for(per_cell, workers, [&](std::size_t i) {
                        const auto s = sample_roots(seq, atoms[ai], seed, i);
                        deg[i] = s.degenerate;
                        if (s.degenerate)
                            return;
                        if (static_cast<int>(s.roots.size()) != s.effective_degree)
                            why[i] = "root count";
                        else if ((s.effective_degree - static_cast<int>(s.real_roots.size())) % 2 != 0)
                            why[i] = "parity";
                        else if (s.real_roots.size() + 2 * s.pairs.size() !=
                                 static_cast<std::size_t>(s.effective_degree))
                            why[i] = "partition";
                        for (auto const& pr : s.pairs)
                            if (std::abs(pr.second - std::conj(pr.first)) > 1e-6 * (1.0 + std::abs(pr.first)))
                                why[i] = "pairing";
                        for (double r : s.residuals)
                            if (!(r <= 1e-10))
                                why[i] = "residual";
                        const int m = s.effective_degree;
                        if (m >= 1) {
                            cplx sum = 0.0;
                            for (auto z : s.roots)
                                sum += z;
                            const cplx vieta = -s.coeffs[m - 1] / s.coeffs[m];
                            if (std::abs(sum - vieta) > 1e-8 * (1.0 + std::abs(sum)))
                                why[i] = "vieta";
                        }
                    });
                    for (std::size_t i = 0; i < per_cell; ++i) {
                        ++total;
                        degenerate += deg[i];
                        if (!why[i].empty()) {
                            ++failures;
                            if (first.empty())
                                first = prof.id() + "/" + atoms[ai].id() + "/n=" +
                                        std::to_string(n) + ": " + why[i];
                        }
                    }
                }
        d = "samples=" + std::to_string(total) + " failures=" + std::to_string(failures) +
            " degenerate=" + std::to_string(degenerate) + (first.empty() ? "" : " first=" + first);
        return failures == 0 && degenerate * 1000 < total;
    });
}

inline CriterionResult criterion_reproducibility()
{
    return detail::timed("12", "worker-count reproducibility", [&](std::string& d) {
        const auto prof = CoefficientProfile::kac(48);
        bool same = true;
        for (unsigned w : {2u, 3u, 5u}) {
            const auto a = mc_expected_count(prof, AtomSpec::rademacher(), {300, 0xabcdef, 1});
            const auto b = mc_expected_count(prof, AtomSpec::rademacher(), {300, 0xabcdef, w});
            same = same && a.at("count").estimate == b.at("count").estimate &&
                   a.at("count").se == b.at("count").se;
            const auto va = mc_variance_count(prof, AtomSpec::gaussian(), {200, 5, 1});
            const auto vb = mc_variance_count(prof, AtomSpec::gaussian(), {200, 5, w});
            same = same && va.at("variance").estimate == vb.at("variance").estimate &&
                   va.at("variance").se == vb.at("variance").se;
            RepulsionOptions ro;
            ro.delta = 0.03;
            ro.unit = 1.0;
            const auto ra = repulsion_probe(prof, AtomSpec::gaussian(), 0.97, {0.05, 0.02}, {400, 9, 1}, ro);
            const auto rb = repulsion_probe(prof, AtomSpec::gaussian(), 0.97, {0.05, 0.02}, {400, 9, w}, ro);
            for (std::size_t g = 0; g < 2; ++g)
                same = same && ra.probability[g].estimate == rb.probability[g].estimate;
        }
        d = same ? "bit-identical across workers {1,2,3,5}" : "outputs differ across worker counts";
        return same;
    });
}

//! Frozen-constant checks; a missing or corrupted fixture fails the named check.
inline std::vector<CriterionResult> fixture_checks(std::string const& fixture_path, unsigned workers)
{
    std::vector<CriterionResult> out;
    FrozenConstants fc;
    std::string load_error;
    try {
        fc = parse_fixture(read_json_file(fixture_path));
    } catch (std::exception const& e) {
        load_error = e.what();
    }
    out.push_back(detail::timed("F0", "frozen-constant fixture loads", [&](std::string& d) {
        d = load_error.empty() ? fixture_path : load_error;
        return load_error.empty();
    }));
    out.push_back(detail::timed("F1", "frozen constant: tail bound", [&](std::string& d) {
        if (!load_error.empty()) {
            d = "fixture unavailable";
            return false;
        }
        double worst = 0.0;
        for (int n : {256, 512, 1024})
            for (double L : bound_exponents())
                worst = std::max(worst, tail_bound_ratio(n, L));
        d = "max_ratio=" + detail::fmt(worst) + " limit=" + detail::fmt(kHeadroom * fc.tail_bound_C);
        return worst <= kHeadroom * fc.tail_bound_C;
    }));
    out.push_back(detail::timed("F2", "frozen constant: reciprocal bound", [&](std::string& d) {
        if (!load_error.empty()) {
            d = "fixture unavailable";
            return false;
        }
        double worst = 0.0;
        for (int n : {256, 512, 1024})
            for (double L : bound_exponents())
                worst = std::max(worst, reciprocal_bound_ratio(n, L));
        d = "max_ratio=" + detail::fmt(worst) +
            " limit=" + detail::fmt(kHeadroom * fc.reciprocal_bound_C);
        return worst <= kHeadroom * fc.reciprocal_bound_C;
    }));
    out.push_back(detail::timed("F3", "frozen constant: anti-concentration", [&](std::string& d) {
        if (!load_error.empty()) {
            d = "fixture unavailable";
            return false;
        }
        double worst = 0.0;
        for (int n : {16, 64})
            worst = std::max(worst, anticoncentration_scaled(n, {4000, 11, workers}).estimate);
        d = "max_scaled=" + detail::fmt(worst) +
            " limit=" + detail::fmt(kHeadroom * fc.anticoncentration_D);
        return worst <= kHeadroom * fc.anticoncentration_D;
    }));
    return out;
}

//! The fast subset: criteria 1, 2, 3, 7, 8, 11, 12 plus the fixture checks.
inline std::vector<CriterionResult> run_fast(std::string const& fixture_path, unsigned workers)
{
    std::vector<CriterionResult> out;
    out.push_back(criterion_linear_count(workers));
    out.push_back(criterion_density_at_zero());
    out.push_back(criterion_density_equivalence());
    out.push_back(criterion_reciprocal_identity(workers));
    out.push_back(criterion_recursions());
    out.push_back(criterion_root_invariants(workers));
    out.push_back(criterion_reproducibility());
    for (auto& r : fixture_checks(fixture_path, workers))
        out.push_back(std::move(r));
    return out;
}

}  // namespace randpoly::selftest
