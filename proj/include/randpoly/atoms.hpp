#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>

#include "randpoly/detail/numerics.hpp"

namespace randpoly {

//---------------------------------------------------------------------------//
/*!
 * Counter-based random stream.
 *
 * A stream is identified by a 64-bit key derived by hashing the root seed
 * with a path of indices (experiment, sample, coefficient, ...). Draws are a
 * keyed hash of a counter, so the value at a given path and position never
 * depends on which thread produced it or in which order.
 */
class SeedStream {
  public:
    explicit SeedStream(std::uint64_t root_seed) noexcept : key_(mix(root_seed ^ kRootSalt)) {}

    //! Child stream at index i below this one.
    [[nodiscard]] SeedStream child(std::uint64_t i) const noexcept
    {
        SeedStream s(*this);
        s.key_ = mix(key_ + kGolden * (i + 1) + kChildSalt);
        s.counter_ = 0;
        return s;
    }

    [[nodiscard]] SeedStream at(std::initializer_list<std::uint64_t> path) const noexcept
    {
        SeedStream s(*this);
        for (auto i : path)
            s = s.child(i);
        return s;
    }

    std::uint64_t next_u64() noexcept
    {
        const std::uint64_t c = counter_++;
        return mix(mix(key_ ^ (kGolden * (c + 1))) + c);
    }

    //! Uniform on the open interval (0, 1).
    double next_open01() noexcept
    {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    [[nodiscard]] std::uint64_t key() const noexcept { return key_; }

    static std::uint64_t mix(std::uint64_t z) noexcept
    {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

  private:
    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;
    static constexpr std::uint64_t kRootSalt = 0x243f6a8885a308d3ull;
    static constexpr std::uint64_t kChildSalt = 0x13198a2e03707344ull;

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

//! Parse a seed given as decimal or 0x-prefixed hex.
inline std::uint64_t parse_seed(std::string const& s)
{
    if (s.empty())
        throw std::invalid_argument("empty seed");
    std::size_t pos = 0;
    std::uint64_t v = 0;
    try {
        if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X'))
            v = std::stoull(s.substr(2), &pos, 16), pos += 2;
        else
            v = std::stoull(s, &pos, 10);
    } catch (std::exception const&) {
        throw std::invalid_argument("invalid seed: " + s);
    }
    if (pos != s.size() || s[0] == '-')
        throw std::invalid_argument("invalid seed: " + s);
    return v;
}

//---------------------------------------------------------------------------//
// Atom distributions (all unit variance)
//---------------------------------------------------------------------------//
enum class AtomKind { gaussian, rademacher, uniform_unitvar, complex_gaussian };

struct AtomSpec {
    AtomKind kind = AtomKind::gaussian;
    double mean = 0.0;  //!< gaussian only

    static AtomSpec gaussian(double mu = 0.0) { return {AtomKind::gaussian, mu}; }
    static AtomSpec rademacher() { return {AtomKind::rademacher, 0.0}; }
    static AtomSpec uniform_unitvar() { return {AtomKind::uniform_unitvar, 0.0}; }
    static AtomSpec complex_gaussian() { return {AtomKind::complex_gaussian, 0.0}; }

    [[nodiscard]] bool is_complex() const noexcept { return kind == AtomKind::complex_gaussian; }

    [[nodiscard]] std::string id() const
    {
        switch (kind) {
        case AtomKind::gaussian:
            return mean == 0.0 ? "gaussian" : "gaussian:mu=" + std::to_string(mean);
        case AtomKind::rademacher: return "rademacher";
        case AtomKind::uniform_unitvar: return "uniform";
        case AtomKind::complex_gaussian: return "complex_gaussian";
        }
        return "?";
    }
};

/*!
 * One draw. Real kinds return a value with zero imaginary part.
 *
 * Each draw consumes exactly two 64-bit words so stream positions stay
 * aligned across atom kinds.
 */
inline std::complex<double> sample_atom(AtomSpec const& spec, SeedStream& stream)
{
    const double u1 = stream.next_open01();
    const double u2 = stream.next_open01();
    switch (spec.kind) {
    case AtomKind::gaussian:
        return {spec.mean + std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * detail::kPi * u2), 0.0};
    case AtomKind::rademacher: return {u1 < 0.5 ? -1.0 : 1.0, 0.0};
    case AtomKind::uniform_unitvar: return {std::sqrt(3.0) * (2.0 * u1 - 1.0), 0.0};
    case AtomKind::complex_gaussian: {
        const double r = std::sqrt(-std::log(u1));
        const double th = 2.0 * detail::kPi * u2;
        return {r * std::cos(th), r * std::sin(th)};
    }
    }
    return {};
}

inline double sample_real(AtomSpec const& spec, SeedStream& stream)
{
    if (spec.is_complex())
        throw std::invalid_argument("sample_real: complex atom");
    return sample_atom(spec, stream).real();
}

//! Exact E[xi^order] for real atoms, order in 1..4.
inline double moment(AtomSpec const& spec, int order)
{
    if (order < 1 || order > 4)
        throw std::invalid_argument("moment: order must be in 1..4");
    switch (spec.kind) {
    case AtomKind::gaussian: {
        const double m = spec.mean;
        const double m2 = m * m;
        switch (order) {
        case 1: return m;
        case 2: return m2 + 1.0;
        case 3: return m * (m2 + 3.0);
        default: return m2 * m2 + 6.0 * m2 + 3.0;
        }
    }
    case AtomKind::rademacher: return order % 2 == 0 ? 1.0 : 0.0;
    case AtomKind::uniform_unitvar:
        // a^order / (order + 1) for even order, a = sqrt(3)
        return order == 2 ? 1.0 : order == 4 ? 9.0 / 5.0 : 0.0;
    case AtomKind::complex_gaussian:
        throw std::invalid_argument("moment: defined for real atoms only");
    }
    return 0.0;
}

//! E|xi|^3, the 2+eps moment (eps = 1) recorded in reports.
inline double third_absolute_moment(AtomSpec const& spec)
{
    switch (spec.kind) {
    case AtomKind::gaussian: {
        const double m = spec.mean;
        return (m * m + 2.0) * std::sqrt(2.0 / detail::kPi) * std::exp(-0.5 * m * m) +
               m * (m * m + 3.0) * std::erf(m / std::sqrt(2.0));
    }
    case AtomKind::rademacher: return 1.0;
    case AtomKind::uniform_unitvar: return 3.0 * std::sqrt(3.0) / 4.0;
    case AtomKind::complex_gaussian: return 0.75 * std::sqrt(detail::kPi);
    }
    return 0.0;
}

}  // namespace randpoly
