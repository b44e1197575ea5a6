#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace randpoly::detail {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Neumaier's variant of Kahan summation.
class CompensatedSum {
  public:
    void add(double x) noexcept
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    CompensatedSum& operator+=(double x) noexcept
    {
        add(x);
        return *this;
    }
    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

//---------------------------------------------------------------------------//
// Double-double arithmetic (error-free transforms). Only what the binomial
// kernels need: add, mul, div by double, and conversion.
//---------------------------------------------------------------------------//
struct DoubleDouble {
    double hi = 0.0;
    double lo = 0.0;

    constexpr DoubleDouble() = default;
    constexpr DoubleDouble(double h) : hi(h) {}
    constexpr DoubleDouble(double h, double l) : hi(h), lo(l) {}

    [[nodiscard]] double to_double() const noexcept { return hi + lo; }
};

inline DoubleDouble two_sum(double a, double b) noexcept
{
    const double s = a + b;
    const double bb = s - a;
    const double err = (a - (s - bb)) + (b - bb);
    return {s, err};
}

inline DoubleDouble quick_two_sum(double a, double b) noexcept
{
    const double s = a + b;
    return {s, b - (s - a)};
}

inline DoubleDouble two_prod(double a, double b) noexcept
{
    const double p = a * b;
    return {p, std::fma(a, b, -p)};
}

inline DoubleDouble operator+(DoubleDouble a, DoubleDouble b) noexcept
{
    DoubleDouble s = two_sum(a.hi, b.hi);
    DoubleDouble t = two_sum(a.lo, b.lo);
    s.lo += t.hi;
    s = quick_two_sum(s.hi, s.lo);
    s.lo += t.lo;
    return quick_two_sum(s.hi, s.lo);
}

inline DoubleDouble operator-(DoubleDouble a) noexcept { return {-a.hi, -a.lo}; }
inline DoubleDouble operator-(DoubleDouble a, DoubleDouble b) noexcept { return a + (-b); }

inline DoubleDouble operator*(DoubleDouble a, DoubleDouble b) noexcept
{
    DoubleDouble p = two_prod(a.hi, b.hi);
    p.lo += a.hi * b.lo + a.lo * b.hi;
    return quick_two_sum(p.hi, p.lo);
}

inline DoubleDouble operator/(DoubleDouble a, DoubleDouble b) noexcept
{
    const double q1 = a.hi / b.hi;
    DoubleDouble r = a - b * DoubleDouble(q1);
    const double q2 = r.hi / b.hi;
    r = r - b * DoubleDouble(q2);
    const double q3 = r.hi / b.hi;
    return quick_two_sum(q1, q2) + DoubleDouble(q3);
}

//---------------------------------------------------------------------------//
// Log-domain helpers
//---------------------------------------------------------------------------//
struct SignedLog {
    int sign = 0;  // -1, 0, +1
    double log_abs = kNegInf;

    [[nodiscard]] double value() const noexcept
    {
        return sign == 0 ? 0.0 : sign * std::exp(log_abs);
    }
};

// Sum of sign_k * exp(log_k) without overflow.
inline SignedLog signed_log_sum(std::span<const int> signs, std::span<const double> logs)
{
    double m = kNegInf;
    for (std::size_t k = 0; k < logs.size(); ++k)
        if (signs[k] != 0)
            m = std::max(m, logs[k]);
    if (m == kNegInf)
        return {};
    CompensatedSum acc;
    for (std::size_t k = 0; k < logs.size(); ++k)
        if (signs[k] != 0)
            acc += signs[k] * std::exp(logs[k] - m);
    const double s = acc.value();
    if (s == 0.0)
        return {};
    return {s > 0 ? 1 : -1, m + std::log(std::abs(s))};
}

// 1/sinh(y)^2 - 1/y^2, accurate near 0.
inline double csch2_minus_inv_sq(double y) noexcept
{
    const double a = std::abs(y);
    if (a < 0.1) {
        const double y2 = y * y;
        // -1/3 + y^2/15 - 2y^4/189 + y^6/675 - 2y^8/10395
        return -1.0 / 3.0 +
               y2 * (1.0 / 15.0 +
                     y2 * (-2.0 / 189.0 + y2 * (1.0 / 675.0 + y2 * (-2.0 / 10395.0))));
    }
    const double s = std::sinh(a);
    return 1.0 / (s * s) - 1.0 / (a * a);
}

inline bool is_integer(double x) noexcept { return std::isfinite(x) && std::floor(x) == x; }

}  // namespace randpoly::detail
