#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace mapexp {

/// Real number with a 64-bit binary exponent: value = f * 2^e, f in [0.5, 1).
///
/// Needed because petal-flower models carry terms like exp(1/p) with p down
/// to 2^-63, far outside double range, and the integral must still cancel
/// such terms exactly.
struct XReal {
    double f = 0.0;
    std::int64_t e = 0;

    XReal() = default;
    explicit XReal(double x) { set(x); }

    static XReal from_parts(double mant, std::int64_t exp2) {
        XReal r;
        if (mant == 0.0 || !std::isfinite(mant)) {
            r.f = mant;
            r.e = 0;
            return r;
        }
        int k = 0;
        r.f = std::frexp(mant, &k);
        r.e = exp2 + k;
        return r;
    }

    /// e^z for arbitrary finite z.
    static XReal exp(double z) {
        if (std::fabs(z) < 700.0) return XReal(std::exp(z));
        const double n2 = z / M_LN2;
        const double k = std::floor(n2);
        const double frac = z - k * M_LN2;
        return from_parts(std::exp(frac), static_cast<std::int64_t>(k));
    }

    void set(double x) {
        if (x == 0.0 || !std::isfinite(x)) {
            f = x;
            e = 0;
            return;
        }
        int k = 0;
        f = std::frexp(x, &k);
        e = k;
    }

    bool is_zero() const { return f == 0.0; }
    bool finite() const { return std::isfinite(f); }
    int sign() const { return f > 0 ? 1 : (f < 0 ? -1 : 0); }

    /// Nearest double, saturating to +-inf or 0.
    double to_double() const {
        if (f == 0.0 || !std::isfinite(f)) return f;
        if (e > 1100) return f > 0 ? HUGE_VAL : -HUGE_VAL;
        if (e < -1100) return 0.0;
        return std::ldexp(f, static_cast<int>(e));
    }

    /// log|x|; -inf for zero.
    double log_abs() const {
        if (f == 0.0) return -HUGE_VAL;
        return std::log(std::fabs(f)) + static_cast<double>(e) * M_LN2;
    }

    XReal operator-() const {
        XReal r = *this;
        r.f = -r.f;
        return r;
    }
    XReal abs() const {
        XReal r = *this;
        r.f = std::fabs(r.f);
        return r;
    }

    friend XReal operator*(const XReal& a, const XReal& b) { return from_parts(a.f * b.f, a.e + b.e); }
    friend XReal operator*(const XReal& a, double b) { return a * XReal(b); }
    friend XReal operator+(const XReal& a, const XReal& b);
    friend XReal operator-(const XReal& a, const XReal& b) { return a + (-b); }

    /// Compare magnitudes.
    friend bool abs_less(const XReal& a, const XReal& b) {
        if (a.f == 0.0) return b.f != 0.0;
        if (b.f == 0.0) return false;
        if (a.e != b.e) return a.e < b.e;
        return std::fabs(a.f) < std::fabs(b.f);
    }
    friend bool operator<(const XReal& a, const XReal& b) {
        const int sa = a.sign(), sb = b.sign();
        if (sa != sb) return sa < sb;
        if (sa >= 0) return abs_less(a, b);
        return abs_less(b, a);
    }
    friend bool operator==(const XReal& a, const XReal& b) { return a.f == b.f && (a.f == 0.0 || a.e == b.e); }

    std::string str() const;
};

/// Error-free transformation: a + b == s + err exactly, s = fl(a + b).
void two_sum(const XReal& a, const XReal& b, XReal& s, XReal& err);

/// Exactly accumulated sum of XReal / double terms (Shewchuk partials).
///
/// Runs on plain doubles while every term is moderate and switches to
/// XReal partials the first time a term leaves [2^-900, 2^900].
/// Terms below 2^-200 of the leading partial are dropped.
class ExactSum {
public:
    void add(double x);
    void add(const XReal& x);
    XReal value() const;
    double to_double() const { return value().to_double(); }
    void clear() {
        dparts_.clear();
        xparts_.clear();
        wide_ = false;
    }

private:
    void widen();
    std::vector<double> dparts_;
    std::vector<XReal> xparts_;
    bool wide_ = false;
};

/// Scalar stored as m * e^L; L is nonzero only for astronomically large
/// petal-family coefficients.
struct Mag {
    double m = 0.0;
    double L = 0.0;

    Mag() = default;
    Mag(double v) : m(v) {}  // NOLINT(google-explicit-constructor)
    Mag(double mant, double logscale) : m(mant), L(logscale) {}

    bool is_zero() const { return m == 0.0; }
    XReal x() const { return L == 0.0 ? XReal(m) : XReal::exp(L) * m; }
    /// Value times e^{-xi}.
    XReal scaled(double xi) const {
        if (m == 0.0) return XReal();
        const double z = L - xi;
        if (std::fabs(z) < 700.0) return XReal(m * std::exp(z));
        return XReal::exp(z) * m;
    }
    double value() const { return L == 0.0 ? m : x().to_double(); }
    Mag operator-() const { return {-m, L}; }
    Mag operator*(double s) const { return {m * s, L}; }
};

}  // namespace mapexp
