#include "mapexp/xreal.hpp"

#include <cstdio>

namespace mapexp {

namespace {

inline void knuth(double a, double b, double& s, double& err) {
    s = a + b;
    const double bb = s - a;
    err = (a - (s - bb)) + (b - bb);
}

inline bool moderate(double x) {
    const double ax = std::fabs(x);
    return x == 0.0 || (ax >= 0x1p-900 && ax <= 0x1p900);
}

}  // namespace

void two_sum(const XReal& a, const XReal& b, XReal& s, XReal& err) {
    if (b.f == 0.0) {
        s = a;
        err = XReal();
        return;
    }
    if (a.f == 0.0) {
        s = b;
        err = XReal();
        return;
    }
    // b entirely below half an ulp of a (or vice versa): nothing to round.
    if (a.e - b.e > 60) {
        s = a;
        err = b;
        return;
    }
    if (b.e - a.e > 60) {
        s = b;
        err = a;
        return;
    }
    const std::int64_t top = a.e > b.e ? a.e : b.e;
    const double as = std::ldexp(a.f, static_cast<int>(a.e - top));
    const double bs = std::ldexp(b.f, static_cast<int>(b.e - top));
    double hs = 0, he = 0;
    knuth(as, bs, hs, he);
    s = XReal::from_parts(hs, top);
    err = XReal::from_parts(he, top);
}

XReal operator+(const XReal& a, const XReal& b) {
    XReal s, e;
    two_sum(a, b, s, e);
    return s;
}

std::string XReal::str() const {
    if (f == 0.0 || !std::isfinite(f)) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", f);
        return buf;
    }
    if (e > -1000 && e < 1000) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", to_double());
        return buf;
    }
    const double l10 = log_abs() / M_LN10;
    const double ex = std::floor(l10);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%.15fe%+.0f", f < 0 ? "-" : "", std::pow(10.0, l10 - ex), ex);
    return buf;
}

void ExactSum::widen() {
    xparts_.clear();
    for (double d : dparts_) xparts_.emplace_back(d);
    dparts_.clear();
    wide_ = true;
}

void ExactSum::add(double x) {
    if (x == 0.0) return;
    if (!wide_ && !dparts_.empty() && std::fabs(x) < 0x1p-200 * std::fabs(dparts_.back())) return;
    if (!wide_ && moderate(x)) {
        std::size_t i = 0;
        for (double y : dparts_) {
            double hi = 0, lo = 0;
            knuth(x, y, hi, lo);
            if (lo != 0.0) dparts_[i++] = lo;
            x = hi;
        }
        dparts_.resize(i);
        dparts_.push_back(x);
        return;
    }
    add(XReal(x));
}

void ExactSum::add(const XReal& xin) {
    if (xin.is_zero()) return;
    if (!wide_) {
        const double d = xin.to_double();
        if (xin.e > -850 && xin.e < 850 && moderate(d)) {
            add(d);
            return;
        }
        widen();
    }
    if (!xparts_.empty() && xparts_.back().e - xin.e > 200) return;
    XReal x = xin;
    std::size_t i = 0;
    for (const XReal& y : xparts_) {
        XReal hi, lo;
        two_sum(x, y, hi, lo);
        if (!lo.is_zero()) xparts_[i++] = lo;
        x = hi;
    }
    xparts_.resize(i);
    xparts_.push_back(x);
}

XReal ExactSum::value() const {
    if (!wide_) {
        double s = 0.0;
        for (double d : dparts_) s += d;
        return XReal(s);
    }
    XReal s;
    for (const XReal& p : xparts_) s = s + p;
    return s;
}

}  // namespace mapexp
