#pragma once

#include <functional>
#include <random>
#include <vector>

#include "mapexp/xreal.hpp"

namespace mapexp {

using Rng = std::mt19937_64;

/// Univariate parametric law.
///
/// Point(a) | Normal(mean a, sd b) | Exponential(rate a) | Pareto(scale a, alpha b)
/// | LogPareto(scale a, alpha b): |X| = exp(P) with P ~ Pareto(a, b).
/// The last three are one-sided; `sign` flips them onto the negative axis.
struct Marginal {
    enum class Kind { Point, Normal, Exponential, Pareto, LogPareto };
    Kind kind = Kind::Point;
    double a = 0.0;
    double b = 0.0;
    double sign = 1.0;

    static Marginal point(double v) { return {Kind::Point, v, 0.0, 1.0}; }
    static Marginal normal(double m, double s) { return {Kind::Normal, m, s, 1.0}; }
    static Marginal exponential(double rate, double sgn = 1.0) { return {Kind::Exponential, rate, 0.0, sgn}; }
    static Marginal pareto(double xm, double alpha, double sgn = 1.0) { return {Kind::Pareto, xm, alpha, sgn}; }
    static Marginal logpareto(double xm, double alpha, double sgn = 1.0) {
        return {Kind::LogPareto, xm, alpha, sgn};
    }

    Mag sample(Rng& rng) const;
    bool is_zero() const { return kind == Kind::Point && a == 0.0; }

    /// P(X <= x), P(X >= x) and P(X > x).
    double cdf(double x) const;
    double prob_ge(double x) const;
    double tail(double x) const { return 1.0 - cdf(x); }
    /// P(log|X| > u).
    double tail_log_abs(double u) const;
    /// E[X; lo <= X < hi] and E[X^2; lo <= X < hi]; +-inf when divergent.
    double partial_mean(double lo, double hi) const;
    double partial_second(double lo, double hi) const;
    double mean() const { return partial_mean(-HUGE_VAL, HUGE_VAL); }
    /// E[h(X)] by quadrature over the quantile function (atoms exact).
    double expect(const std::function<double(double)>& h) const;
    double quantile(double u) const;
    std::string describe() const;
};

/// Bivariate jump law for (dxi, deta).
struct Atom {
    double p = 1.0;
    double x = 0.0;
    Mag y;
};

struct BivLaw {
    enum class Kind { Zero, Atoms, Curve, Indep };
    /// Restriction of the eta coordinate, used by the E1/E2 split.
    enum class YPart { All, Small, Big, None };

    Kind kind = Kind::Zero;
    std::vector<Atom> atoms;
    double ci = 0.0, cj = 0.0;  // curve y = ci - cj e^{-x}
    Marginal mx, my;
    YPart ypart = YPart::All;

    static BivLaw zero() { return {}; }
    static BivLaw atom(double x, Mag y) {
        BivLaw l;
        l.kind = Kind::Atoms;
        l.atoms.push_back({1.0, x, y});
        return l;
    }
    static BivLaw curve(double ci, double cj, Marginal x) {
        BivLaw l;
        l.kind = Kind::Curve;
        l.ci = ci;
        l.cj = cj;
        l.mx = x;
        return l;
    }
    static BivLaw indep(Marginal x, Marginal y) {
        BivLaw l;
        l.kind = Kind::Indep;
        l.mx = x;
        l.my = y;
        return l;
    }

    void sample(Rng& rng, double& dx, Mag& dy) const;

    bool xi_zero() const;
    bool eta_zero() const;

    // xi-marginal quantities
    double x_cdf(double x) const;
    double x_prob_ge(double x) const;
    double x_tail(double x) const { return 1.0 - x_cdf(x); }
    double x_partial_mean(double lo, double hi) const;
    double x_mean() const { return x_partial_mean(-HUGE_VAL, HUGE_VAL); }
    /// int_lo^hi P(X > y) dy for 0 <= lo <= hi.
    double x_integral_tail(double lo, double hi) const;

    // eta-marginal quantities
    XReal y_mean() const;
    double y_partial_mean(double lo, double hi) const;
    double y_partial_second(double lo, double hi) const;
    /// P(log|Y| > u) restricted to the selected ypart.
    double y_tail_log_abs(double u) const;
    /// Atoms of log|Y| (value, mass), used for exact quadrature.
    std::vector<std::pair<double, double>> y_log_abs_atoms() const;

    std::string describe() const;
};

double normal_cdf(double z);
double normal_pdf(double z);

}  // namespace mapexp
