#include "mapexp/laws.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <cstdio>
#include <limits>

namespace mapexp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double phi_times(double z) {
    // z * pdf(z) with the limits at +-inf
    if (!std::isfinite(z)) return 0.0;
    return z * normal_pdf(z);
}

// int_l^h v f(v) dv and int_l^h v^2 f(v) dv for the positive variable of a
// one-sided law; l >= support minimum is enforced by the caller.
double exp_m1(double r, double l, double h) {
    auto F = [r](double v) { return std::isfinite(v) ? -(v + 1.0 / r) * std::exp(-r * v) : 0.0; };
    return F(h) - F(l);
}
double exp_m2(double r, double l, double h) {
    auto F = [r](double v) {
        return std::isfinite(v) ? -(v * v + 2.0 * v / r + 2.0 / (r * r)) * std::exp(-r * v) : 0.0;
    };
    return F(h) - F(l);
}
double pareto_mk(double xm, double al, double l, double h, double k) {
    // alpha xm^alpha int_l^h v^{k-1-alpha} dv
    const double c = al * std::pow(xm, al);
    const double pw = k - al;
    if (std::fabs(pw) < 1e-14) {
        if (!std::isfinite(h)) return kInf;
        return c * (std::log(h) - std::log(l));
    }
    if (!std::isfinite(h)) {
        if (pw > 0) return kInf;
        return c * (0.0 - std::pow(l, pw)) / pw;
    }
    return c * (std::pow(h, pw) - std::pow(l, pw)) / pw;
}
double logpareto_mk(double xm, double al, double l, double h, double k) {
    // E[V^k; l <= V < h] with V = exp(P), P ~ Pareto(xm, al)
    if (!std::isfinite(h)) return kInf;
    const double pl = std::max(std::log(l), xm);
    const double ph = std::log(h);
    if (ph <= pl) return 0.0;
    auto f = [&](double p) { return std::exp(k * p) * al * std::pow(xm, al) * std::pow(p, -al - 1.0); };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, pl, ph, 15, 1e-12);
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / M_SQRT2); }
double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

Mag Marginal::sample(Rng& rng) const {
    switch (kind) {
        case Kind::Point:
            return {a};
        case Kind::Normal: {
            std::normal_distribution<double> n(a, b);
            return {n(rng)};
        }
        case Kind::Exponential: {
            std::exponential_distribution<double> e(a);
            return {sign * e(rng)};
        }
        case Kind::Pareto: {
            std::uniform_real_distribution<double> u(0.0, 1.0);
            return {sign * a * std::pow(1.0 - u(rng), -1.0 / b)};
        }
        case Kind::LogPareto: {
            std::uniform_real_distribution<double> u(0.0, 1.0);
            return {sign, a * std::pow(1.0 - u(rng), -1.0 / b)};
        }
    }
    return {};
}

double Marginal::cdf(double x) const {
    switch (kind) {
        case Kind::Point:
            return x >= a ? 1.0 : 0.0;
        case Kind::Normal:
            if (b <= 0) return x >= a ? 1.0 : 0.0;
            return normal_cdf((x - a) / b);
        case Kind::Exponential:
            if (sign > 0) return x < 0 ? 0.0 : 1.0 - std::exp(-a * x);
            return x >= 0 ? 1.0 : std::exp(a * x);
        case Kind::Pareto:
            if (sign > 0) return x < a ? 0.0 : 1.0 - std::pow(a / x, b);
            return -x <= a ? 1.0 : std::pow(a / -x, b);
        case Kind::LogPareto:
            if (sign > 0) {
                if (x <= 0 || std::log(x) < a) return 0.0;
                return 1.0 - std::pow(a / std::log(x), b);
            }
            if (x >= 0 || std::log(-x) <= a) return 1.0;
            return std::pow(a / std::log(-x), b);
    }
    return 0.0;
}

double Marginal::prob_ge(double x) const {
    if (kind == Kind::Point) return a >= x ? 1.0 : 0.0;
    if (kind == Kind::Normal && b <= 0) return a >= x ? 1.0 : 0.0;
    return 1.0 - cdf(x);
}

double Marginal::tail_log_abs(double u) const {
    const double y = std::exp(u);
    switch (kind) {
        case Kind::Point:
            return (a != 0.0 && std::log(std::fabs(a)) > u) ? 1.0 : 0.0;
        case Kind::Normal:
            if (b <= 0) return (a != 0.0 && std::log(std::fabs(a)) > u) ? 1.0 : 0.0;
            return normal_cdf(-(y - a) / b) + normal_cdf((-y - a) / b);
        case Kind::Exponential:
            return std::exp(-a * y);
        case Kind::Pareto:
            return y < a ? 1.0 : std::pow(a / y, b);
        case Kind::LogPareto:
            return u < a ? 1.0 : std::pow(a / u, b);
    }
    return 0.0;
}

double Marginal::partial_mean(double lo, double hi) const {
    if (hi <= lo) return 0.0;
    switch (kind) {
        case Kind::Point:
            return (a >= lo && a < hi) ? a : 0.0;
        case Kind::Normal: {
            if (b <= 0) return (a >= lo && a < hi) ? a : 0.0;
            const double za = (lo - a) / b, zb = (hi - a) / b;
            return a * (normal_cdf(zb) - normal_cdf(za)) + b * (normal_pdf(za) - normal_pdf(zb));
        }
        default:
            break;
    }
    // one-sided: X = sign * V, V >= vmin
    double l = sign > 0 ? lo : -hi;
    double h = sign > 0 ? hi : -lo;
    const double vmin = kind == Kind::Exponential ? 0.0 : (kind == Kind::Pareto ? a : std::exp(std::min(a, 700.0)));
    l = std::max(l, vmin);
    if (h <= l) return 0.0;
    double m = 0.0;
    if (kind == Kind::Exponential) m = exp_m1(a, l, h);
    if (kind == Kind::Pareto) m = pareto_mk(a, b, l, h, 1.0);
    if (kind == Kind::LogPareto) m = logpareto_mk(a, b, l, h, 1.0);
    return sign * m;
}

double Marginal::partial_second(double lo, double hi) const {
    if (hi <= lo) return 0.0;
    switch (kind) {
        case Kind::Point:
            return (a >= lo && a < hi) ? a * a : 0.0;
        case Kind::Normal: {
            if (b <= 0) return (a >= lo && a < hi) ? a * a : 0.0;
            const double za = (lo - a) / b, zb = (hi - a) / b;
            const double dP = normal_cdf(zb) - normal_cdf(za);
            return a * a * dP + 2.0 * a * b * (normal_pdf(za) - normal_pdf(zb)) +
                   b * b * (dP + phi_times(za) - phi_times(zb));
        }
        default:
            break;
    }
    double l = sign > 0 ? lo : -hi;
    double h = sign > 0 ? hi : -lo;
    const double vmin = kind == Kind::Exponential ? 0.0 : (kind == Kind::Pareto ? a : std::exp(std::min(a, 700.0)));
    l = std::max(l, vmin);
    if (h <= l) return 0.0;
    if (kind == Kind::Exponential) return exp_m2(a, l, h);
    if (kind == Kind::Pareto) return pareto_mk(a, b, l, h, 2.0);
    return logpareto_mk(a, b, l, h, 2.0);
}

double Marginal::quantile(double u) const {
    switch (kind) {
        case Kind::Point:
            return a;
        case Kind::Normal:
            if (b <= 0) return a;
            return boost::math::quantile(boost::math::normal_distribution<double>(a, b), u);
        case Kind::Exponential:
            return sign * (-std::log1p(-u) / a);
        case Kind::Pareto:
            return sign * a * std::pow(1.0 - u, -1.0 / b);
        case Kind::LogPareto:
            return sign * std::exp(a * std::pow(1.0 - u, -1.0 / b));
    }
    return 0.0;
}

double Marginal::expect(const std::function<double(double)>& h) const {
    if (kind == Kind::Point || (kind == Kind::Normal && b <= 0)) return h(a);
    boost::math::quadrature::tanh_sinh<double> ts;
    auto g = [&](double u) { return h(quantile(u)); };
    return ts.integrate(g, 0.0, 1.0);
}

std::string Marginal::describe() const {
    char buf[96];
    const char* s = sign < 0 ? "-" : "";
    switch (kind) {
        case Kind::Point:
            std::snprintf(buf, sizeof buf, "point(%g)", a);
            break;
        case Kind::Normal:
            std::snprintf(buf, sizeof buf, "normal(%g,%g)", a, b);
            break;
        case Kind::Exponential:
            std::snprintf(buf, sizeof buf, "%sexponential(%g)", s, a);
            break;
        case Kind::Pareto:
            std::snprintf(buf, sizeof buf, "%spareto(%g,%g)", s, a, b);
            break;
        case Kind::LogPareto:
            std::snprintf(buf, sizeof buf, "%slogpareto(%g,%g)", s, a, b);
            break;
    }
    return buf;
}

// ---------------------------------------------------------------- BivLaw

namespace {

bool part_keeps(BivLaw::YPart part, double absy) {
    if (part == BivLaw::YPart::None) return false;
    if (part == BivLaw::YPart::Small) return absy < 1.0;
    if (part == BivLaw::YPart::Big) return absy >= 1.0;
    return true;
}

double curve_y(double ci, double cj, double x) { return ci - cj * std::exp(-x); }

}  // namespace

void BivLaw::sample(Rng& rng, double& dx, Mag& dy) const {
    switch (kind) {
        case Kind::Zero:
            dx = 0.0;
            dy = Mag();
            return;
        case Kind::Atoms: {
            std::size_t k = 0;
            if (atoms.size() > 1) {
                std::uniform_real_distribution<double> u(0.0, 1.0);
                double r = u(rng), c = 0.0;
                for (k = 0; k + 1 < atoms.size(); ++k) {
                    c += atoms[k].p;
                    if (r < c) break;
                }
            }
            dx = atoms[k].x;
            dy = atoms[k].y;
            break;
        }
        case Kind::Curve: {
            dx = mx.sample(rng).value();
            if (-dx < 700.0)
                dy = Mag(curve_y(ci, cj, dx));
            else
                dy = Mag(-cj, -dx);
            break;
        }
        case Kind::Indep:
            dx = mx.sample(rng).value();
            dy = my.sample(rng);
            break;
    }
    if (ypart != YPart::All && !dy.is_zero()) {
        const double la = std::log(std::fabs(dy.m)) + dy.L;
        if (!part_keeps(ypart, la < 0 ? 0.5 : 2.0)) dy = Mag();
    }
}

bool BivLaw::xi_zero() const {
    switch (kind) {
        case Kind::Zero:
            return true;
        case Kind::Atoms:
            for (const auto& a : atoms)
                if (a.x != 0.0) return false;
            return true;
        default:
            return mx.is_zero();
    }
}

bool BivLaw::eta_zero() const {
    if (ypart == YPart::None) return true;
    switch (kind) {
        case Kind::Zero:
            return true;
        case Kind::Atoms:
            for (const auto& a : atoms)
                if (!a.y.is_zero()) return false;
            return true;
        case Kind::Curve:
            return ci == 0.0 && cj == 0.0;
        case Kind::Indep:
            return my.is_zero();
    }
    return true;
}

double BivLaw::x_cdf(double x) const {
    switch (kind) {
        case Kind::Zero:
            return x >= 0 ? 1.0 : 0.0;
        case Kind::Atoms: {
            double c = 0;
            for (const auto& a : atoms)
                if (a.x <= x) c += a.p;
            return c;
        }
        default:
            return mx.cdf(x);
    }
}

double BivLaw::x_prob_ge(double x) const {
    switch (kind) {
        case Kind::Zero:
            return 0.0 >= x ? 1.0 : 0.0;
        case Kind::Atoms: {
            double c = 0;
            for (const auto& a : atoms)
                if (a.x >= x) c += a.p;
            return c;
        }
        default:
            return mx.prob_ge(x);
    }
}

double BivLaw::x_partial_mean(double lo, double hi) const {
    switch (kind) {
        case Kind::Zero:
            return 0.0;
        case Kind::Atoms: {
            double s = 0;
            for (const auto& a : atoms)
                if (a.x >= lo && a.x < hi) s += a.p * a.x;
            return s;
        }
        default:
            return mx.partial_mean(lo, hi);
    }
}

double BivLaw::x_integral_tail(double lo, double hi) const {
    if (hi <= lo) return 0.0;
    const double ge_lo = x_prob_ge(lo);
    const double ge_hi = std::isfinite(hi) ? x_prob_ge(hi) : 0.0;
    double r = x_partial_mean(lo, hi) - lo * (ge_lo - ge_hi);
    if (std::isfinite(hi)) r += (hi - lo) * ge_hi;
    return r;
}

XReal BivLaw::y_mean() const {
    if (ypart == YPart::None) return XReal();
    if (ypart != YPart::All) {
        const double small = y_partial_mean(-1.0, 1.0);
        if (ypart == YPart::Small) return XReal(small);
    }
    switch (kind) {
        case Kind::Zero:
            return XReal();
        case Kind::Atoms: {
            ExactSum s;
            for (const auto& a : atoms) {
                if (ypart == YPart::Big) {
                    const double la = a.y.is_zero() ? -HUGE_VAL : std::log(std::fabs(a.y.m)) + a.y.L;
                    if (la < 0) continue;
                }
                s.add(a.y.x() * a.p);
            }
            return s.value();
        }
        case Kind::Curve: {
            const double c = ci, d = cj;
            double m = 0;
            if (ypart == YPart::Big)
                m = mx.expect([&](double x) {
                    const double y = curve_y(c, d, x);
                    return std::fabs(y) >= 1.0 ? y : 0.0;
                });
            else
                m = mx.expect([&](double x) { return curve_y(c, d, x); });
            return XReal(m);
        }
        case Kind::Indep: {
            double m = my.mean();
            if (ypart == YPart::Big) m -= my.partial_mean(-1.0, 1.0);
            if (my.kind == Marginal::Kind::LogPareto) return XReal(m);
            return XReal(m);
        }
    }
    return XReal();
}

double BivLaw::y_partial_mean(double lo, double hi) const {
    if (ypart == YPart::None) return 0.0;
    if (ypart == YPart::Small) {
        lo = std::max(lo, -1.0);
        hi = std::min(hi, 1.0);
    }
    auto in = [&](double y) { return y >= lo && y < hi && part_keeps(ypart, std::fabs(y)); };
    switch (kind) {
        case Kind::Zero:
            return 0.0;
        case Kind::Atoms: {
            double s = 0;
            for (const auto& a : atoms) {
                const double y = a.y.value();
                if (in(y)) s += a.p * y;
            }
            return s;
        }
        case Kind::Curve:
            return mx.expect([&](double x) {
                const double y = curve_y(ci, cj, x);
                return in(y) ? y : 0.0;
            });
        case Kind::Indep:
            if (ypart == YPart::Big)
                return my.partial_mean(lo, std::min(hi, -1.0)) + my.partial_mean(std::max(lo, 1.0), hi);
            return my.partial_mean(lo, hi);
    }
    return 0.0;
}

double BivLaw::y_partial_second(double lo, double hi) const {
    if (ypart == YPart::None) return 0.0;
    if (ypart == YPart::Small) {
        lo = std::max(lo, -1.0);
        hi = std::min(hi, 1.0);
    }
    auto in = [&](double y) { return y >= lo && y < hi && part_keeps(ypart, std::fabs(y)); };
    switch (kind) {
        case Kind::Zero:
            return 0.0;
        case Kind::Atoms: {
            double s = 0;
            for (const auto& a : atoms) {
                const double y = a.y.value();
                if (in(y)) s += a.p * y * y;
            }
            return s;
        }
        case Kind::Curve:
            return mx.expect([&](double x) {
                const double y = curve_y(ci, cj, x);
                return in(y) ? y * y : 0.0;
            });
        case Kind::Indep:
            if (ypart == YPart::Big)
                return my.partial_second(lo, std::min(hi, -1.0)) + my.partial_second(std::max(lo, 1.0), hi);
            return my.partial_second(lo, hi);
    }
    return 0.0;
}

double BivLaw::y_tail_log_abs(double u) const {
    if (ypart == YPart::None) return 0.0;
    // restrict to the selected part: Small keeps log|y| < 0, Big keeps >= 0
    double uu = u;
    if (ypart == YPart::Big && uu < 0) uu = -1e-300;
    auto raw = [&](double v) -> double {
        switch (kind) {
            case Kind::Zero:
                return 0.0;
            case Kind::Atoms: {
                double s = 0;
                for (const auto& a : atoms) {
                    if (a.y.is_zero()) continue;
                    if (std::log(std::fabs(a.y.m)) + a.y.L > v) s += a.p;
                }
                return s;
            }
            case Kind::Curve: {
                // |ci - cj e^{-X}| > y  <=>  X in a union of two half-lines
                const double y = std::exp(v);
                if (cj == 0.0) return std::fabs(ci) > y ? 1.0 : 0.0;
                double p = 0;
                // ci - cj e^{-x} > y  <=> cj e^{-x} < ci - y
                const double up = ci - y, dn = ci + y;
                if (cj > 0) {
                    if (up > 0) p += 1.0 - mx.cdf(-std::log(up / cj));
                    p += dn <= 0 ? 1.0 : mx.cdf(std::nextafter(-std::log(dn / cj), -HUGE_VAL));
                } else {
                    // e^{-x} > (ci - y)/cj  when cj < 0 flips
                    if (up >= 0)
                        p += 1.0;
                    else
                        p += mx.cdf(std::nextafter(-std::log(up / cj), -HUGE_VAL));
                    if (dn < 0) p += 1.0 - mx.cdf(-std::log(dn / cj));
                }
                return std::min(1.0, p);
            }
            case Kind::Indep:
                return my.tail_log_abs(v);
        }
        return 0.0;
    };
    double t = raw(uu);
    if (ypart == YPart::Small) t = std::max(0.0, t - raw(-1e-300));
    return t;
}

std::vector<std::pair<double, double>> BivLaw::y_log_abs_atoms() const {
    std::vector<std::pair<double, double>> out;
    if (kind == Kind::Atoms) {
        for (const auto& a : atoms)
            if (!a.y.is_zero()) out.emplace_back(std::log(std::fabs(a.y.m)) + a.y.L, a.p);
    } else if (kind == Kind::Indep && my.kind == Marginal::Kind::Point && my.a != 0.0) {
        out.emplace_back(std::log(std::fabs(my.a)), 1.0);
    } else if (kind == Kind::Curve && mx.kind == Marginal::Kind::Point) {
        const double y = curve_y(ci, cj, mx.a);
        if (y != 0.0) out.emplace_back(std::log(std::fabs(y)), 1.0);
    }
    if (ypart == YPart::None) return {};
    if (ypart != YPart::All) {
        std::vector<std::pair<double, double>> kept;
        for (auto& [l, p] : out)
            if ((ypart == YPart::Big) == (l >= 0)) kept.emplace_back(l, p);
        return kept;
    }
    return out;
}

std::string BivLaw::describe() const {
    switch (kind) {
        case Kind::Zero:
            return "zero";
        case Kind::Atoms:
            return "atoms(" + std::to_string(atoms.size()) + ")";
        case Kind::Curve:
            return "curve(" + std::to_string(ci) + "," + std::to_string(cj) + "," + mx.describe() + ")";
        case Kind::Indep:
            return "indep(" + mx.describe() + "," + my.describe() + ")";
    }
    return "?";
}

}  // namespace mapexp
