#include "mapexp/levy.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mapexp {

const char* to_string(QuadratureResult::Verdict v) {
    switch (v) {
        case QuadratureResult::Verdict::Finite:
            return "Finite";
        case QuadratureResult::Verdict::DivergentEvidence:
            return "DivergentEvidence";
        case QuadratureResult::Verdict::Indeterminate:
            return "Indeterminate";
    }
    return "?";
}

const char* to_string(Denominator::Mode m) {
    switch (m) {
        case Denominator::Mode::Constant:
            return "constant";
        case Denominator::Mode::ABar:
            return "a_bar";
        case Denominator::Mode::EmpiricalXiTail:
            return "empirical_xi_tail";
    }
    return "?";
}

XiLevy XiLevy::from(const Triplet& t) {
    XiLevy x;
    x.gamma = xi_gamma(t);
    x.rate = t.rate;
    x.law = t.law;
    return x;
}

double XiLevy::nu_plus(double y) const { return rate > 0 ? rate * (1.0 - law.x_cdf(y)) : 0.0; }

double XiLevy::nu_plus_integral(double x) const { return rate > 0 ? rate * law.x_integral_tail(0.0, x) : 0.0; }

double a_fn(const XiLevy& xi, double x) {
    return xi.gamma + xi.nu_plus(1.0) + xi.nu_plus_integral(x) - xi.nu_plus_integral(1.0);
}

double a_root(const std::function<double(double)>& A, double xmax) {
    if (A(0.0) > 0) return 0.01;
    if (!(A(xmax) > 0)) throw NotEventuallyPositive("A(x) <= 0 for all probed x");
    double lo = 0.0, hi = 1.0;
    while (!(A(hi) > 0)) {
        lo = hi;
        hi *= 2.0;
    }
    for (int i = 0; i < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++i) {
        const double mid = 0.5 * (lo + hi);
        (A(mid) > 0 ? hi : lo) = mid;
    }
    return hi + 0.01;
}

LogMeasure eta_jump_measure(const Triplet& t) {
    LogMeasure m;
    if (!(t.rate > 0) || t.law.eta_zero()) return m;
    for (auto [u, p] : t.law.y_log_abs_atoms()) m.atoms.emplace_back(u, p * t.rate);
    if (m.atoms.empty()) {
        const double r = t.rate;
        const BivLaw law = t.law;
        m.cont_tail = [r, law](double u) { return r * law.y_tail_log_abs(u); };
    }
    return m;
}

double EmpiricalTail::tail(double u) const {
    if (tail_mass == 0.0) return 0.0;
    if (u <= u_thr) return tail_mass;
    if (!std::isfinite(alpha_lo)) return 0.0;
    return tail_mass * std::pow(u / u_thr, -alpha_lo);
}

EmpiricalTail empirical_tail(std::vector<double> logs, const QuadConfig& cfg) {
    EmpiricalTail e;
    e.n = logs.size();
    std::vector<double> pos;
    for (double x : logs)
        if (x > 0) pos.push_back(x);
    std::sort(pos.begin(), pos.end());
    e.n_pos = pos.size();
    if (e.n < cfg.min_samples) {
        e.insufficient = true;
        return e;
    }
    if (e.n_pos == 0) return e;
    if (e.n_pos < static_cast<std::size_t>(cfg.min_exceed)) {
        e.insufficient = true;
        return e;
    }
    std::size_t k = std::clamp<std::size_t>(e.n_pos / 20, 20, 5000);
    k = std::min(k, e.n_pos - 1);
    e.u_thr = pos[e.n_pos - k - 1];
    // Hill log-excess averaged over k/4..k: lattice-valued logs otherwise make the
    // estimate swing with the position of the threshold inside a lattice cell
    double top = 0.0, gsum = 0.0;
    std::size_t ng = 0;
    const std::size_t k0 = std::max<std::size_t>(k / 4, 10);
    for (std::size_t i = 1; i <= k; ++i) {
        top += std::log(pos[e.n_pos - i]);
        if (i < k0) continue;
        gsum += top / static_cast<double>(i) - std::log(pos[e.n_pos - i - 1]);
        ++ng;
    }
    const double gbar = gsum / static_cast<double>(ng);
    e.alpha_hat = gbar > 0 ? 1.0 / gbar : HUGE_VAL;
    // one-sided 99% lower confidence bound for the tail index
    e.alpha_lo = std::max(0.05, e.alpha_hat * (1.0 - 2.326 / std::sqrt(static_cast<double>(k))));
    e.tail_mass = static_cast<double>(k) / static_cast<double>(e.n);
    e.body.assign(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(e.n_pos - k));
    return e;
}

QuadratureResult integrate_pieces(const std::function<double(double)>& g, const std::vector<Piece>& pieces, double lo,
                                  const QuadConfig& cfg) {
    QuadratureResult r;
    for (const auto& p : pieces) {
        if (p.empirical && p.empirical->insufficient) {
            r.verdict = QuadratureResult::Verdict::Indeterminate;
            r.note = "InsufficientTail: too few samples or exceedances";
            return r;
        }
    }
    const double x0 = std::max(2.0 * lo, 1.0);
    std::vector<std::size_t> body_pos(pieces.size(), 0);
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        if (!pieces[i].empirical) continue;
        const auto& b = pieces[i].empirical->body;
        body_pos[i] = static_cast<std::size_t>(std::lower_bound(b.begin(), b.end(), lo) - b.begin());
    }
    double partial = 0.0;
    bool bad = false;
    for (int k = 0; k <= cfg.doublings; ++k) {
        const double a = k == 0 ? lo : x0 * std::ldexp(1.0, k - 1);
        const double b = x0 * std::ldexp(1.0, k);
        double inc = 0.0;
        // continuous parts share the integrand evaluations
        const double h = (b - a) / cfg.steps;
        for (int s = 0; s < cfg.steps; ++s) {
            const double ua = a + s * h, ub = (s + 1 == cfg.steps) ? b : a + (s + 1) * h;
            double dm = 0.0;
            for (const auto& p : pieces) {
                if (p.analytic && p.analytic->cont_tail)
                    dm += p.weight * (p.analytic->cont_tail(ua) - p.analytic->cont_tail(ub));
                if (p.empirical && p.empirical->tail_mass > 0) {
                    const double ea = std::max(ua, p.empirical->u_thr);
                    if (ea < ub) dm += p.weight * (p.empirical->tail(ea) - p.empirical->tail(ub));
                }
            }
            if (dm != 0.0) inc += g(0.5 * (ua + ub)) * dm;
        }
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            const auto& p = pieces[i];
            if (p.analytic)
                for (auto [u, m] : p.analytic->atoms)
                    if ((k == 0 ? u >= a : u > a) && u <= b) inc += p.weight * m * g(u);
            if (p.empirical) {
                const auto& body = p.empirical->body;
                const double w = p.weight / static_cast<double>(p.empirical->n);
                while (body_pos[i] < body.size() && body[body_pos[i]] <= b) inc += w * g(body[body_pos[i]++]);
            }
        }
        if (std::isnan(inc)) bad = true;
        partial += inc;
        r.trace.emplace_back(b, partial);
    }
    r.value = partial;
    if (bad) {
        r.verdict = QuadratureResult::Verdict::Indeterminate;
        r.note = "integrand undefined (denominator not positive)";
        return r;
    }
    const std::size_t K = r.trace.size();
    r.abs_error = K >= 2 ? r.trace[K - 1].second - r.trace[K - 2].second : 0.0;
    if (!std::isfinite(partial)) {
        r.verdict = QuadratureResult::Verdict::DivergentEvidence;
        r.note = "partial integral is infinite";
        return r;
    }
    bool growing = partial != 0.0;
    for (int i = 0; i < cfg.last && growing; ++i) {
        const double cur = r.trace[K - 1 - i].second, prev = r.trace[K - 2 - i].second;
        if (!((cur - prev) > cfg.rel_tol * std::fabs(cur))) growing = false;
    }
    r.verdict = growing ? QuadratureResult::Verdict::DivergentEvidence : QuadratureResult::Verdict::Finite;
    return r;
}

QuadratureResult erickson_maller_test(const XiLevy& xi, const LogMeasure& eta, double a, const QuadConfig& cfg) {
    auto g = [&xi](double u) {
        const double A = a_fn(xi, u);
        return A > 0 ? u / A : NAN;
    };
    if (eta.empty()) {
        QuadratureResult r;
        r.note = "no eta jumps";
        return r;
    }
    return integrate_pieces(g, {Piece{1.0, &eta, nullptr}}, a, cfg);
}

QuadratureResult erickson_maller_test(const Triplet& t, const QuadConfig& cfg) {
    const XiLevy xi = XiLevy::from(t);
    const double a = a_root([&xi](double x) { return a_fn(xi, x); });
    const LogMeasure eta = eta_jump_measure(t);
    return erickson_maller_test(xi, eta, a, cfg);
}

Denominator Denominator::constant(double c) {
    Denominator d;
    d.mode = Mode::Constant;
    d.D = [c](double) { return c; };
    return d;
}

Denominator Denominator::empirical_xi_tail(std::vector<double> xs) {
    Denominator d;
    d.mode = Mode::EmpiricalXiTail;
    const double n = static_cast<double>(xs.size());
    std::vector<double> pos;
    for (double x : xs)
        if (x > 0) pos.push_back(x);
    std::sort(pos.begin(), pos.end());
    std::vector<double> pre(pos.size() + 1, 0.0);
    for (std::size_t i = 0; i < pos.size(); ++i) pre[i + 1] = pre[i] + pos[i];
    d.D = [pos = std::move(pos), pre = std::move(pre), n](double x) {
        if (n == 0) return 0.0;
        const std::size_t k = static_cast<std::size_t>(std::upper_bound(pos.begin(), pos.end(), x) - pos.begin());
        return (pre[k] + x * static_cast<double>(pos.size() - k)) / n;
    };
    return d;
}

namespace {

struct ABar {
    std::vector<double> pi;
    std::vector<XiLevy> xi;
    double sw = 0.0;
    double operator()(double x) const {
        double s = sw;
        for (std::size_t j = 0; j < xi.size(); ++j) s += pi[j] * a_fn(xi[j], x);
        return s;
    }
};

ABar make_abar(const MapSpec& spec) {
    if (spec.chain.kind != ChainSpec::Kind::DenseFinite)
        throw std::domain_error("NotFiniteState: a_bar needs a finite state space");
    ABar a;
    a.pi = stationary_law(spec);
    for (const auto& t : spec.states) a.xi.push_back(XiLevy::from(t));
    for (const auto& [k, law] : spec.switch_laws) {
        const double q = spec.chain.Q[k.first][k.second];
        if (q > 0) a.sw += a.pi[k.first] * q * law.x_partial_mean(0.0, HUGE_VAL);
    }
    return a;
}

}  // namespace

Denominator Denominator::a_bar(const MapSpec& spec) {
    Denominator d;
    d.mode = Mode::ABar;
    d.D = make_abar(spec);
    return d;
}

double a_bar_fn(const MapSpec& spec, double x) { return make_abar(spec)(x); }

namespace {

std::function<double(double)> moment_integrand(const Denominator& d) {
    return [D = d.D](double u) {
        if (u == 0.0) return 0.0;
        const double v = D(u);
        return v > 0 ? u / v : NAN;
    };
}

}  // namespace

QuadratureResult log_moment_test(const std::vector<double>& log_q, const Denominator& d, const QuadConfig& cfg) {
    const EmpiricalTail e = empirical_tail(log_q, cfg);
    const auto g = moment_integrand(d);
    QuadratureResult r = integrate_pieces(g, {Piece{1.0, nullptr, &e}}, 0.0, cfg);
    if (r.verdict == QuadratureResult::Verdict::Indeterminate) return r;
    if (e.n_pos > 0) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "n=%zu exceedances=%zu tail index %.3g (lower bound %.3g)", e.n, e.n_pos,
                      e.alpha_hat, e.alpha_lo);
        r.note = buf;
    }
    if (cfg.bootstrap > 0 && e.n_pos > 0) {
        std::mt19937_64 rng(cfg.boot_seed);
        std::uniform_int_distribution<std::size_t> pick(0, log_q.size() - 1);
        std::vector<double> vals;
        QuadConfig c2 = cfg;
        c2.bootstrap = 0;
        for (int b = 0; b < cfg.bootstrap; ++b) {
            std::vector<double> s(log_q.size());
            for (auto& x : s) x = log_q[pick(rng)];
            const EmpiricalTail eb = empirical_tail(std::move(s), c2);
            vals.push_back(integrate_pieces(g, {Piece{1.0, nullptr, &eb}}, 0.0, c2).value);
        }
        std::sort(vals.begin(), vals.end());
        r.band_lo = vals[static_cast<std::size_t>(0.025 * (vals.size() - 1))];
        r.band_hi = vals[static_cast<std::size_t>(0.975 * (vals.size() - 1))];
    }
    return r;
}

QuadratureResult log_moment_test(const LogMeasure& law, const Denominator& d, const QuadConfig& cfg) {
    return integrate_pieces(moment_integrand(d), {Piece{1.0, &law, nullptr}}, 0.0, cfg);
}

}  // namespace mapexp
