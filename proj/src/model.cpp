#include "mapexp/model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace mapexp {

namespace {

constexpr double kInf = HUGE_VAL;

bool marginal_ok(const Marginal& m, std::string& why) {
    switch (m.kind) {
        case Marginal::Kind::Point:
            if (!std::isfinite(m.a)) why = "point value not finite";
            break;
        case Marginal::Kind::Normal:
            if (!std::isfinite(m.a) || !(m.b >= 0)) why = "normal needs finite mean and sd >= 0";
            break;
        case Marginal::Kind::Exponential:
            if (!(m.a > 0)) why = "exponential rate must be > 0";
            break;
        case Marginal::Kind::Pareto:
        case Marginal::Kind::LogPareto:
            if (!(m.a > 0) || !(m.b > 0)) why = "pareto scale and alpha must be > 0";
            break;
    }
    return why.empty();
}

void check_law(const BivLaw& l, const std::string& where, std::vector<std::string>& out) {
    std::string why;
    switch (l.kind) {
        case BivLaw::Kind::Zero:
            return;
        case BivLaw::Kind::Atoms: {
            if (l.atoms.empty()) {
                out.push_back(where + ": empty atom list");
                return;
            }
            double s = 0;
            for (const auto& a : l.atoms) {
                if (!(a.p >= 0) || !std::isfinite(a.x) || !std::isfinite(a.y.m) || !std::isfinite(a.y.L)) {
                    out.push_back(where + ": invalid atom");
                    return;
                }
                s += a.p;
            }
            if (std::fabs(s - 1.0) > 1e-9) out.push_back(where + ": atom weights do not sum to 1");
            return;
        }
        case BivLaw::Kind::Curve:
            if (!std::isfinite(l.ci) || !std::isfinite(l.cj)) out.push_back(where + ": curve constants not finite");
            if (!marginal_ok(l.mx, why)) out.push_back(where + ": " + why);
            return;
        case BivLaw::Kind::Indep:
            if (!marginal_ok(l.mx, why)) out.push_back(where + ": " + why);
            why.clear();
            if (!marginal_ok(l.my, why)) out.push_back(where + ": " + why);
            return;
    }
}

void check_triplet(const Triplet& t, const std::string& where, std::vector<std::string>& out) {
    if (!std::isfinite(t.bx) || !std::isfinite(t.by.m)) out.push_back(where + ": drift not finite");
    Eigen::Matrix2d S;
    S << t.sxx, t.sxy, t.sxy, t.syy;
    if (!S.allFinite()) {
        out.push_back(where + ": sigma not finite");
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(S);
        const double tol = 1e-12 * std::max(1.0, S.cwiseAbs().maxCoeff());
        if (es.eigenvalues().minCoeff() < -tol) out.push_back(where + ": sigma not positive semidefinite");
    }
    if (!(t.rate >= 0) || !std::isfinite(t.rate)) out.push_back(where + ": jump rate must be >= 0");
    if (t.rate > 0) check_law(t.law, where + " jumps", out);
    if (t.small_block && (!(t.sj_eps > 0) || t.sj_vx < 0 || t.sj_vy < 0))
        out.push_back(where + ": small-jump block needs eps > 0 and variances >= 0");
}

bool triplet_xi_zero(const Triplet& t) {
    return t.bx == 0.0 && t.sxx == 0.0 && (!t.small_block || t.sj_vx == 0.0) && (t.rate == 0.0 || t.law.xi_zero());
}
bool triplet_eta_zero(const Triplet& t) {
    return t.by.is_zero() && t.syy == 0.0 && (!t.small_block || t.sj_vy == 0.0) &&
           (t.rate == 0.0 || t.law.eta_zero());
}
bool switch_xi_zero(const PetalSwitch& s) {
    return s.coef ? (s.x.c0 == 0 && s.x.inv == 0 && s.x.exp == 0) : s.law.xi_zero();
}
bool switch_eta_zero(const PetalSwitch& s) {
    return s.coef ? (s.y.c0 == 0 && s.y.inv == 0 && s.y.exp == 0) : s.law.eta_zero();
}

bool reaches_all(const std::vector<std::vector<double>>& Q, bool reverse) {
    const std::size_t n = Q.size();
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        for (std::size_t j = 0; j < n; ++j) {
            const double r = reverse ? Q[j][i] : Q[i][j];
            if (j != i && r > 0 && !seen[j]) {
                seen[j] = 1;
                stack.push_back(j);
            }
        }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
}

void cholesky(StateDyn& d, const Triplet& t) {
    double sxx = t.sxx, syy = t.syy;
    if (t.small_block) {
        sxx += t.sj_vx;
        syy += t.sj_vy;
    }
    d.sig2x = sxx;
    d.gx = std::sqrt(std::max(0.0, sxx));
    if (d.gx > 0) {
        d.gy1 = t.sxy / d.gx;
        d.gy2 = std::sqrt(std::max(0.0, syy - d.gy1 * d.gy1));
    } else {
        d.gy1 = 0.0;
        d.gy2 = std::sqrt(std::max(0.0, syy));
    }
    d.gauss = d.gx > 0 || d.gy2 > 0;
}

void fill_dyn(StateDyn& d, const Triplet& t) {
    d.present = true;
    d.bx = t.bx;
    d.by = t.by;
    cholesky(d, t);
    d.rate = t.rate;
    d.law = t.law;
}

void finish_cum(StateDyn& d, const std::vector<double>& w) {
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    double c = 0;
    d.cum.clear();
    for (double x : w) {
        c += x / s;
        d.cum.push_back(c);
    }
    if (!d.cum.empty()) d.cum.back() = 1.0;
}

}  // namespace

Mag Coef::at(double p) const {
    const double base = c0 + inv / p;
    if (exp == 0.0) return Mag(base);
    const double L = 1.0 / p;
    if (L < 700.0) return Mag(base + exp * std::exp(L));
    return Mag(exp + base * std::exp(-L), L);
}

Triplet PetalTriplet::at(double p) const {
    Triplet t;
    t.bx = bx.at(p).value();
    t.by = by.at(p);
    t.sxx = sxx;
    t.sxy = sxy;
    t.syy = syy;
    t.rate = rate;
    t.law = law;
    return t;
}

BivLaw PetalSwitch::at(double p) const {
    if (!coef) return law;
    return BivLaw::atom(x.at(p).value(), y.at(p));
}

std::vector<double> petal_weights(const ChainSpec& c) {
    std::vector<double> p(kMaxPetal + 1, 0.0);
    const auto& w = c.weights;
    if (w.mode == PetalWeights::Mode::Geometric) {
        const double r = w.ratio;
        for (int j = 2; j < kMaxPetal; ++j) p[j] = (1.0 - r) * std::pow(r, j - 2);
        p[kMaxPetal] = std::pow(r, kMaxPetal - 2);
        return p;
    }
    const int L = static_cast<int>(w.list.size());
    double s = 0;
    for (int k = 0; k < L && k + 2 <= kMaxPetal; ++k) {
        p[k + 2] = w.list[k];
        s += w.list[k];
    }
    const double left = 1.0 - s;
    if (w.geometric_tail && left > 0 && L + 2 <= kMaxPetal) {
        double m = left;
        for (int j = L + 2; j < kMaxPetal; ++j) {
            p[j] = m * 0.5;
            m -= p[j];
        }
        p[kMaxPetal] = m;
    } else if (s > 0) {
        for (double& x : p) x /= s;
    }
    return p;
}

bool petal_countable(const ChainSpec& c) {
    if (c.kind != ChainSpec::Kind::PetalFlower) return false;
    if (c.weights.mode == PetalWeights::Mode::Geometric) return true;
    const double s = std::accumulate(c.weights.list.begin(), c.weights.list.end(), 0.0);
    return c.weights.geometric_tail && s < 1.0;
}

ValidationReport validate(const MapSpec& spec) {
    ValidationReport r;
    auto& v = r.violations;
    const auto& ch = spec.chain;
    bool xi_zero = true, eta_zero = true;
    if (ch.kind == ChainSpec::Kind::DenseFinite) {
        const std::size_t n = ch.Q.size();
        bool shape_ok = n > 0;
        if (n == 0) v.push_back("generator is empty");
        for (std::size_t i = 0; i < n && shape_ok; ++i) {
            if (ch.Q[i].size() != n) {
                v.push_back("generator is not square");
                shape_ok = false;
                break;
            }
            double s = 0, scale = 1;
            for (std::size_t j = 0; j < n; ++j) {
                const double q = ch.Q[i][j];
                if (!std::isfinite(q)) {
                    v.push_back("generator entry not finite");
                    shape_ok = false;
                    break;
                }
                if (i != j && q < 0) v.push_back("negative off-diagonal rate at (" + std::to_string(i) + "," +
                                                 std::to_string(j) + ")");
                s += q;
                scale = std::max(scale, std::fabs(q));
            }
            if (shape_ok && std::fabs(s) > 1e-12 * scale)
                v.push_back("generator row sum nonzero (row " + std::to_string(i) + ")");
        }
        if (shape_ok && (!reaches_all(ch.Q, false) || !reaches_all(ch.Q, true)))
            v.push_back("NonErgodic: chain is not irreducible");
        if (spec.states.size() != n) v.push_back("number of state triplets does not match the generator");
        for (std::size_t i = 0; i < spec.states.size(); ++i) {
            check_triplet(spec.states[i], "state " + std::to_string(i), v);
            xi_zero = xi_zero && triplet_xi_zero(spec.states[i]);
            eta_zero = eta_zero && triplet_eta_zero(spec.states[i]);
        }
        if (shape_ok) {
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    if (i == j || !(ch.Q[i][j] > 0)) continue;
                    auto it = spec.switch_laws.find({static_cast<int>(i), static_cast<int>(j)});
                    if (it == spec.switch_laws.end()) {
                        v.push_back("missing switch law " + std::to_string(i) + "->" + std::to_string(j));
                        continue;
                    }
                    check_law(it->second, "switch " + std::to_string(i) + "->" + std::to_string(j), v);
                    xi_zero = xi_zero && it->second.xi_zero();
                    eta_zero = eta_zero && it->second.eta_zero();
                }
        }
    } else {
        if (!(ch.rate > 0) || !std::isfinite(ch.rate)) v.push_back("petal rate must be > 0");
        const auto& w = ch.weights;
        if (w.mode == PetalWeights::Mode::Geometric) {
            if (!(w.ratio > 0 && w.ratio < 1)) v.push_back("geometric petal ratio must lie in (0,1)");
        } else {
            double s = 0;
            for (double x : w.list) {
                if (!(x > 0)) v.push_back("petal weights must be strictly positive");
                s += x;
            }
            if (w.list.empty()) v.push_back("explicit petal weight list is empty");
            if (static_cast<int>(w.list.size()) + 1 > kMaxPetal)
                v.push_back("too many explicit petal weights (max " + std::to_string(kMaxPetal - 1) + ")");
            if (w.geometric_tail && s > 1.0 + 1e-12) v.push_back("explicit petal weights exceed 1");
        }
        if (ch.satellite != 0) {
            if (ch.satellite < 2 || ch.satellite > kMaxPetal) v.push_back("satellite must attach to a petal");
            else if (!(petal_weights(ch)[ch.satellite] > 0)) v.push_back("satellite attaches to an empty petal");
        }
        check_triplet(spec.hub, "hub", v);
        check_triplet(spec.petal.at(0.5), "petal", v);
        if (spec.petal.bx.exp != 0.0) v.push_back("petal xi drift may not carry an exp(1/p) coefficient");
        for (const PetalSwitch* s : {&spec.hub_to_petal, &spec.petal_to_hub, &spec.sat_to_attach,
                                     &spec.attach_to_sat}) {
            if (s->coef && s->x.exp != 0.0) v.push_back("switch xi jump may not carry an exp(1/p) coefficient");
            if (!s->coef) check_law(s->law, "petal switch", v);
        }
        xi_zero = triplet_xi_zero(spec.hub) && spec.petal.bx.c0 == 0 && spec.petal.bx.inv == 0 &&
                  spec.petal.sxx == 0 && (spec.petal.rate == 0 || spec.petal.law.xi_zero()) &&
                  switch_xi_zero(spec.hub_to_petal) && switch_xi_zero(spec.petal_to_hub);
        eta_zero = triplet_eta_zero(spec.hub) && spec.petal.by.c0 == 0 && spec.petal.by.inv == 0 &&
                   spec.petal.by.exp == 0 && spec.petal.syy == 0 &&
                   (spec.petal.rate == 0 || spec.petal.law.eta_zero()) && switch_eta_zero(spec.hub_to_petal) &&
                   switch_eta_zero(spec.petal_to_hub);
        if (ch.satellite != 0) {
            check_triplet(spec.sat, "satellite", v);
            xi_zero = xi_zero && triplet_xi_zero(spec.sat) && switch_xi_zero(spec.sat_to_attach) &&
                      switch_xi_zero(spec.attach_to_sat);
            eta_zero = eta_zero && triplet_eta_zero(spec.sat) && switch_eta_zero(spec.sat_to_attach) &&
                       switch_eta_zero(spec.attach_to_sat);
        }
    }
    if (xi_zero) v.push_back("xi degenerate: xi is identically zero");
    if (eta_zero && !spec.part) v.push_back("eta degenerate: eta is identically zero");
    r.ok = v.empty();
    return r;
}

const BivLaw* StateDyn::switch_to(int j) const {
    for (std::size_t k = 0; k < to.size(); ++k)
        if (to[k] == j) return &sw[k];
    return nullptr;
}

int Model::n_present() const {
    return static_cast<int>(std::count_if(st.begin(), st.end(), [](const StateDyn& d) { return d.present; }));
}

int Model::first_state() const { return petal ? 1 : 0; }

double Model::q(int i, int j) const {
    const StateDyn& d = st[i];
    if (i == j) return -d.exit;
    double prev = 0;
    for (std::size_t k = 0; k < d.to.size(); ++k) {
        if (d.to[k] == j) return d.exit * (d.cum[k] - prev);
        prev = d.cum[k];
    }
    return 0.0;
}

Model compile(const MapSpec& spec) {
    const ValidationReport vr = validate(spec);
    if (!vr.ok) {
        std::string msg;
        for (const auto& s : vr.violations) msg += (msg.empty() ? "" : "; ") + s;
        throw std::invalid_argument(msg);
    }
    Model m;
    const auto& ch = spec.chain;
    if (ch.kind == ChainSpec::Kind::DenseFinite) {
        const int n = static_cast<int>(ch.Q.size());
        m.st.resize(n);
        for (int i = 0; i < n; ++i) {
            StateDyn& d = m.st[i];
            fill_dyn(d, spec.states[i]);
            d.exit = -ch.Q[i][i];
            std::vector<double> w;
            for (int j = 0; j < n; ++j) {
                if (j == i || !(ch.Q[i][j] > 0)) continue;
                d.to.push_back(j);
                w.push_back(ch.Q[i][j]);
                d.sw.push_back(spec.switch_laws.at({i, j}));
            }
            finish_cum(d, w);
            m.small_block = m.small_block || spec.states[i].small_block;
        }
    } else {
        m.petal = true;
        m.countable = petal_countable(ch);
        const auto p = petal_weights(ch);
        const double q = ch.rate;
        const int a = ch.satellite;
        m.st.resize(kMaxPetal + 1);
        StateDyn& hub = m.st[1];
        fill_dyn(hub, spec.hub);
        hub.exit = q;
        std::vector<double> w;
        for (int j = 2; j <= kMaxPetal; ++j) {
            if (!(p[j] > 0)) continue;
            hub.to.push_back(j);
            w.push_back(p[j]);
            hub.sw.push_back(spec.hub_to_petal.at(p[j]));
            StateDyn& d = m.st[j];
            fill_dyn(d, spec.petal.at(p[j]));
            d.weight = p[j];
            d.exit = q;
            d.to.push_back(1);
            d.sw.push_back(spec.petal_to_hub.at(p[j]));
            if (j == a) {
                d.to.push_back(0);
                d.sw.push_back(spec.attach_to_sat.at(p[j]));
                finish_cum(d, {0.5, 0.5});
            } else {
                finish_cum(d, {1.0});
            }
        }
        finish_cum(hub, w);
        if (a != 0) {
            StateDyn& s = m.st[0];
            fill_dyn(s, spec.sat);
            s.exit = q;
            s.to.push_back(a);
            s.sw.push_back(spec.sat_to_attach.at(p[a]));
            finish_cum(s, {1.0});
        }
    }
    for (const auto& d : m.st) {
        if (!d.present) continue;
        m.gauss_any = m.gauss_any || d.gauss;
        if (d.exit > 0) m.min_hold = std::min(m.min_hold, 1.0 / d.exit);
    }
    m.gauss_any = m.gauss_any || spec.gauss_hint;
    const auto pi = stationary_law(spec);
    for (std::size_t i = 0; i < m.st.size(); ++i) m.st[i].pi = pi[i];
    return m;
}

std::vector<double> stationary_law(const MapSpec& spec) {
    const auto& ch = spec.chain;
    if (ch.kind == ChainSpec::Kind::PetalFlower) {
        const auto p = petal_weights(ch);
        std::vector<double> pi(kMaxPetal + 1, 0.0);
        const int a = ch.satellite;
        const double pa = a ? p[a] : 0.0;
        const double h = 1.0 / (2.0 + 2.0 * pa);
        pi[1] = h;
        for (int j = 2; j <= kMaxPetal; ++j) pi[j] = p[j] * h;
        if (a) {
            pi[0] = pa * h;
            pi[a] = 2.0 * pa * h;
        }
        return pi;
    }
    const int n = static_cast<int>(ch.Q.size());
    if (n == 0) throw std::domain_error("NonErgodic: empty generator");
    if (!reaches_all(ch.Q, false) || !reaches_all(ch.Q, true))
        throw std::domain_error("NonErgodic: chain is not irreducible");
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(j, i) = ch.Q[i][j];
    A.row(n - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(n - 1) = 1.0;
    Eigen::VectorXd x = A.fullPivLu().solve(b);
    if (!x.allFinite() || x.minCoeff() <= 0) throw std::domain_error("NonErgodic: no strictly positive solution");
    x /= x.sum();
    return {x.data(), x.data() + n};
}

std::string ExtReal::str() const {
    char buf[96];
    switch (kind) {
        case Kind::Finite:
            std::snprintf(buf, sizeof buf, "%.17g", value);
            return buf;
        case Kind::PosInf:
            return "+inf";
        case Kind::NegInf:
            return "-inf";
        case Kind::Undefined:
            if (has_formal) {
                std::snprintf(buf, sizeof buf, "undefined (formal value %.17g)", formal);
                return buf;
            }
            return "undefined";
    }
    return "?";
}

namespace {

struct MeanAcc {
    double fin = 0.0;
    bool pos = false, neg = false;
    double div_coef = 0.0;  // net coefficient of the petal-count divergence
    bool other = false;     // divergence not captured by div_coef
    std::vector<std::string> notes;

    void add(double v, const char* what) {
        if (v == 0.0) return;
        if (std::isnan(v)) {
            pos = neg = other = true;
            notes.push_back(std::string(what) + " undefined");
        } else if (v == kInf) {
            pos = other = true;
            notes.push_back(std::string(what) + " = +inf");
        } else if (v == -kInf) {
            neg = other = true;
            notes.push_back(std::string(what) + " = -inf");
        } else {
            fin += v;
        }
    }
    // coefficient times a divergent petal sum
    void add_div(double coef, const char* what) {
        if (coef == 0.0) return;
        (coef > 0 ? pos : neg) = true;
        div_coef += coef;
        notes.push_back(std::string(what) + (coef > 0 ? " = +inf" : " = -inf"));
    }

    ExtReal result() const {
        ExtReal r;
        if (!pos && !neg) {
            r.value = fin;
            return r;
        }
        for (const auto& n : notes) r.note += (r.note.empty() ? "" : "; ") + n;
        if (pos && neg) {
            r.kind = ExtReal::Kind::Undefined;
            if (!other) {
                r.has_formal = true;
                r.formal = div_coef == 0.0 ? fin : (div_coef > 0 ? kInf : -kInf);
            }
            return r;
        }
        r.kind = pos ? ExtReal::Kind::PosInf : ExtReal::Kind::NegInf;
        return r;
    }
};

double levy_mean(const Triplet& t, Component c) {
    if (c == Component::Xi) return t.bx + (t.rate > 0 ? t.rate * t.law.x_mean() : 0.0);
    return t.by.value() + (t.rate > 0 ? t.rate * t.law.y_mean().to_double() : 0.0);
}

double law_mean(const BivLaw& l, Component c) { return c == Component::Xi ? l.x_mean() : l.y_mean().to_double(); }

}  // namespace

ExtReal long_term_mean(const MapSpec& spec, Component c) {
    MeanAcc acc;
    const auto& ch = spec.chain;
    if (ch.kind == ChainSpec::Kind::DenseFinite) {
        const auto pi = stationary_law(spec);
        const int n = static_cast<int>(ch.Q.size());
        for (int j = 0; j < n; ++j) {
            acc.add(pi[j] * levy_mean(spec.states[j], c), "state mean");
            for (int k = 0; k < n; ++k) {
                if (k == j || !(ch.Q[j][k] > 0)) continue;
                acc.add(pi[j] * ch.Q[j][k] * law_mean(spec.switch_laws.at({j, k}), c), "switch mean");
            }
        }
        return acc.result();
    }

    const auto p = petal_weights(ch);
    const double q = ch.rate;
    const int a = ch.satellite;
    const double pa = a ? p[a] : 0.0;
    const double h = 1.0 / (2.0 + 2.0 * pa);
    const bool countable = petal_countable(ch);

    auto drift_coef = [&]() { return c == Component::Xi ? spec.petal.bx : spec.petal.by; };
    auto sw_coef = [&](const PetalSwitch& s) { return c == Component::Xi ? s.x : s.y; };

    // hub and satellite
    acc.add(h * levy_mean(spec.hub, c), "hub mean");
    if (a) acc.add(h * pa * levy_mean(spec.sat, c), "satellite mean");

    // petal family: weight of petal j in pi / h is p_j, plus p_a for the attach petal
    const Coef dk = drift_coef();
    const double wsum = countable ? 1.0 + pa : std::accumulate(p.begin(), p.end(), 0.0) + pa;
    Triplet tmpl = spec.petal.at(0.5);
    if (tmpl.rate > 0) acc.add(h * wsum * tmpl.rate * law_mean(tmpl.law, c), "petal jump mean");
    auto family_sum = [&](const Coef& k, double scale, const char* what, bool attach_double) {
        // scale * sum_j w_j (c0 + inv/p_j + exp e^{1/p_j}) with w_j = p_j (+ p_a at the attach petal)
        acc.add(scale * k.c0 * (attach_double ? wsum : (countable ? 1.0 : wsum - pa)), what);
        if (countable) {
            if (k.inv != 0.0) acc.add_div(scale * k.inv, what);
            if (k.exp != 0.0) {
                acc.pos = acc.pos || scale * k.exp > 0;
                acc.neg = acc.neg || scale * k.exp < 0;
                acc.other = true;
                acc.notes.push_back(std::string(what) + " exp(1/p) series diverges");
            }
            return;
        }
        for (int j = 2; j <= kMaxPetal; ++j) {
            if (!(p[j] > 0)) continue;
            const double wj = p[j] + ((attach_double && j == a) ? pa : 0.0);
            acc.add(scale * wj * (k.inv / p[j] + (k.exp != 0 ? k.exp * std::exp(1.0 / p[j]) : 0.0)), what);
        }
    };
    family_sum(dk, h, "petal drift", true);

    // switches: hub -> petal j at rate q p_j, petal j -> hub at rate q (q/2 at the attach petal)
    for (const PetalSwitch* s : {&spec.hub_to_petal, &spec.petal_to_hub}) {
        const char* what = s == &spec.hub_to_petal ? "E_1[Z^(1,J)]" : "E_j[Z^(j,1)]";
        if (s->coef) family_sum(sw_coef(*s), h * q, what, false);
        else acc.add(h * q * (countable ? 1.0 : wsum - pa) * law_mean(s->law, c), what);
    }
    if (a) {
        for (const PetalSwitch* s : {&spec.sat_to_attach, &spec.attach_to_sat}) {
            const double m = s->coef ? (c == Component::Xi ? s->x.at(pa).value() : s->y.at(pa).value())
                                     : law_mean(s->law, c);
            acc.add(h * pa * q * m, "satellite switch");
        }
    }
    return acc.result();
}

namespace {

// Xi jumps only through deterministic switch atoms forming a potential:
// then xi is bounded.
bool xi_bounded_potential(const MapSpec& spec) {
    if (spec.chain.kind != ChainSpec::Kind::DenseFinite) return false;
    const int n = static_cast<int>(spec.chain.Q.size());
    for (const auto& t : spec.states)
        if (!triplet_xi_zero(t)) return false;
    std::vector<double> f(n, 0.0);
    std::vector<char> set(n, 0);
    set[0] = 1;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& [k, law] : spec.switch_laws) {
            if (!(spec.chain.Q[k.first][k.second] > 0)) continue;
            double x = 0;
            if (law.kind == BivLaw::Kind::Zero) x = 0;
            else if (law.kind == BivLaw::Kind::Atoms && law.atoms.size() == 1) x = law.atoms[0].x;
            else if (law.kind != BivLaw::Kind::Atoms && law.mx.kind == Marginal::Kind::Point) x = law.mx.a;
            else return false;
            const int i = k.first, j = k.second;
            if (set[i] && !set[j]) {
                f[j] = f[i] + x;
                set[j] = 1;
                changed = true;
            } else if (set[j] && !set[i]) {
                f[i] = f[j] - x;
                set[i] = 1;
                changed = true;
            } else if (set[i] && set[j] && std::fabs(f[j] - f[i] - x) > 1e-12 * (1 + std::fabs(x))) {
                return false;
            }
        }
    }
    return true;
}

}  // namespace

Trichotomy drift_trichotomy(const MapSpec& spec) {
    if (spec.chain.kind != ChainSpec::Kind::DenseFinite) return Trichotomy::Unknown;
    const ExtReal k = long_term_mean(spec, Component::Xi);
    switch (k.kind) {
        case ExtReal::Kind::PosInf:
            return Trichotomy::ToPlusInf;
        case ExtReal::Kind::NegInf:
            return Trichotomy::ToMinusInf;
        case ExtReal::Kind::Undefined:
            return Trichotomy::Unknown;
        case ExtReal::Kind::Finite:
            if (k.value > 0) return Trichotomy::ToPlusInf;
            if (k.value < 0) return Trichotomy::ToMinusInf;
            return xi_bounded_potential(spec) ? Trichotomy::Unknown : Trichotomy::Oscillates;
    }
    return Trichotomy::Unknown;
}

const char* to_string(Trichotomy t) {
    switch (t) {
        case Trichotomy::ToPlusInf:
            return "ToPlusInf";
        case Trichotomy::ToMinusInf:
            return "ToMinusInf";
        case Trichotomy::Oscillates:
            return "Oscillates";
        case Trichotomy::Unknown:
            return "Unknown";
    }
    return "?";
}

double xi_gamma(const Triplet& t) {
    return t.bx + (t.rate > 0 ? t.rate * t.law.x_partial_mean(std::nextafter(-1.0, 0.0), 1.0) : 0.0);
}

double eta_gamma(const Triplet& t) {
    return t.by.value() + (t.rate > 0 ? t.rate * t.law.y_partial_mean(std::nextafter(-1.0, 0.0), 1.0) : 0.0);
}

}  // namespace mapexp
