#include "mapexp/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mapexp/io.hpp"
#include "mapexp/parallel.hpp"
#include "mapexp/rng.hpp"

namespace mapexp {

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return NAN;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double quantile_sorted(const std::vector<double>& v, double p) {
    if (v.empty()) return NAN;
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

json xidiag_json(const XiDiagResult& d) {
    return {{"status", to_string(d.status)}, {"mean", num(d.mean)}, {"tstat", num(d.tstat)}, {"n", d.n},
            {"note", d.note}};
}

json cycles_note(const ExcursionBatch& b, std::size_t min_cycles) {
    return {{"status", "untested (budget)"}, {"cycles", b.cycles.size()}, {"min_cycles", min_cycles}};
}

bool gauss_present(const Model& m) {
    return std::any_of(m.st.begin(), m.st.end(), [](const StateDyn& d) { return d.present && d.gauss; });
}

template <class F>
std::vector<double> field(const ExcursionBatch& b, F f) {
    std::vector<double> v;
    v.reserve(b.cycles.size());
    for (const auto& c : b.cycles) v.push_back(f(c));
    return v;
}

/// sign(x) log(1 + |x|) for arbitrary-range x.
double slog(const XReal& x) {
    if (x.is_zero()) return 0.0;
    const double la = x.log_abs();
    const double v = la > 30 ? la : std::log1p(std::exp(la));
    return x.sign() * v;
}

}  // namespace

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::ConvergesAS:
            return "ConvergesAS";
        case Verdict::ConvergesInProbabilityOnly:
            return "ConvergesInProbabilityOnly";
        case Verdict::ConvergesInProbability:
            return "ConvergesInProbability";
        case Verdict::Degenerate:
            return "Degenerate";
        case Verdict::DivergesInProbability:
            return "DivergesInProbability";
        case Verdict::Indeterminate:
            return "Indeterminate";
    }
    return "?";
}

const char* to_string(XiDiag d) {
    switch (d) {
        case XiDiag::PassesToInfinity:
            return "PassesToInfinity";
        case XiDiag::Fails:
            return "Fails";
        case XiDiag::Indeterminate:
            return "Indeterminate";
    }
    return "?";
}

json config_to_json(const CriterionConfig& c) {
    return {{"n_paths", c.n_paths},
            {"cycles", c.cycles},
            {"max_events", c.max_events},
            {"min_cycles", c.min_cycles},
            {"anchors", c.anchors},
            {"max_petal_anchors", c.max_petal_anchors},
            {"probe_paths", c.probe_paths},
            {"probe_horizon", c.probe_horizon},
            {"corroborate", c.corroborate},
            {"ladder", c.ladder},
            {"tstat", c.tstat},
            {"sufficient", c.sufficient},
            {"quad",
             {{"doublings", c.quad.doublings},
              {"steps", c.quad.steps},
              {"rel_tol", c.quad.rel_tol},
              {"last", c.quad.last},
              {"min_exceed", c.quad.min_exceed},
              {"min_samples", c.quad.min_samples},
              {"bootstrap", c.quad.bootstrap}}}};
}

CriterionConfig config_from_json(const json& j, CriterionConfig c) {
    if (!j.is_object()) throw ParseError("config must be a JSON object");
    try {
        auto get = [&j](const char* k, auto& v) {
            if (j.contains(k)) v = j.at(k).get<std::decay_t<decltype(v)>>();
        };
        get("n_paths", c.n_paths);
        get("cycles", c.cycles);
        get("max_events", c.max_events);
        get("min_cycles", c.min_cycles);
        get("anchors", c.anchors);
        get("max_petal_anchors", c.max_petal_anchors);
        get("probe_paths", c.probe_paths);
        get("probe_horizon", c.probe_horizon);
        get("corroborate", c.corroborate);
        get("ladder", c.ladder);
        get("tstat", c.tstat);
        get("sufficient", c.sufficient);
        get("seed", c.seed);
        if (j.contains("quad")) {
            const json& q = j.at("quad");
            auto getq = [&q](const char* k, auto& v) {
                if (q.contains(k)) v = q.at(k).get<std::decay_t<decltype(v)>>();
            };
            getq("doublings", c.quad.doublings);
            getq("steps", c.quad.steps);
            getq("rel_tol", c.quad.rel_tol);
            getq("last", c.quad.last);
            getq("min_exceed", c.quad.min_exceed);
            getq("min_samples", c.quad.min_samples);
            getq("bootstrap", c.quad.bootstrap);
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    if (c.n_paths < 100) throw ParseError("config: n_paths must be at least 100");
    if (c.ladder.empty()) throw ParseError("config: ladder must not be empty");
    if (c.quad.doublings < c.quad.last + 1 || c.quad.steps < 1) throw ParseError("config: bad quadrature settings");
    return c;
}

Triplet state_triplet(const MapSpec& spec, const Model& m, int j) {
    if (!m.petal) return spec.states.at(static_cast<std::size_t>(j));
    if (j == 1) return spec.hub;
    if (j == 0) return spec.sat;
    return spec.petal.at(m.st.at(static_cast<std::size_t>(j)).weight);
}

std::vector<int> default_anchors(const Model& m, const CriterionConfig& cfg) {
    std::vector<int> a;
    if (!cfg.anchors.empty()) {
        for (int j : cfg.anchors) {
            if (j < 0 || j >= static_cast<int>(m.st.size()) || !m.st[j].present)
                throw std::invalid_argument("anchor " + std::to_string(j) + " is not a state of the model");
            a.push_back(j);
        }
        return a;
    }
    if (!m.petal) {
        for (int j = 0; j < static_cast<int>(m.st.size()); ++j) a.push_back(j);
        return a;
    }
    a.push_back(1);
    if (m.st[0].present) a.push_back(0);
    std::vector<int> pet;
    for (int j = 2; j < static_cast<int>(m.st.size()); ++j)
        if (m.st[j].present) pet.push_back(j);
    std::stable_sort(pet.begin(), pet.end(), [&m](int x, int y) { return m.st[x].weight > m.st[y].weight; });
    for (int k = 0; k < static_cast<int>(pet.size()) && k < cfg.max_petal_anchors; ++k) a.push_back(pet[k]);
    return a;
}

AnchorCycles::AnchorCycles(const Model& m, const CriterionConfig& cfg)
    : m_(&m), cfg_(&cfg), block_(m.n_present() == 1 ? 1.0 : 0.0), cache_(m.st.size()) {}

const ExcursionBatch* AnchorCycles::get(int j) {
    auto& slot = cache_.at(static_cast<std::size_t>(j));
    if (!slot)
        slot = collect_cycles(*m_, j, cfg_->cycles, cfg_->max_events, stream_seed(cfg_->seed, kPurposeCycles, j),
                              block_);
    return &*slot;
}

XiDiagResult xi_divergence_diagnostic(const MapSpec& spec, const Model& m, AnchorCycles& cyc, int j,
                                      const CriterionConfig& cfg) {
    XiDiagResult r;
    if (!m.petal) {
        const ExtReal k = long_term_mean(spec, Component::Xi);
        if (k.kind == ExtReal::Kind::PosInf || (k.finite() && k.value > 0)) {
            r.status = XiDiag::PassesToInfinity;
            r.analytic = true;
            r.note = "kappa_xi = " + k.str() + " > 0";
            return r;
        }
        if (k.kind == ExtReal::Kind::NegInf || (k.finite() && k.value <= 0)) {
            r.status = XiDiag::Fails;
            r.analytic = true;
            r.note = "kappa_xi = " + k.str() + " <= 0";
            return r;
        }
    }
    const ExcursionBatch& b = *cyc.get(j);
    r.n = b.cycles.size();
    if (r.n < cfg.min_cycles) {
        r.note = "untested (budget): " + std::to_string(r.n) + " cycles";
        return r;
    }
    const auto x = field(b, [](const CycleSample& c) { return c.xi_tau; });
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    r.mean = mean;
    if (!std::isfinite(mean)) {
        r.note = "non-finite cycle increments";
        return r;
    }
    if (sd == 0.0) {
        r.tstat = mean > 0 ? HUGE_VAL : (mean < 0 ? -HUGE_VAL : 0.0);
        r.status = mean > 0 ? XiDiag::PassesToInfinity : XiDiag::Fails;
        r.note = "constant cycle increment";
        return r;
    }
    r.tstat = mean / (sd / std::sqrt(n));
    if (r.tstat > cfg.tstat)
        r.status = XiDiag::PassesToInfinity;
    else if (r.tstat < -cfg.tstat)
        r.status = XiDiag::Fails;
    r.note = "t statistic of xi over return cycles";
    return r;
}

std::vector<std::pair<int, XiDiagResult>> xi_divergence_diagnostic(const MapSpec& spec, const CriterionConfig& cfg) {
    const Model m = compile(spec);
    AnchorCycles cyc(m, cfg);
    std::vector<std::pair<int, XiDiagResult>> out;
    for (int j : default_anchors(m, cfg)) out.emplace_back(j, xi_divergence_diagnostic(spec, m, cyc, j, cfg));
    return out;
}

QuadratureResult as_criterion(const ExcursionBatch& b, const QuadConfig& q) {
    const auto w = field(b, [](const CycleSample& c) { return c.log_w; });
    const auto x = field(b, [](const CycleSample& c) { return c.xi_tau; });
    return log_moment_test(w, Denominator::empirical_xi_tail(x), q);
}

std::vector<std::pair<int, QuadratureResult>> as_criterion(const MapSpec& spec, const CriterionConfig& cfg) {
    const Model m = compile(spec);
    AnchorCycles cyc(m, cfg);
    std::vector<std::pair<int, QuadratureResult>> out;
    for (int j : default_anchors(m, cfg)) {
        const ExcursionBatch& b = *cyc.get(j);
        if (b.cycles.size() < cfg.min_cycles) {
            QuadratureResult r;
            r.verdict = QuadratureResult::Verdict::Indeterminate;
            r.note = "NoCompleteCycle: too few return cycles within the budget";
            out.emplace_back(j, r);
            continue;
        }
        out.emplace_back(j, as_criterion(b, cfg.quad));
    }
    return out;
}

QuadratureResult prob_criterion(const MapSpec& spec, const Model& m, int j, const ExcursionBatch* b,
                                const QuadConfig& q) {
    QuadratureResult r;
    const Triplet t = state_triplet(spec, m, j);
    const XiLevy xi = XiLevy::from(t);
    const double qjj = m.st[j].exit;
    Denominator dd = Denominator::constant(0.0);
    double p_gt1 = 0.0;
    std::vector<double> eta_inc, exc_int;
    if (qjj > 0) {
        if (!b || b->cycles.empty()) {
            r.verdict = QuadratureResult::Verdict::Indeterminate;
            r.note = "NoCompleteCycle";
            return r;
        }
        const auto D = field(*b, [](const CycleSample& c) { return c.conf_jump; });
        p_gt1 = static_cast<double>(std::count_if(D.begin(), D.end(), [](double v) { return v > 1.0; })) /
                static_cast<double>(D.size());
        dd = Denominator::empirical_xi_tail(D);
        eta_inc = field(*b, [](const CycleSample& c) { return c.log_eta_inc; });
        exc_int = field(*b, [](const CycleSample& c) { return c.log_exc_int; });
    }
    const double d1 = dd.D(1.0);
    auto A = [&](double x) { return a_fn(xi, x) + qjj * (dd.D(x) - d1 + p_gt1); };
    double a = 0.0;
    try {
        a = a_root(A);
    } catch (const NotEventuallyPositive& e) {
        r.verdict = QuadratureResult::Verdict::Indeterminate;
        r.note = std::string("PreconditionFailed: ") + e.what();
        return r;
    }
    const LogMeasure eta = eta_jump_measure(t);
    std::vector<Piece> pieces;
    if (!eta.empty()) pieces.push_back({1.0, &eta, nullptr});
    EmpiricalTail e1, e2;
    if (qjj > 0) {
        e1 = empirical_tail(eta_inc, q);
        e2 = empirical_tail(exc_int, q);
        pieces.push_back({qjj, nullptr, &e1});
        pieces.push_back({qjj, nullptr, &e2});
    }
    auto g = [&](double u) {
        const double v = A(u);
        return v > 0 ? u / v : NAN;
    };
    r = integrate_pieces(g, pieces, a, q);
    char buf[96];
    std::snprintf(buf, sizeof buf, "a = %.6g", a);
    r.note = r.note.empty() ? buf : r.note + "; " + buf;
    return r;
}

std::vector<std::pair<int, QuadratureResult>> prob_criterion(const MapSpec& spec, const CriterionConfig& cfg) {
    const Model m = compile(spec);
    AnchorCycles cyc(m, cfg);
    std::vector<std::pair<int, QuadratureResult>> out;
    for (int j : default_anchors(m, cfg)) {
        const ExcursionBatch* b = nullptr;
        if (m.st[j].exit > 0) {
            b = cyc.get(j);
            if (b->cycles.size() < cfg.min_cycles) b = nullptr;
        }
        out.emplace_back(j, prob_criterion(spec, m, j, b, cfg.quad));
    }
    return out;
}

std::pair<MapSpec, MapSpec> decompose_e1_e2(const MapSpec& spec) {
    const bool g = compile(spec).gauss_any;
    MapSpec e1 = spec, e2 = spec;
    e1.gauss_hint = e2.gauss_hint = g;
    e1.part = e2.part = true;
    auto small = [](Triplet& t) { t.law.ypart = BivLaw::YPart::Small; };
    auto big = [](Triplet& t) {
        t.by = Mag();
        t.syy = t.sxy = 0.0;
        t.sj_vy = 0.0;
        t.law.ypart = BivLaw::YPart::Big;
    };
    auto no_y = [](BivLaw& l) { l.ypart = BivLaw::YPart::None; };
    for (auto& t : e1.states) small(t);
    for (auto& t : e2.states) big(t);
    for (auto& [k, l] : e1.switch_laws) no_y(l);
    small(e1.hub);
    small(e1.sat);
    big(e2.hub);
    big(e2.sat);
    e1.petal.law.ypart = BivLaw::YPart::Small;
    e2.petal.by = Coef{};
    e2.petal.syy = e2.petal.sxy = 0.0;
    e2.petal.law.ypart = BivLaw::YPart::Big;
    for (PetalSwitch* s : {&e1.hub_to_petal, &e1.petal_to_hub, &e1.sat_to_attach, &e1.attach_to_sat}) {
        if (s->coef)
            s->y = Coef{};
        else
            no_y(s->law);
    }
    return {e1, e2};
}

ProbeResult degeneracy_probe(const Model& m, const CriterionConfig& cfg, std::uint64_t seed) {
    ProbeResult pr;
    std::vector<MapPath> paths(cfg.probe_paths);
    parallel_for(paths.size(), cfg.threads, [&](std::size_t i) {
        // staggered horizons keep the terminal multipliers distinct on deterministic paths
        SimOptions o;
        o.horizon = cfg.probe_horizon * static_cast<double>(i + 1) / static_cast<double>(paths.size());
        paths[i] = simulate_path(m, o, stream_seed(seed, kPurposeProbe, i));
    });
    std::vector<DegSample> samples;
    for (const auto& p : paths) {
        const auto s = to_samples(discretize_at_jumps(p, true));
        samples.insert(samples.end(), s.begin(), s.end());
    }
    DegeneracyOptions o;
    o.diffusive = gauss_present(m);
    o.mesh = auto_mesh(m);
    pr.solve = degeneracy_solve(samples, o);
    if (pr.solve.found()) {
        const double tol = o.diffusive ? 5.0 * o.mesh : 1e-8;
        pr.verified = true;
        try {
            for (const auto& p : paths) {
                const IdentityCheck ic = verify_degenerate_identity(p, pr.solve.constants, tol);
                pr.max_dev = std::max(pr.max_dev, ic.max_dev);
                pr.verified = pr.verified && ic.ok;
            }
        } catch (const std::invalid_argument& e) {
            // a visited state without a usable sample has no constant
            pr.verified = false;
            pr.solve.note = e.what();
        }
    }
    return pr;
}

SuiteResult sufficient_suite(const MapSpec& spec, const CriterionConfig& cfg) {
    SuiteResult s;
    const Model m = compile(spec);
    const ExtReal k = long_term_mean(spec, Component::Xi);
    const bool a_ok = k.finite() && k.value > 0;
    s.evidence.push_back({"kappa_positive_finite", "analytic", -1, {{"pass", a_ok}, {"kappa", k.str()}}});

    bool b_ok = true;
    std::string b_msg = "holds: finite state space";
    if (m.petal) {
        if (!spec.petal.by.bounded()) {
            b_ok = false;
            b_msg = "fails: sup_j γ_{η⁽ʲ⁾} = ∞";
        } else {
            b_msg = "holds: petal eta coefficients are bounded in the weight";
        }
    }
    s.evidence.push_back({"eta_coefficients_bounded", "analytic", -1, {{"pass", b_ok}, {"message", b_msg}}});

    const MapSpec e2 = decompose_e1_e2(spec).second;
    const Model m2 = compile(e2);
    const int j = default_anchors(m2, cfg).front();
    const ExcursionBatch b = collect_cycles(m2, j, cfg.cycles, cfg.max_events,
                                            stream_seed(cfg.seed, kPurposeCycles, 1000 + j), m2.n_present() == 1 ? 1.0 : 0.0);
    bool c_as = false, abar_as = false;
    if (b.cycles.size() >= cfg.min_cycles) {
        const auto mj = field(b, [](const CycleSample& c) { return c.log_maxjump; });
        const auto ci = field(b, [](const CycleSample& c) { return c.log_cyc_int; });
        const QuadratureResult ra = log_moment_test(mj, Denominator::constant(1.0), cfg.quad);
        const QuadratureResult rp = log_moment_test(ci, Denominator::constant(1.0), cfg.quad);
        c_as = ra.verdict == QuadratureResult::Verdict::Finite;
        s.evidence.push_back({"e2_big_jump_log_moment", "empirical", j, quad_to_json(ra)});
        s.evidence.push_back({"e2_cycle_integral_log_moment", "empirical", j, quad_to_json(rp)});
        if (!m.petal && (k.kind == ExtReal::Kind::PosInf || a_ok)) {
            const Denominator ab = Denominator::a_bar(spec);
            const QuadratureResult rb = log_moment_test(mj, ab, cfg.quad);
            abar_as = rb.verdict == QuadratureResult::Verdict::Finite;
            s.evidence.push_back({"e2_big_jump_abar", "empirical", j, quad_to_json(rb)});
            s.evidence.push_back(
                {"e2_cycle_integral_abar", "empirical", j, quad_to_json(log_moment_test(ci, ab, cfg.quad))});
        }
    } else {
        s.evidence.push_back({"e2_big_jump_log_moment", "empirical", j, cycles_note(b, cfg.min_cycles)});
    }
    const ProbeResult pr = degeneracy_probe(m2, cfg, stream_seed(cfg.seed, kPurposeProbe, 1000));
    s.evidence.push_back({"e2_nondegenerate",
                          "empirical",
                          -1,
                          {{"status", to_string(pr.solve.status)},
                           {"pass", pr.solve.status == DegeneracyResult::Status::None},
                           {"residual", num(pr.solve.residual)}}});
    // finite state space: the E1 part needs only kappa > 0, and the A-bar test covers E2 even for kappa = inf
    s.converges_as = (a_ok && b_ok && c_as) || (!m.petal && abar_as);
    s.conclusion = s.converges_as ? "ConvergesAS (sufficient conditions)" : "not established by sufficient conditions";
    return s;
}

Corroboration corroborate(const Model& m, const std::vector<double>& ladder, std::size_t n_paths, std::uint64_t seed,
                          int threads, std::size_t fan_paths) {
    Corroboration c;
    c.T = ladder;
    c.n_paths = n_paths;
    const std::size_t L = ladder.size();
    const double horizon = 2.0 * *std::max_element(ladder.begin(), ladder.end());
    SimOptions o;
    o.horizon = horizon;
    for (double T : ladder) {
        o.stops.push_back(T);
        o.stops.push_back(2.0 * T);
    }
    std::sort(o.stops.begin(), o.stops.end());
    std::vector<std::vector<double>> sup(n_paths, std::vector<double>(L)), absE(n_paths, std::vector<double>(L));
    const std::size_t c_fan_size = std::min(fan_paths, n_paths);
    auto& fan = c.fan;
    fan.resize(c_fan_size);
    parallel_for(n_paths, threads, [&](std::size_t i) {
        PathStream ps(m, o, stream_seed(seed, kPurposeCorroborate, i));
        std::vector<XReal> ET(L), sup_inc(L);
        // increments are summed from the point contributions: E(t) - E(T) can sit far below the
        // resolution of E(T)
        std::vector<ExactSum> inc(L);
        Point p;
        double xi = 0.0, t = 0.0, next_rec = 0.0;
        while (ps.next(p)) {
            XReal c;
            if (p.mark != Mark::Start)
                c = cell_integral(xi, 0.0, p.bxi * (p.t - t), p.deta_c) + jump_integral(xi + p.dxi_c, 0.0, p.deta_j);
            xi = p.xi;
            t = p.t;
            for (std::size_t k = 0; k < L; ++k) {
                if (p.t <= ladder[k]) {
                    ET[k] = p.E;
                } else if (p.t <= 2.0 * ladder[k] && !c.is_zero()) {
                    inc[k].add(c);
                    const XReal v = inc[k].value();
                    if (abs_less(sup_inc[k], v)) sup_inc[k] = v;
                }
            }
            if (i < c_fan_size && (p.t >= next_rec || p.mark == Mark::End)) {
                fan[i].emplace_back(p.t, slog(p.E));
                next_rec = p.t + horizon / 400.0;
            }
        }
        for (std::size_t k = 0; k < L; ++k) {
            sup[i][k] = sup_inc[k].log_abs();
            absE[i][k] = ET[k].log_abs();
        }
    });
    for (std::size_t k = 0; k < L; ++k) {
        std::vector<double> a, b;
        for (std::size_t i = 0; i < n_paths; ++i) {
            a.push_back(sup[i][k]);
            b.push_back(absE[i][k]);
        }
        c.log_med_sup.push_back(median(a));
        c.log_med_absE.push_back(median(b));
    }
    return c;
}

json quad_to_json(const QuadratureResult& q) {
    json tr = json::array();
    for (auto [x, v] : q.trace) tr.push_back({num(x), num(v)});
    json j{{"value", num(q.value)},
           {"abs_error", num(q.abs_error)},
           {"verdict", to_string(q.verdict)},
           {"trace", tr},
           {"note", q.note}};
    if (std::isfinite(q.band_lo)) j["band"] = {num(q.band_lo), num(q.band_hi)};
    return j;
}

namespace {

json degeneracy_json(const DegeneracyResult& d) {
    json c = json::object();
    for (auto [k, v] : d.constants) c[std::to_string(k)] = num(v);
    return {{"status", to_string(d.status)},
            {"constants", c},
            {"residual", num(d.residual)},
            {"tolerance", num(d.tolerance)},
            {"n_samples", d.n_samples},
            {"note", d.note}};
}

json corroboration_json(const Corroboration& c) {
    bool dec = true, inc = true;
    for (std::size_t k = 1; k < c.T.size(); ++k) {
        dec = dec && c.log_med_sup[k] < c.log_med_sup[k - 1];
        inc = inc && c.log_med_absE[k] > c.log_med_absE[k - 1];
    }
    json ls = json::array(), la = json::array();
    for (std::size_t k = 0; k < c.T.size(); ++k) {
        ls.push_back(num(c.log_med_sup[k]));
        la.push_back(num(c.log_med_absE[k]));
    }
    return {{"T", c.T},
            {"log_median_sup_increment", ls},
            {"log_median_abs_E", la},
            {"sup_increment_decreasing", dec},
            {"abs_E_increasing", inc},
            {"n_paths", c.n_paths}};
}

}  // namespace

ClassificationReport classify(const MapSpec& spec, const CriterionConfig& cfg) {
    ClassificationReport r;
    r.config = cfg;
    const Model m = compile(spec);
    const std::vector<int> anchors = default_anchors(m, cfg);
    auto add = [&r](std::string c, std::string mode, int s, json res) {
        r.evidence.push_back({std::move(c), std::move(mode), s, std::move(res)});
    };
    {
        std::string list;
        for (int j : anchors) list += (list.empty() ? "" : ",") + std::to_string(j);
        r.assumptions.push_back("anchor states tested: " + list);
    }
    if (m.countable)
        r.assumptions.push_back("countable state space: conditions quantified over all states are sampled at the "
                                "tested anchors, not verified");
    if (m.small_block) r.assumptions.push_back("small jumps approximated by a Gaussian block");
    r.assumptions.push_back("cycle laws are empirical; quadrature verdicts are evidence, not proof");
    if (m.n_present() == 1) r.assumptions.push_back("single state: unit-time blocks replace return cycles");

    const bool corr = cfg.corroborate;
    auto finish = [&](Verdict v) {
        r.verdict = v;
        if (corr) {
            r.corroboration =
                corroborate(m, cfg.ladder, cfg.n_paths, stream_seed(cfg.seed, kPurposeCorroborate, 0), cfg.threads);
            add("trajectory_statistics", "empirical", -1, corroboration_json(*r.corroboration));
        }
        if (cfg.sufficient && v != Verdict::Degenerate) {
            const SuiteResult s = sufficient_suite(spec, cfg);
            for (const auto& e : s.evidence) r.evidence.push_back({"sufficient:" + e.criterion, e.mode, e.state, e.result});
            add("sufficient:conclusion", "analytic", -1, {{"converges_as", s.converges_as}, {"message", s.conclusion}});
        }
        return r;
    };

    // (1) degeneracy
    const ProbeResult pr = degeneracy_probe(m, cfg, cfg.seed);
    {
        json d = degeneracy_json(pr.solve);
        d["verified"] = pr.verified;
        d["max_identity_deviation"] = num(pr.max_dev);
        add("degeneracy", "empirical", -1, d);
    }
    if (pr.solve.found() && pr.verified) {
        r.degeneracy = pr.solve;
        return finish(Verdict::Degenerate);
    }
    const bool probe_none = pr.solve.status == DegeneracyResult::Status::None;

    // (2) xi divergence along return times
    AnchorCycles cyc(m, cfg);
    std::vector<std::optional<XiDiagResult>> xd(m.st.size());
    auto diag = [&](int j) -> const XiDiagResult& {
        auto& s = xd[j];
        if (!s) {
            s = xi_divergence_diagnostic(spec, m, cyc, j, cfg);
            add("xi_divergence", s->analytic ? "analytic" : "empirical", j, xidiag_json(*s));
        }
        return *s;
    };
    bool any_pass = false, all_fail = true;
    for (int j : anchors) {
        const XiDiag d = diag(j).status;
        if (d == XiDiag::PassesToInfinity) {
            any_pass = true;
            all_fail = false;
            break;
        }
        if (d != XiDiag::Fails) all_fail = false;
    }
    if (all_fail) return finish(Verdict::DivergesInProbability);
    if (!any_pass) return finish(Verdict::Indeterminate);

    // (3) almost sure criterion at every tested anchor
    bool as_all = true, as_div = false;
    int as_tested = 0;
    for (int j : anchors) {
        const XiDiagResult& dj = diag(j);
        const ExcursionBatch& b = *cyc.get(j);
        if (b.cycles.size() < cfg.min_cycles) {
            add("as_criterion", "empirical", j, cycles_note(b, cfg.min_cycles));
            continue;
        }
        if (dj.status != XiDiag::PassesToInfinity) {
            as_all = false;
            break;
        }
        const QuadratureResult q = as_criterion(b, cfg.quad);
        json res = quad_to_json(q);
        res["cycles"] = b.cycles.size();
        res["discarded_cycles"] = b.discarded;
        add("as_criterion", "empirical", j, res);
        ++as_tested;
        if (q.verdict != QuadratureResult::Verdict::Finite) {
            as_all = false;
            as_div = q.verdict == QuadratureResult::Verdict::DivergentEvidence;
            break;
        }
    }
    if (as_all && as_tested > 0) return finish(Verdict::ConvergesAS);

    // (4)-(5) in-probability criterion, stopping at the first finite anchor
    int n_div = 0, n_other = 0;
    for (int j : anchors) {
        const ExcursionBatch* b = nullptr;
        if (m.st[j].exit > 0) {
            b = cyc.get(j);
            if (b->cycles.size() < cfg.min_cycles) {
                add("prob_criterion", "empirical", j, cycles_note(*b, cfg.min_cycles));
                continue;
            }
        }
        const QuadratureResult q = prob_criterion(spec, m, j, b, cfg.quad);
        add("prob_criterion", b ? "empirical" : "analytic", j, quad_to_json(q));
        if (q.verdict == QuadratureResult::Verdict::Finite) {
            if (!m.countable) {
                if (probe_none) {
                    r.assumptions.push_back("finite state space and no degeneracy: in-probability convergence "
                                            "upgraded to almost sure");
                    return finish(Verdict::ConvergesAS);
                }
                return finish(Verdict::ConvergesInProbability);
            }
            return finish(as_div ? Verdict::ConvergesInProbabilityOnly : Verdict::ConvergesInProbability);
        }
        if (q.verdict == QuadratureResult::Verdict::DivergentEvidence)
            ++n_div;
        else
            ++n_other;
    }
    if (n_div > 0 && n_other == 0) return finish(Verdict::DivergesInProbability);
    return finish(Verdict::Indeterminate);
}

json report_to_json(const ClassificationReport& r) {
    json ev = json::array();
    for (const auto& e : r.evidence) {
        ev.push_back({{"criterion", e.criterion},
                      {"mode", e.mode},
                      {"state", e.state < 0 ? json(nullptr) : json(e.state)},
                      {"result", e.result}});
    }
    json j{{"verdict", to_string(r.verdict)},
           {"evidence", ev},
           {"assumptions", r.assumptions},
           {"config", config_to_json(r.config)},
           {"seed", r.config.seed}};
    if (r.degeneracy) j["degeneracy"] = degeneracy_json(*r.degeneracy);
    if (r.corroboration) j["corroboration"] = corroboration_json(*r.corroboration);
    return j;
}

EstimateResult estimate_limit(const Model& m, double horizon, std::size_t n_paths, std::uint64_t seed, int threads,
                              double mesh) {
    std::vector<double> v(n_paths);
    parallel_for(n_paths, threads, [&](std::size_t i) {
        SimOptions o;
        o.horizon = horizon;
        o.mesh = mesh;
        PathStream ps(m, o, stream_seed(seed, kPurposeEstimate, i));
        Point p;
        XReal E;
        while (ps.next(p)) E = p.E;
        v[i] = E.to_double();
    });
    EstimateResult r;
    for (double x : v) {
        if (std::isfinite(x))
            r.values.push_back(x);
        else
            ++r.non_finite;
    }
    std::sort(r.values.begin(), r.values.end());
    const std::size_t n = r.values.size();
    if (n == 0) return r;
    const double nn = static_cast<double>(n);
    r.mean = std::accumulate(r.values.begin(), r.values.end(), 0.0) / nn;
    double m2 = 0.0, m4 = 0.0;
    for (double x : r.values) {
        const double d = (x - r.mean) * (x - r.mean);
        m2 += d;
        m4 += d * d;
    }
    r.var = n > 1 ? m2 / (nn - 1.0) : 0.0;
    r.se_mean = std::sqrt(r.var / nn);
    m4 /= nn;
    r.se_var = std::sqrt(std::max(0.0, m4 - (m2 / nn) * (m2 / nn)) / nn);
    for (double p : {0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99}) r.quantiles.emplace_back(p, quantile_sorted(r.values, p));
    const double lo = r.values.front(), hi = r.values.back();
    const std::size_t bins = 40;
    r.hist_counts.assign(bins, 0);
    for (std::size_t k = 0; k <= bins; ++k) r.hist_edges.push_back(lo + (hi - lo) * static_cast<double>(k) / bins);
    for (double x : r.values) {
        std::size_t k = hi > lo ? static_cast<std::size_t>((x - lo) / (hi - lo) * bins) : 0;
        r.hist_counts[std::min(k, bins - 1)]++;
    }
    return r;
}

double suggested_horizon(const MapSpec& spec) {
    const ExtReal k = long_term_mean(spec, Component::Xi);
    if (k.finite() && k.value > 0) return 2.0 * std::log(1e6) / k.value;
    return 0.0;
}

}  // namespace mapexp
