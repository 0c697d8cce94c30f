#include "mapexp/simulate.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>

#include "mapexp/rng.hpp"

namespace mapexp {

namespace {

constexpr std::uint64_t kChainKey = 0xC4A1;
constexpr std::uint64_t kAddKey = 0xADD1;

int start_state(const Model& m, int start) {
    const int s = start >= 0 ? start : m.first_state();
    if (s >= static_cast<int>(m.st.size()) || !m.st[s].present)
        throw std::invalid_argument("start state " + std::to_string(s) + " is not part of the model");
    return s;
}

double log_abs(const XReal& x) { return x.log_abs(); }

}  // namespace

std::vector<double> ChainPath::return_times(int j) const {
    std::vector<double> r;
    for (std::size_t n = 1; n < states.size(); ++n)
        if (states[n] == j && states[n - 1] != j) r.push_back(times[n]);
    return r;
}

std::vector<double> ChainPath::exit_times(int j) const {
    std::vector<double> r;
    for (std::size_t n = 1; n < states.size(); ++n)
        if (states[n - 1] == j && states[n] != j) r.push_back(times[n]);
    return r;
}

double ChainPath::occupation(int j) const {
    double s = 0.0;
    for (std::size_t n = 0; n < states.size(); ++n) {
        const double end = n + 1 < times.size() ? times[n + 1] : horizon;
        if (states[n] == j) s += end - times[n];
    }
    return s;
}

ChainSampler::ChainSampler(const Model& m, int start, std::uint64_t seed)
    : m_(&m), rng_(seed), state_(start_state(m, start)) {
    draw(0.0);
}

void ChainSampler::draw(double now) {
    const StateDyn& d = m_->st[state_];
    if (!(d.exit > 0) || d.to.empty()) {
        t_next_ = HUGE_VAL;
        next_ = state_;
        return;
    }
    std::exponential_distribution<double> e;
    std::uniform_real_distribution<double> u;
    t_next_ = now + e(rng_) / d.exit;
    const double v = u(rng_);
    const auto k = static_cast<std::size_t>(std::lower_bound(d.cum.begin(), d.cum.end(), v) - d.cum.begin());
    next_ = d.to[std::min(k, d.to.size() - 1)];
}

void ChainSampler::advance() {
    state_ = next_;
    draw(t_next_);
}

ChainPath simulate_chain(const Model& m, double horizon, std::uint64_t seed, int start) {
    ChainSampler cs(m, start, splitmix64(seed ^ kChainKey));
    ChainPath p;
    p.horizon = horizon;
    p.times.push_back(0.0);
    p.states.push_back(cs.state());
    while (cs.next_time() < horizon) {
        p.times.push_back(cs.next_time());
        cs.advance();
        p.states.push_back(cs.state());
    }
    return p;
}

const char* to_string(Mark m) {
    switch (m) {
        case Mark::Start:
            return "start";
        case Mark::Grid:
            return "grid";
        case Mark::Levy:
            return "levy";
        case Mark::Switch:
            return "switch";
        case Mark::End:
            return "end";
    }
    return "?";
}

double auto_mesh(const Model& m) { return std::min(0.01, m.min_hold / 50.0); }

double phi1(double z) {
    if (std::fabs(z) < 1e-5) return 1.0 - z / 2.0 + z * z / 6.0;
    return -std::expm1(-z) / z;
}

XReal cell_integral(double xi_left, double base, double bdx, const Mag& deta_c) {
    if (deta_c.is_zero()) return XReal();
    return Mag(deta_c.m * phi1(bdx), deta_c.L).scaled(xi_left - base);
}

XReal jump_integral(double xi_left, double base, const Mag& deta_j) { return deta_j.scaled(xi_left - base); }

PathStream::PathStream(const Model& m, const SimOptions& o, std::uint64_t seed, const ChainPath* chain)
    : m_(&m), o_(o), cp_(chain), rng_(splitmix64(seed ^ kAddKey)) {
    if (cp_) {
        if (cp_->states.empty()) throw std::invalid_argument("empty chain path");
        s_ = start_state(m, cp_->states[0]);
    } else {
        s_ = start_state(m, o.start);
        cs_.emplace(m, s_, splitmix64(seed ^ kChainKey));
    }
    h_ = o.mesh > 0 ? o.mesh : auto_mesh(m);
    grid_ = o.grid == GridPolicy::Always || (o.grid == GridPolicy::Auto && (m.gauss_any || m.small_block));
    draw_levy(0.0);
}

double PathStream::chain_time() const {
    if (cs_) return cs_->next_time();
    return cp_idx_ + 1 < cp_->times.size() ? cp_->times[cp_idx_ + 1] : HUGE_VAL;
}

int PathStream::chain_next() const { return cs_ ? cs_->next_state() : cp_->states[cp_idx_ + 1]; }

void PathStream::chain_advance() {
    if (cs_)
        cs_->advance();
    else
        ++cp_idx_;
}

void PathStream::draw_levy(double now) {
    const double r = m_->st[s_].rate;
    t_levy_ = r > 0 ? now + expo_(rng_) / r : HUGE_VAL;
}

bool PathStream::next(Point& p) {
    if (done_) return false;
    if (!started_) {
        started_ = true;
        p = Point{};
        p.state = p.next = s_;
        return true;
    }
    const double tg = grid_ ? static_cast<double>(k_ + 1) * h_ : HUGE_VAL;
    const double tb = o_.block > 0 ? static_cast<double>(kb_ + 1) * o_.block : HUGE_VAL;
    const double tstop = stop_idx_ < o_.stops.size() ? o_.stops[stop_idx_] : HUGE_VAL;
    const double ts = chain_time();
    double tn = std::min({tg, tb, tstop, ts, t_levy_});
    Mark mk;
    if (tn >= o_.horizon) {
        tn = o_.horizon;
        mk = Mark::End;
    } else if (ts == tn) {
        mk = Mark::Switch;
    } else if (t_levy_ == tn) {
        mk = Mark::Levy;
    } else {
        mk = Mark::Grid;
    }
    p = Point{};
    p.grid = -1;
    if (tg <= tn) {
        ++k_;
        if (mk == Mark::Grid && tg == tn) p.grid = k_;
    }
    if (tb <= tn) ++kb_;
    while (stop_idx_ < o_.stops.size() && o_.stops[stop_idx_] <= tn) ++stop_idx_;

    const StateDyn& d = m_->st[s_];
    const double dt = tn - t_;
    double dxi = d.bx * dt;
    Mag deta(d.by.m * dt, d.by.L);
    if (m_->gauss_any) {
        const double z1 = norm_(rng_), z2 = norm_(rng_);
        if (d.gauss) {
            const double sd = std::sqrt(dt);
            dxi += d.gx * sd * z1;
            const double g = (d.gy1 * z1 + d.gy2 * z2) * sd;
            deta.m += d.by.L == 0.0 ? g : g * std::exp(-d.by.L);
        }
    }
    E_.add(cell_integral(xi_, 0.0, d.bx * dt, deta));
    if (!deta.is_zero()) eta_.add(deta.x());
    xi_ += dxi;

    p.t = tn;
    p.state = s_;
    p.mark = mk;
    p.dxi_c = dxi;
    p.deta_c = deta;
    p.bxi = d.bx;
    p.sig2 = d.sig2x;

    double jx = 0.0;
    Mag jy;
    if (mk == Mark::Levy) {
        d.law.sample(rng_, jx, jy);
        draw_levy(tn);
    } else if (mk == Mark::Switch) {
        const int nx = chain_next();
        const BivLaw* law = d.switch_to(nx);
        if (law) law->sample(rng_, jx, jy);
        chain_advance();
        s_ = nx;
        draw_levy(tn);
    } else if (mk == Mark::End) {
        done_ = true;
    }
    if (!jy.is_zero()) {
        E_.add(jump_integral(xi_, 0.0, jy));
        eta_.add(jy.x());
    }
    xi_ += jx;
    t_ = tn;

    p.next = s_;
    p.dxi_j = jx;
    p.deta_j = jy;
    p.xi = xi_;
    p.eta = eta_.value();
    p.E = E_.value();
    return true;
}

MapPath simulate_path(const Model& m, const SimOptions& o, std::uint64_t seed) {
    PathStream ps(m, o, seed);
    MapPath path;
    path.mesh = ps.mesh();
    path.seed = seed;
    Point p;
    while (ps.next(p)) path.pts.push_back(p);
    return path;
}

MapPath simulate_additive(const Model& m, const ChainPath& chain, SimOptions o, std::uint64_t seed) {
    o.horizon = chain.horizon;
    PathStream ps(m, o, seed, &chain);
    MapPath path;
    path.mesh = ps.mesh();
    path.seed = seed;
    Point p;
    while (ps.next(p)) path.pts.push_back(p);
    return path;
}

ExpIntegralTrace exp_integral(const MapPath& path) {
    ExpIntegralTrace tr;
    tr.E.reserve(path.pts.size());
    ExactSum E;
    double xi = 0.0, t = 0.0;
    for (const auto& p : path.pts) {
        if (p.mark != Mark::Start) {
            E.add(cell_integral(xi, 0.0, p.bxi * (p.t - t), p.deta_c));
            E.add(jump_integral(xi + p.dxi_c, 0.0, p.deta_j));
        }
        xi = p.xi;
        t = p.t;
        tr.E.push_back(E.value());
    }
    return tr;
}

MapPath coarsen(const MapPath& path, int m) {
    MapPath out;
    out.mesh = std::ldexp(path.mesh, m);
    out.seed = path.seed;
    const std::int64_t step = std::int64_t{1} << m;
    double pend_x = 0.0, pend_y = 0.0;
    for (const auto& p : path.pts) {
        if (p.mark == Mark::Grid && p.grid >= 0 && p.grid % step != 0) {
            pend_x += p.dxi_c;
            pend_y += p.deta_c.m;
            continue;
        }
        Point q = p;
        q.dxi_c += pend_x;
        q.deta_c.m += pend_y;
        pend_x = pend_y = 0.0;
        out.pts.push_back(q);
    }
    // recompute the running values on the merged cells
    ExactSum E, eta;
    double xi = 0.0, t = 0.0;
    for (auto& p : out.pts) {
        if (p.mark != Mark::Start) {
            E.add(cell_integral(xi, 0.0, p.bxi * (p.t - t), p.deta_c));
            E.add(jump_integral(xi + p.dxi_c, 0.0, p.deta_j));
            if (!p.deta_c.is_zero()) eta.add(p.deta_c.x());
            if (!p.deta_j.is_zero()) eta.add(p.deta_j.x());
            xi = xi + p.dxi_c + p.dxi_j;
        }
        t = p.t;
        p.xi = xi;
        p.eta = eta.value();
        p.E = E.value();
    }
    return out;
}

ConflatedPath conflate(const MapPath& path, int j) {
    if (path.pts.empty() || path.pts.front().next != j)
        throw AnchorMismatch("path does not start in state " + std::to_string(j));
    ConflatedPath c;
    const auto& p0 = path.pts.front();
    c.t.push_back(0.0);
    c.xi.push_back(p0.xi);
    c.E.push_back(p0.E);
    c.conf.push_back(0);
    double th = 0.0, t = 0.0;
    bool away = false;
    for (std::size_t i = 1; i < path.pts.size(); ++i) {
        const Point& p = path.pts[i];
        if (p.state == j) th += p.t - t;
        t = p.t;
        if (!away) {
            if (p.mark == Mark::Switch && p.next != j) {
                away = true;
                const double xl = p.xi - p.dxi_j;
                c.t.push_back(th);
                c.xi.push_back(xl);
                c.E.push_back(p.E - jump_integral(xl, 0.0, p.deta_j));
                c.conf.push_back(0);
            } else {
                c.t.push_back(th);
                c.xi.push_back(p.xi);
                c.E.push_back(p.E);
                c.conf.push_back(0);
            }
        } else if (p.mark == Mark::Switch && p.next == j) {
            away = false;
            c.t.push_back(th);
            c.xi.push_back(p.xi);
            c.E.push_back(p.E);
            c.conf.push_back(1);
            ++c.n_conf;
        }
    }
    c.length = th;
    return c;
}

CycleCollector::CycleCollector(int anchor, double block) : j_(anchor), block_(block) {}

void CycleCollector::close(double t) {
    CycleSample s;
    s.xi_tau = xi_prev_ - xi0_;
    s.log_w = log_w_;
    s.log_maxjump = log_max_;
    s.log_cyc_int = log_abs(local_.value());
    s.duration = t - t0_;
    if (block_ <= 0) {
        s.conf_jump = xi_prev_ - xi_exit_;
        s.log_eta_inc = log_abs(eta_exc_.value());
        s.log_exc_int = log_abs(exc_.value());
    }
    cycles_.push_back(s);
    t0_ = t;
    xi0_ = xi_prev_;
    local_.clear();
    log_w_ = log_max_ = -HUGE_VAL;
    away_ = false;
}

bool CycleCollector::push(const Point& p) {
    if (p.mark == Mark::Start) {
        if (block_ <= 0 && p.next != j_) throw AnchorMismatch("path does not start in state " + std::to_string(j_));
        t0_ = p.t;
        xi0_ = xi_prev_ = p.xi;
        return false;
    }
    const double bdx = p.bxi * (p.t - t_last_);
    t_last_ = p.t;
    local_.add(cell_integral(xi_prev_, xi0_, bdx, p.deta_c));
    log_w_ = std::max(log_w_, log_abs(local_.value()));
    if (away_) {
        exc_.add(cell_integral(xi_prev_, xi_exit_, bdx, p.deta_c));
        if (!p.deta_c.is_zero()) eta_exc_.add(p.deta_c.x());
    }
    const double xm = xi_prev_ + p.dxi_c;
    const bool exit = block_ <= 0 && p.mark == Mark::Switch && p.state == j_ && p.next != j_;
    if (exit) {
        away_ = true;
        xi_exit_ = xm;
        exc_.clear();
        eta_exc_.clear();
    }
    if (!p.deta_j.is_zero()) {
        const XReal jl = jump_integral(xm, xi0_, p.deta_j);
        local_.add(jl);
        log_max_ = std::max(log_max_, jl.log_abs());
        log_w_ = std::max(log_w_, log_abs(local_.value()));
        if (away_) {
            exc_.add(jump_integral(xm, xi_exit_, p.deta_j));
            eta_exc_.add(p.deta_j.x());
        }
    }
    xi_prev_ = p.xi;
    if (block_ > 0) {
        if (p.t >= static_cast<double>(next_block_) * block_) {
            ++next_block_;
            close(p.t);
            return true;
        }
        return false;
    }
    if (away_ && p.mark == Mark::Switch && p.next == j_) {
        close(p.t);
        return true;
    }
    return false;
}

std::size_t CycleCollector::finish() { return t_last_ > t0_ ? 1 : 0; }

ExcursionBatch excursion_stats(const std::vector<MapPath>& paths, int j, double block) {
    ExcursionBatch b;
    b.anchor = j;
    for (const auto& path : paths) {
        if (path.pts.empty() || path.pts.front().next != j)
            throw AnchorMismatch("path does not start in state " + std::to_string(j));
        CycleCollector cc(j, block);
        for (const auto& p : path.pts) cc.push(p);
        b.discarded += cc.finish();
        b.cycles.insert(b.cycles.end(), cc.cycles().begin(), cc.cycles().end());
    }
    if (b.cycles.empty()) throw NoCompleteCycle("no complete return cycle to state " + std::to_string(j));
    return b;
}

ExcursionBatch collect_cycles(const Model& m, int j, std::size_t target, std::size_t max_events, std::uint64_t seed,
                              double block) {
    SimOptions o;
    o.horizon = HUGE_VAL;
    o.start = j;
    o.block = block;
    PathStream ps(m, o, seed);
    CycleCollector cc(j, block);
    ExcursionBatch b;
    b.anchor = j;
    Point p;
    std::size_t events = 0;
    while (cc.cycles().size() < target && events < max_events && ps.next(p)) {
        cc.push(p);
        ++events;
    }
    b.discarded = cc.finish();
    b.cycles = std::move(cc.cycles());
    return b;
}

void write_csv(std::ostream& os, const MapPath& path) {
    os << "t,state,xi,eta,E,mark\n";
    char buf[256];
    for (const auto& p : path.pts) {
        const char* mk = (p.mark == Mark::Levy || p.mark == Mark::Switch) ? to_string(p.mark) : "grid";
        std::snprintf(buf, sizeof buf, "%.17g,%d,%.17g,%.17g,%.17g,%s\n", p.t, p.next, p.xi, p.eta.to_double(),
                      p.E.to_double(), mk);
        os << buf;
    }
}

}  // namespace mapexp
