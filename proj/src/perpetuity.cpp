#include "mapexp/perpetuity.hpp"

#include <algorithm>
#include <cmath>

namespace mapexp {

std::vector<XReal> perpetuity_partials(const std::vector<PerpetuityStep>& steps) {
    std::vector<XReal> out;
    out.reserve(steps.size());
    ExactSum Z;
    XReal P(1.0);
    for (const auto& s : steps) {
        Z.add(P * s.B);
        P = P * XReal::exp(-s.dxi);
        out.push_back(Z.value());
    }
    return out;
}

XReal perpetuity_iterate(const std::vector<PerpetuityStep>& steps, std::size_t n) {
    if (n > steps.size()) throw std::out_of_range("perpetuity_iterate: n exceeds the number of steps");
    if (n == 0) return XReal();
    return perpetuity_partials({steps.begin(), steps.begin() + static_cast<std::ptrdiff_t>(n)}).back();
}

std::vector<std::size_t> jump_indices(const MapPath& path) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < path.pts.size(); ++i)
        if (path.pts[i].mark == Mark::Switch) idx.push_back(i);
    return idx;
}

std::vector<PerpetuityStep> discretize_at_jumps(const MapPath& path, bool terminal) {
    std::vector<PerpetuityStep> steps;
    if (path.pts.empty()) return steps;
    double base = path.pts.front().xi, xi = base, t = path.pts.front().t;
    int from = path.pts.front().next;
    ExactSum B;
    bool open = false;
    for (std::size_t i = 1; i < path.pts.size(); ++i) {
        const Point& p = path.pts[i];
        B.add(cell_integral(xi, base, p.bxi * (p.t - t), p.deta_c));
        B.add(jump_integral(xi + p.dxi_c, base, p.deta_j));
        open = true;
        xi = p.xi;
        t = p.t;
        if (p.mark == Mark::Switch) {
            PerpetuityStep s;
            s.dxi = xi - base;
            s.B = B.value();
            s.from = from;
            s.to = p.next;
            steps.push_back(s);
            B.clear();
            base = xi;
            from = p.next;
            open = false;
        }
    }
    if (terminal && open) {
        PerpetuityStep s;
        s.dxi = xi - base;
        s.B = B.value();
        s.from = s.to = from;
        steps.push_back(s);
    }
    return steps;
}

std::vector<DegSample> to_samples(const std::vector<PerpetuityStep>& steps) {
    std::vector<DegSample> out;
    for (const auto& s : steps) {
        const double A = std::exp(-s.dxi), B = s.B.to_double();
        if (!std::isfinite(A) || !std::isfinite(B)) continue;
        out.push_back({A, B, s.from, s.to});
    }
    return out;
}

const char* to_string(DegeneracyResult::Status s) {
    switch (s) {
        case DegeneracyResult::Status::Solution:
            return "solution";
        case DegeneracyResult::Status::None:
            return "none";
        case DegeneracyResult::Status::InsufficientSamples:
            return "insufficient_samples";
    }
    return "?";
}

DegeneracyResult degeneracy_solve(const std::vector<DegSample>& samples, const DegeneracyOptions& o) {
    DegeneracyResult r;
    r.n_samples = samples.size();
    std::map<std::pair<int, int>, std::vector<const DegSample*>> pairs;
    for (const auto& s : samples) pairs[{s.from, s.to}].push_back(&s);
    if (pairs.empty()) {
        r.status = DegeneracyResult::Status::InsufficientSamples;
        r.note = "no samples";
        return r;
    }

    // best-conditioned pairs first
    struct Cand {
        double spread;
        int from, to;
        double c_from, c_to;
    };
    std::vector<Cand> cands;
    for (const auto& [key, v] : pairs) {
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end(), [](auto* a, auto* b) { return a->A < b->A; });
        const double A1 = (*lo)->A, A2 = (*hi)->A;
        if (A2 - A1 > 1e-12 * std::max(1.0, std::fabs(A2))) {
            const double cto = ((*lo)->B - (*hi)->B) / (A2 - A1);
            cands.push_back({A2 - A1, key.first, key.second, A1 * cto + (*lo)->B, cto});
        } else {
            for (auto* s : v) {
                if (std::fabs(s->B - v.front()->B) > 1e-12 * std::max(1.0, std::fabs(s->B))) {
                    r.status = DegeneracyResult::Status::None;
                    r.note = "equal multipliers with different addends";
                    return r;
                }
            }
        }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.spread > b.spread; });
    std::map<int, double>& c = r.constants;
    for (const auto& k : cands) {
        c.emplace(k.to, k.c_to);
        c.emplace(k.from, k.c_from);
    }
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto& [key, v] : pairs) {
            const auto* s = v.front();
            const bool hf = c.count(key.first) != 0, ht = c.count(key.second) != 0;
            if (ht && !hf) {
                c[key.first] = s->A * c[key.second] + s->B;
                changed = true;
            } else if (hf && !ht && s->A != 0.0) {
                c[key.second] = (c[key.first] - s->B) / s->A;
                changed = true;
            }
        }
    }
    for (const auto& [key, v] : pairs) {
        if (!c.count(key.first) || !c.count(key.second)) {
            r.status = DegeneracyResult::Status::InsufficientSamples;
            r.note = "underdetermined: a state pair has no two distinct multipliers";
            c.clear();
            return r;
        }
    }
    double cmax = 0.0, bmax = 0.0, res = 0.0;
    for (const auto& [k, v] : c) cmax = std::max(cmax, std::fabs(v));
    for (const auto& s : samples) {
        bmax = std::max(bmax, std::fabs(s.B));
        res = std::max(res, std::fabs(s.A * c[s.to] + s.B - c[s.from]));
    }
    r.residual = res;
    r.tolerance = o.diffusive ? 5.0 * o.mesh * std::max({1.0, bmax, cmax}) : 1e-8 * (1.0 + cmax);
    if (std::isfinite(res) && res <= r.tolerance) {
        r.status = DegeneracyResult::Status::Solution;
    } else {
        r.status = DegeneracyResult::Status::None;
        r.note = "residual above tolerance";
    }
    return r;
}

IdentityCheck verify_degenerate_identity(const MapPath& path, const std::map<int, double>& c, double tol) {
    IdentityCheck ic;
    if (path.pts.empty()) return ic;
    const auto c_of = [&c](int s) {
        const auto it = c.find(s);
        if (it == c.end()) throw std::invalid_argument("no constant for state " + std::to_string(s));
        return it->second;
    };
    const double c0 = c_of(path.pts.front().next);
    for (const auto& p : path.pts) {
        const double ct = c_of(p.next) * std::exp(-p.xi);
        const double dev = std::fabs(p.E.to_double() - (c0 - ct)) / (1.0 + std::fabs(c0) + std::fabs(ct));
        ic.max_dev = std::max(ic.max_dev, dev);
    }
    ic.ok = ic.max_dev <= tol;
    return ic;
}

StochLog stochastic_logarithm(const MapPath& path) {
    StochLog u;
    const std::size_t n = path.pts.size();
    u.U.resize(n);
    u.dU_c.resize(n);
    u.dU_j.resize(n);
    ExactSum U;
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point& p = path.pts[i];
        if (p.mark != Mark::Start) {
            u.dU_c[i] = -p.dxi_c + 0.5 * p.sig2 * (p.t - t);
            u.dU_j[i] = std::expm1(-p.dxi_j);
            U.add(u.dU_c[i]);
            U.add(u.dU_j[i]);
        }
        t = p.t;
        u.U[i] = U.to_double();
    }
    return u;
}

std::vector<double> doleans_dade_log(const MapPath& path, const StochLog& u) {
    std::vector<double> out(path.pts.size());
    ExactSum L;
    double t = 0.0;
    for (std::size_t i = 0; i < path.pts.size(); ++i) {
        const Point& p = path.pts[i];
        if (p.mark != Mark::Start) {
            L.add(u.dU_c[i]);
            L.add(-0.5 * p.sig2 * (p.t - t));
            L.add(std::log1p(u.dU_j[i]));
        }
        t = p.t;
        out[i] = L.to_double();
    }
    return out;
}

std::vector<double> degenerate_eta_residual(const MapPath& path, const StochLog& u, const std::map<int, double>& c) {
    std::vector<double> out(path.pts.size());
    const auto c_of = [&c](int s) {
        const auto it = c.find(s);
        if (it == c.end()) throw std::invalid_argument("no constant for state " + std::to_string(s));
        return it->second;
    };
    ExactSum R;
    const double c0 = path.pts.empty() ? 0.0 : c_of(path.pts.front().next);
    for (std::size_t i = 0; i < path.pts.size(); ++i) {
        const Point& p = path.pts[i];
        if (p.mark != Mark::Start) {
            if (!p.deta_c.is_zero()) R.add(p.deta_c.x());
            if (!p.deta_j.is_zero()) R.add(p.deta_j.x());
            R.add(c_of(p.state) * u.dU_c[i]);
            // the jump at a switch is weighted with the constant of the new state
            R.add(c_of(p.next) * u.dU_j[i]);
        }
        out[i] = R.to_double() + c_of(p.next) - c0;
    }
    return out;
}

}  // namespace mapexp
