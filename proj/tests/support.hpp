#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "mapexp/model.hpp"

namespace testsupport {

using namespace mapexp;

/// Kolmogorov survival function P(K > lambda).
inline double kolmogorov_q(double lambda) {
    if (lambda < 0.2) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double t = 2.0 * std::exp(-2.0 * k * k * lambda * lambda) * (k % 2 ? 1.0 : -1.0);
        s += t;
        if (std::fabs(t) < 1e-16) break;
    }
    return std::clamp(s, 0.0, 1.0);
}

template <class Cdf>
double ks_one_sample_p(std::vector<double> x, Cdf F) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = F(x[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    const double sn = std::sqrt(n);
    return kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
}

inline double ks_two_sample_p(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::fabs(i / na - j / nb));
    }
    const double ne = std::sqrt(na * nb / (na + nb));
    return kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double sd(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double ma = mean(a), mb = mean(b);
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

inline Marginal random_marginal(std::mt19937_64& g, bool allow_zero) {
    std::uniform_int_distribution<int> kind(allow_zero ? 0 : 1, 3);
    std::uniform_real_distribution<double> u(0.2, 2.0);
    switch (kind(g)) {
        case 0: return Marginal::point(0.0);
        case 1: return Marginal::normal(u(g) - 1.1, u(g));
        case 2: return Marginal::exponential(u(g), g() % 2 ? 1.0 : -1.0);
        default: return Marginal::point(u(g) - 1.1);
    }
}

/// Dense spec without Gaussian parts: drifts, compound Poisson jumps and switch jumps.
inline MapSpec random_jump_spec(std::mt19937_64& g, int max_states = 5) {
    std::uniform_int_distribution<int> ns(1, max_states);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = ns(g);
    MapSpec s;
    s.chain.kind = ChainSpec::Kind::DenseFinite;
    s.chain.Q.assign(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            // ring edge keeps the chain irreducible
            const bool ring = j == (i + 1) % n;
            const double q = ring || u(g) < 0.5 ? 0.2 + 1.5 * u(g) : 0.0;
            s.chain.Q[i][j] = q;
            row += q;
        }
        s.chain.Q[i][i] = -row;
    }
    for (int i = 0; i < n; ++i) {
        Triplet t;
        t.bx = 2.0 * u(g) - 0.5;
        t.by = Mag(2.0 * u(g) - 1.0);
        t.rate = u(g) < 0.7 ? 0.5 + 2.0 * u(g) : 0.0;
        if (t.rate > 0) t.law = BivLaw::indep(random_marginal(g, true), random_marginal(g, false));
        s.states.push_back(t);
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && s.chain.Q[i][j] > 0)
                s.switch_laws[{i, j}] = u(g) < 0.3 ? BivLaw::zero()
                                                    : BivLaw::indep(random_marginal(g, true), random_marginal(g, true));
    if (n == 1) s.chain.Q = {{0.0}};
    return s;
}

/// Random spec that cannot be degenerate: state 0 carries Gaussian eta jumps independent of xi,
/// and no constants c satisfy y = c_0 (1 - e^{-x}) for them.
inline MapSpec random_nondegenerate_spec(std::mt19937_64& g, int max_states = 5) {
    MapSpec s = random_jump_spec(g, max_states);
    std::uniform_real_distribution<double> u(0.2, 2.0);
    Triplet& t = s.states[0];
    t.rate = u(g);
    t.law = BivLaw::indep(random_marginal(g, true), Marginal::normal(u(g) - 1.1, u(g)));
    return s;
}

/// Single-state spec.
inline MapSpec single(const Triplet& t) {
    MapSpec s;
    s.chain.Q = {{0.0}};
    s.states = {t};
    return s;
}

inline Triplet drift(double bx, double by) {
    Triplet t;
    t.bx = bx;
    t.by = Mag(by);
    return t;
}

}  // namespace testsupport
