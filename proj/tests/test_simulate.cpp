#include "doctest.h"

#include "mapexp/parallel.hpp"
#include "mapexp/rng.hpp"
#include "mapexp/scenarios.hpp"
#include "mapexp/simulate.hpp"
#include "support.hpp"

using namespace mapexp;
using namespace testsupport;

namespace {

MapSpec two_state_unit() {
    MapSpec s;
    s.chain.Q = {{-1.0, 1.0}, {1.0, -1.0}};
    s.states = {drift(1.0, 1.0), drift(-0.5, 2.0)};
    s.switch_laws[{0, 1}] = BivLaw::zero();
    s.switch_laws[{1, 0}] = BivLaw::zero();
    return s;
}

Point pt(double t, int state, int next, Mark mark) {
    Point p;
    p.t = t;
    p.state = state;
    p.next = next;
    p.mark = mark;
    return p;
}

// Independent evaluation of E from the event list, in long double.
long double direct_E(const MapPath& path) {
    long double E = 0, xi = 0, t = 0;
    for (const auto& p : path.pts) {
        if (p.mark == Mark::Start) continue;
        const long double dt = p.t - t, b = p.bxi, dy = p.deta_c.value();
        const long double w = b == 0 ? dt : (1 - std::exp(-b * dt)) / b;
        if (dt > 0) E += std::exp(-xi) * dy * w / dt;
        E += std::exp(-(xi + p.dxi_c)) * static_cast<long double>(p.deta_j.value());
        xi = p.xi;
        t = p.t;
    }
    return E;
}

}  // namespace

TEST_CASE("chain: single state has one segment") {
    const Model m = compile(single(drift(1.0, 1.0)));
    const ChainPath c = simulate_chain(m, 50.0, 1);
    CHECK(c.times.size() == 1);
    CHECK(c.states.size() == 1);
    CHECK(c.occupation(0) == doctest::Approx(50.0));
}

TEST_CASE("chain: two-state occupation matches the stationary law") {
    const Model m = compile(two_state_unit());
    std::vector<double> occ;
    for (int i = 0; i < 40; ++i) occ.push_back(simulate_chain(m, 1e4, stream_seed(41, kPurposeSimulate, i)).occupation(0) / 1e4);
    const double se = sd(occ) / std::sqrt(static_cast<double>(occ.size()));
    CHECK(std::fabs(mean(occ) - 0.5) <= 3 * se);
}

TEST_CASE("chain: invariants of jump times and return times") {
    const Model m = compile(build_scenario("ex43").spec);
    const ChainPath c = simulate_chain(m, 500.0, 7);
    REQUIRE(c.states.front() == 1);
    for (std::size_t i = 1; i < c.times.size(); ++i) {
        CHECK(c.times[i] > c.times[i - 1]);
        CHECK(c.states[i] != c.states[i - 1]);
        // petal flower: every other state is the hub
        CHECK((c.states[i] == 1) == (i % 2 == 0));
    }
    const auto ret = c.return_times(1), ex = c.exit_times(1);
    for (std::size_t n = 0; n < ret.size(); ++n) {
        CHECK(ex[n] < ret[n]);
        if (n + 1 < ex.size()) CHECK(ret[n] < ex[n + 1]);
    }
}

TEST_CASE("additive: drifts only are deterministic") {
    const Model m = compile(single(drift(1.0, 2.0)));
    SimOptions o;
    o.horizon = 10.0;
    o.grid = GridPolicy::Always;
    o.mesh = 0.25;
    const MapPath p = simulate_path(m, o, 3);
    for (const auto& q : p.pts) {
        CHECK(q.xi == doctest::Approx(q.t).epsilon(1e-14));
        CHECK(q.eta.to_double() == doctest::Approx(2 * q.t).epsilon(1e-14));
        CHECK(q.E.to_double() == doctest::Approx(2 * (1 - std::exp(-q.t))).epsilon(1e-13).scale(1e-300));
    }
}

TEST_CASE("additive: Brownian xi at time one is standard normal") {
    Triplet t = drift(0.0, 1.0);
    t.sxx = 1.0;
    const Model m = compile(single(t));
    SimOptions o;
    o.horizon = 1.0;
    o.mesh = 0.05;
    std::vector<double> x;
    for (int i = 0; i < 10000; ++i) x.push_back(simulate_path(m, o, stream_seed(42, kPurposeSimulate, i)).pts.back().xi);
    CHECK(ks_one_sample_p(x, [](double z) { return normal_cdf(z); }) > 0.01);
}

TEST_CASE("additive: switch jumps follow the switch law") {
    MapSpec s = two_state_unit();
    s.switch_laws[{0, 1}] = BivLaw::indep(Marginal::normal(1.0, 2.0), Marginal::point(0.0));
    const Model m = compile(s);
    SimOptions o;
    o.horizon = 2000.0;
    const MapPath p = simulate_path(m, o, 9);
    std::vector<double> jumps;
    for (const auto& q : p.pts)
        if (q.mark == Mark::Switch && q.state == 0 && q.next == 1) jumps.push_back(q.dxi_j);
    REQUIRE(jumps.size() > 500);
    CHECK(ks_one_sample_p(jumps, [](double z) { return normal_cdf((z - 1.0) / 2.0); }) > 0.01);
}

TEST_CASE("exponential integral: drift closed form and piecewise-constant xi") {
    const Model m = compile(single(drift(1.0, 1.0)));
    SimOptions o;
    o.horizon = 5.0;
    o.grid = GridPolicy::Always;
    o.mesh = 0.1;
    const MapPath p = simulate_path(m, o, 1);
    const auto tr = exp_integral(p);
    CHECK(tr.E.front().to_double() == 0.0);
    for (std::size_t i = 0; i < p.pts.size(); ++i)
        CHECK(tr.E[i].to_double() == doctest::Approx(1 - std::exp(-p.pts[i].t)).epsilon(1e-13).scale(1e-300));

    MapPath pc;
    pc.pts.push_back(pt(0.0, 0, 0, Mark::Start));
    Point a = pt(1.0, 0, 1, Mark::Switch);
    a.deta_c = Mag(1.0);
    a.dxi_j = 1.0;
    a.xi = 1.0;
    pc.pts.push_back(a);
    Point b = pt(2.0, 1, 1, Mark::End);
    b.deta_c = Mag(1.0);
    b.xi = 1.0;
    pc.pts.push_back(b);
    CHECK(exp_integral(pc).E.back().to_double() == doctest::Approx(1.0 + std::exp(-1.0)).epsilon(1e-15));
}

TEST_CASE("exponential integral: jumps add e^{-xi_-} times the eta jump") {
    std::mt19937_64 g(43);
    for (int rep = 0; rep < 50; ++rep) {
        const Model m = compile(random_jump_spec(g));
        SimOptions o;
        o.horizon = 30.0;
        const MapPath p = simulate_path(m, o, stream_seed(43, kPurposeSimulate, rep));
        const auto tr = exp_integral(p);
        for (std::size_t i = 1; i < p.pts.size(); ++i) {
            CHECK(tr.E[i] == p.pts[i].E);
            if (p.pts[i].deta_j.value() == 0.0 || p.pts[i].t != p.pts[i - 1].t) continue;
            const double jump = (tr.E[i] - tr.E[i - 1]).to_double();
            CHECK(jump == doctest::Approx(std::exp(-p.pts[i - 1].xi) * p.pts[i].deta_j.value()).epsilon(1e-12));
        }
    }
}

TEST_CASE("property: exponential integral is exact on jump specs") {
    std::mt19937_64 g(44);
    for (int rep = 0; rep < 100; ++rep) {
        const Model m = compile(random_jump_spec(g));
        SimOptions o;
        o.horizon = 20.0;
        const MapPath p = simulate_path(m, o, stream_seed(44, kPurposeSimulate, rep));
        const long double want = direct_E(p);
        const double got = p.pts.back().E.to_double();
        CHECK(got == doctest::Approx(static_cast<double>(want)).epsilon(1e-11).scale(1.0));
    }
}

TEST_CASE("exponential integral: degenerate model follows c (1 - e^{-xi})") {
    const auto sc = build_scenario("degenerate_const");
    const double c = sc.params.at("c").get<double>();
    const Model m = compile(sc.spec);
    SimOptions o;
    o.horizon = 50.0;
    for (int i = 0; i < 20; ++i) {
        const MapPath p = simulate_path(m, o, stream_seed(45, kPurposeSimulate, i));
        for (const auto& q : p.pts)
            CHECK(std::fabs(q.E.to_double() - c * (1 - std::exp(-q.xi))) <= 1e-8 * (1 + c));
    }
}

TEST_CASE("ex43: xi at the n-th return to the hub is 2n") {
    const Model m = compile(build_scenario("ex43").spec);
    SimOptions o;
    o.horizon = 300.0;
    for (int i = 0; i < 20; ++i) {
        const MapPath p = simulate_path(m, o, stream_seed(46, kPurposeSimulate, i));
        int n = 0;
        for (const auto& q : p.pts)
            if (q.mark == Mark::Switch && q.next == 1) CHECK(q.xi == 2.0 * ++n);
        CHECK(n > 50);
    }
}

TEST_CASE("conflation: a path that never leaves j is unchanged") {
    Triplet t = drift(0.5, 1.0);
    t.rate = 1.0;
    t.law = BivLaw::indep(Marginal::normal(0, 1), Marginal::exponential(1.0));
    const Model m = compile(single(t));
    SimOptions o;
    o.horizon = 40.0;
    const MapPath p = simulate_path(m, o, 5);
    const ConflatedPath c = conflate(p, 0);
    REQUIRE(c.t.size() == p.pts.size());
    for (std::size_t i = 0; i < p.pts.size(); ++i) {
        CHECK(c.t[i] == p.pts[i].t);
        CHECK(c.xi[i] == p.pts[i].xi);
        CHECK(c.E[i] == p.pts[i].E);
    }
    CHECK(c.n_conf == 0);
    CHECK_THROWS_AS(conflate(p, 1), AnchorMismatch);
}

TEST_CASE("conflation: ex43 jumps of size two at rate q") {
    const auto sc = build_scenario("ex43");
    const double q = sc.params.at("q").get<double>();
    const Model m = compile(sc.spec);
    SimOptions o;
    o.horizon = 4000.0;
    const MapPath p = simulate_path(m, o, 47);
    const ConflatedPath c = conflate(p, 1);
    for (std::size_t i = 1; i < c.t.size(); ++i)
        if (c.conf[i]) CHECK(c.xi[i] - c.xi[i - 1] == 2.0);
    const double n = static_cast<double>(c.n_conf);
    CHECK(std::fabs(n / c.length - q) <= 3 * std::sqrt(n) / c.length);
}

TEST_CASE("excursions: single state, ex43 and renewal mean") {
    const Model m1 = compile(single(drift(1, 1)));
    SimOptions o;
    o.horizon = 20.0;
    CHECK_THROWS_AS(excursion_stats({simulate_path(m1, o, 1)}, 0), NoCompleteCycle);

    const Model m43 = compile(build_scenario("ex43").spec);
    o.horizon = 500.0;
    const auto b = excursion_stats({simulate_path(m43, o, 2), simulate_path(m43, o, 3)}, 1);
    CHECK(b.cycles.size() > 100);
    for (const auto& c : b.cycles) {
        CHECK(c.xi_tau == 2.0);
        CHECK(c.duration > 0);
        CHECK(c.log_w >= c.log_cyc_int - 1e-12);
    }

    const Model m2 = compile(two_state_unit());
    const auto b2 = collect_cycles(m2, 0, 20000, 10000000, 48);
    std::vector<double> d;
    for (const auto& c : b2.cycles) d.push_back(c.duration);
    CHECK(std::fabs(mean(d) - 2.0) <= 3 * sd(d) / std::sqrt(static_cast<double>(d.size())));
}

TEST_CASE("property: the Gaussian part of eta is a martingale with the occupation variance") {
    MapSpec s = two_state_unit();
    s.states[0].by = Mag(0.0);
    s.states[1].by = Mag(0.0);
    s.states[0].syy = 1.0;
    s.states[1].syy = 3.0;
    const Model m = compile(s);
    SimOptions o;
    o.horizon = 4.0;
    o.stops = {1.0, 2.0, 4.0};
    const std::size_t n = 20000;
    std::vector<std::vector<double>> eta(3, std::vector<double>(n)), iv(3, std::vector<double>(n));
    parallel_for(n, 0, [&](std::size_t i) {
        const MapPath p = simulate_path(m, o, stream_seed(49, kPurposeSimulate, i));
        double t = 0, v = 0;
        int k = 0;
        for (const auto& q : p.pts) {
            v += (q.t - t) * (q.state == 0 ? 1.0 : 3.0);
            t = q.t;
            if (k < 3 && q.t == o.stops[k] && q.mark != Mark::Start) {
                eta[k][i] = q.eta.to_double();
                iv[k][i] = v;
                ++k;
            }
        }
    });
    for (int k = 0; k < 3; ++k) {
        const double se = sd(eta[k]) / std::sqrt(static_cast<double>(n));
        CHECK(std::fabs(mean(eta[k])) <= 3 * se);
        double m2 = 0;
        for (double x : eta[k]) m2 += x * x;
        m2 /= static_cast<double>(n);
        CHECK(m2 == doctest::Approx(mean(iv[k])).epsilon(0.05));
    }
}

TEST_CASE("reproducibility: same seed gives identical paths") {
    const Model m = compile(build_scenario("degenerate_curve").spec);
    SimOptions o;
    o.horizon = 30.0;
    const MapPath a = simulate_path(m, o, 99), b = simulate_path(m, o, 99);
    REQUIRE(a.pts.size() == b.pts.size());
    for (std::size_t i = 0; i < a.pts.size(); ++i) {
        CHECK(a.pts[i].t == b.pts[i].t);
        CHECK(a.pts[i].xi == b.pts[i].xi);
        CHECK(a.pts[i].E == b.pts[i].E);
    }
}
