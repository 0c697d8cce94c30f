#include "doctest.h"

#include "mapexp/classify.hpp"
#include "mapexp/rng.hpp"
#include "mapexp/scenarios.hpp"
#include "mapexp/simulate.hpp"
#include "support.hpp"

using namespace mapexp;
using namespace testsupport;

namespace {

using V = QuadratureResult::Verdict;

MapSpec jumpy_two_state(double drift0) {
    MapSpec s;
    s.chain.Q = {{-1.0, 1.0}, {2.0, -2.0}};
    Triplet a = drift(drift0, 1.0);
    a.rate = 1.0;
    a.law = BivLaw::indep(Marginal::normal(0.0, 1.0), Marginal::exponential(1.0));
    Triplet b = drift(0.5, -0.5);
    b.rate = 0.5;
    b.law = BivLaw::indep(Marginal::exponential(2.0, -1.0), Marginal::normal(0.0, 2.0));
    s.states = {a, b};
    s.switch_laws[{0, 1}] = BivLaw::atom(0.3, Mag(1.0));
    s.switch_laws[{1, 0}] = BivLaw::indep(Marginal::point(0.0), Marginal::normal(0.0, 1.0));
    return s;
}

const Evidence* find(const SuiteResult& s, const std::string& c) {
    for (const auto& e : s.evidence)
        if (e.criterion == c) return &e;
    return nullptr;
}

CriterionConfig quick(std::uint64_t seed = 1) {
    CriterionConfig c;
    c.seed = seed;
    c.cycles = 2000;
    c.probe_paths = 16;
    return c;
}

}  // namespace

TEST_CASE("xi diagnostic: single-state drift signs") {
    const auto up = xi_divergence_diagnostic(single(drift(0.5, 1.0)), quick());
    REQUIRE(up.size() == 1);
    CHECK(up[0].second.status == XiDiag::PassesToInfinity);
    CHECK(up[0].second.analytic);
    const auto down = xi_divergence_diagnostic(single(drift(-0.5, 1.0)), quick());
    REQUIRE(down.size() == 1);
    CHECK(down[0].second.status == XiDiag::Fails);
}

TEST_CASE("xi diagnostic: ex43 hub passes from cycles") {
    CriterionConfig c = quick();
    c.anchors = {1};
    const auto r = xi_divergence_diagnostic(build_scenario("ex43").spec, c);
    REQUIRE(r.size() == 1);
    CHECK(r[0].second.status == XiDiag::PassesToInfinity);
    CHECK_FALSE(r[0].second.analytic);
    CHECK(r[0].second.tstat > 3.0);
}

TEST_CASE("property: xi diagnostic agrees across all states of a finite chain") {
    for (double d : {1.0, -1.5}) {
        const auto r = xi_divergence_diagnostic(jumpy_two_state(d), quick(7));
        REQUIRE(r.size() == 2);
        CHECK(r[0].second.status == r[1].second.status);
        CHECK(r[0].second.status == (d > 0 ? XiDiag::PassesToInfinity : XiDiag::Fails));
    }
}

TEST_CASE("a.s. criterion: ex43 hub is finite, ex44 hub diverges") {
    CriterionConfig c = quick();
    c.anchors = {1};
    const auto r43 = as_criterion(build_scenario("ex43").spec, c);
    REQUIRE(r43.size() == 1);
    CHECK(r43[0].second.verdict == V::Finite);
    const auto r44 = as_criterion(build_scenario("ex44").spec, c);
    REQUIRE(r44.size() == 1);
    CHECK(r44[0].second.verdict == V::DivergentEvidence);
}

TEST_CASE("a.s. criterion: single state agrees with the Erickson-Maller test") {
    Triplet light = drift(0.6, 0.2);
    light.rate = 1.0;
    light.law = BivLaw::indep(Marginal::normal(0.0, 0.5), Marginal::exponential(1.0));
    Triplet heavy = light;
    heavy.law = BivLaw::indep(Marginal::normal(0.0, 0.5), Marginal::logpareto(1.0, 0.8));
    for (const Triplet& t : {light, heavy}) {
        const auto r = as_criterion(single(t), quick(3));
        REQUIRE(r.size() == 1);
        const XiLevy xi = XiLevy::from(t);
        const auto em = erickson_maller_test(xi, eta_jump_measure(t), a_root([&](double x) { return a_fn(xi, x); }));
        CHECK(r[0].second.verdict == em.verdict);
    }
}

TEST_CASE("probability criterion: ex44 converges, ex54 diverges everywhere tested") {
    CriterionConfig c = quick();
    c.anchors = {1};
    const auto r44 = prob_criterion(build_scenario("ex44").spec, c);
    REQUIRE(r44.size() == 1);
    CHECK(r44[0].second.verdict == V::Finite);

    c.anchors = {1, 2, 3, 4, 5, 6};
    for (const auto& [j, r] : prob_criterion(build_scenario("ex54").spec, c))
        CHECK_MESSAGE(r.verdict == V::DivergentEvidence, "anchor " << j);
}

TEST_CASE("probability criterion: single state without cycles is the Erickson-Maller value") {
    Triplet t = drift(0.7, 1.0);
    t.rate = 2.0;
    t.law = BivLaw::indep(Marginal::exponential(1.0), Marginal::logpareto(1.0, 2.0));
    const MapSpec s = single(t);
    const Model m = compile(s);
    const auto r = prob_criterion(s, m, 0, nullptr, QuadConfig{});
    const XiLevy xi = XiLevy::from(t);
    const auto em = erickson_maller_test(xi, eta_jump_measure(t), a_root([&](double x) { return a_fn(xi, x); }));
    CHECK(r.verdict == em.verdict);
    CHECK(r.value == doctest::Approx(em.value).epsilon(1e-9));
}

TEST_CASE("split: pure drift leaves nothing for the big-jump part") {
    const MapSpec s = single(drift(0.5, 2.0));
    const auto [e1, e2] = decompose_e1_e2(s);
    SimOptions o;
    o.horizon = 10.0;
    const MapPath p2 = simulate_path(compile(e2), o, 71);
    CHECK(p2.pts.back().E.to_double() == 0.0);
    const MapPath p1 = simulate_path(compile(e1), o, 71);
    CHECK(p1.pts.back().E.to_double() == doctest::Approx(4.0 * -std::expm1(-5.0)).epsilon(1e-12));
}

TEST_CASE("split: eta jumps of size three all land in the big-jump part") {
    Triplet t = drift(0.5, 0.0);
    t.rate = 1.0;
    t.law = BivLaw::atom(0.2, Mag(3.0));
    const auto [e1, e2] = decompose_e1_e2(single(t));
    SimOptions o;
    o.horizon = 30.0;
    CHECK(simulate_path(compile(e1), o, 72).pts.back().E.to_double() == 0.0);
    CHECK(simulate_path(compile(e2), o, 72).pts.back().E.to_double() > 0.0);
}

TEST_CASE("property: the two parts add up to E on coupled paths") {
    std::mt19937_64 g(73);
    SimOptions o;
    o.horizon = 20.0;
    for (int rep = 0; rep < 100; ++rep) {
        const MapSpec s = random_jump_spec(g);
        const auto [e1, e2] = decompose_e1_e2(s);
        const std::uint64_t seed = stream_seed(73, kPurposeSimulate, rep);
        const MapPath p = simulate_path(compile(s), o, seed);
        const MapPath p1 = simulate_path(compile(e1), o, seed);
        const MapPath p2 = simulate_path(compile(e2), o, seed);
        REQUIRE(p1.pts.size() == p.pts.size());
        REQUIRE(p2.pts.size() == p.pts.size());
        for (std::size_t i = 0; i < p.pts.size(); ++i) {
            CHECK(p1.pts[i].xi == p.pts[i].xi);
            const double E = p.pts[i].E.to_double(), sum = (p1.pts[i].E + p2.pts[i].E).to_double();
            CHECK(std::fabs(sum - E) <= 1e-9 * (1.0 + std::fabs(E)));
        }
    }
}

TEST_CASE("sufficient suite: light-tailed finite model converges") {
    const auto s = sufficient_suite(jumpy_two_state(1.0), quick(5));
    CHECK(s.converges_as);
    const Evidence* e = find(s, "kappa_positive_finite");
    REQUIRE(e);
    CHECK(e->result.at("pass").get<bool>());
}

TEST_CASE("sufficient suite: ex54 has unbounded eta coefficients") {
    const auto s = sufficient_suite(build_scenario("ex54").spec, quick());
    CHECK_FALSE(s.converges_as);
    const Evidence* e = find(s, "eta_coefficients_bounded");
    REQUIRE(e);
    CHECK_FALSE(e->result.at("pass").get<bool>());
    CHECK(e->result.at("message").get<std::string>() == "fails: sup_j γ_{η⁽ʲ⁾} = ∞");
}

TEST_CASE("sufficient suite: infinite kappa on a finite chain goes through the A-bar route") {
    MapSpec s;
    s.chain.Q = {{-1.0, 1.0}, {1.0, -1.0}};
    Triplet a = drift(0.2, 0.5);
    a.rate = 1.0;
    // infinite-mean xi jumps (A-bar ~ x^0.75) and eta jumps with log|Y| of tail u^-0.95
    a.law = BivLaw::indep(Marginal::pareto(1.0, 0.25), Marginal::logpareto(1.0, 0.95));
    Triplet b = drift(0.3, 0.5);
    s.states = {a, b};
    s.switch_laws[{0, 1}] = BivLaw::zero();
    s.switch_laws[{1, 0}] = BivLaw::zero();
    REQUIRE(long_term_mean(s, Component::Xi).kind == ExtReal::Kind::PosInf);
    const auto r = sufficient_suite(s, quick(9));
    const Evidence* k = find(r, "kappa_positive_finite");
    REQUIRE(k);
    CHECK_FALSE(k->result.at("pass").get<bool>());
    const Evidence* c = find(r, "e2_big_jump_log_moment");
    REQUIRE(c);
    CHECK(c->result.at("verdict") == "DivergentEvidence");
    const Evidence* ab = find(r, "e2_big_jump_abar");
    REQUIRE(ab);
    CHECK(ab->result.at("verdict") == "Finite");
    CHECK(r.converges_as);
}
