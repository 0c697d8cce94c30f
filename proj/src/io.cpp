#include "mapexp/io.hpp"

#include <cinttypes>
#include <cstdio>

namespace mapexp {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ParseError(where + ": " + what);
}

double get_num(const json& j, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "+inf") return HUGE_VAL;
        if (s == "-inf") return -HUGE_VAL;
    }
    fail(where, "expected a number");
}

double field(const json& j, const char* key, const std::string& where, double dflt = NAN, bool required = true) {
    if (!j.is_object()) fail(where, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) {
        if (required) fail(where, std::string("missing key '") + key + "'");
        return dflt;
    }
    return get_num(*it, where + "." + key);
}

Mag mag_from(const json& j, const std::string& where) {
    if (j.is_object()) return Mag(field(j, "m", where), field(j, "log", where, 0.0, false));
    return Mag(get_num(j, where));
}

json mag_to(const Mag& m) {
    if (m.L == 0.0) return num(m.m);
    return json{{"m", num(m.m)}, {"log", num(m.L)}};
}

Coef coef_from(const json& j, const std::string& where) {
    Coef c;
    if (j.is_object()) {
        c.c0 = field(j, "c0", where, 0.0, false);
        c.inv = field(j, "inv", where, 0.0, false);
        c.exp = field(j, "exp", where, 0.0, false);
    } else {
        c.c0 = get_num(j, where);
    }
    return c;
}

json coef_to(const Coef& c) {
    if (c.bounded()) return num(c.c0);
    json j = json::object();
    if (c.c0 != 0) j["c0"] = num(c.c0);
    if (c.inv != 0) j["inv"] = num(c.inv);
    if (c.exp != 0) j["exp"] = num(c.exp);
    return j;
}

Marginal marginal_from(const json& j, const std::string& where) {
    if (!j.is_object() || j.size() != 1) fail(where, "expected a one-key marginal object");
    const std::string name = j.begin().key();
    const json& v = j.begin().value();
    const std::string w = where + "." + name;
    if (name == "point") return Marginal::point(get_num(v, w));
    if (name == "normal") return Marginal::normal(field(v, "mean", w), field(v, "sd", w));
    const double sgn = v.is_object() ? field(v, "sign", w, 1.0, false) : 1.0;
    if (sgn != 1.0 && sgn != -1.0) fail(w, "sign must be +1 or -1");
    if (name == "exponential") return Marginal::exponential(field(v, "rate", w), sgn);
    if (name == "pareto") return Marginal::pareto(field(v, "scale", w), field(v, "alpha", w), sgn);
    if (name == "logpareto") return Marginal::logpareto(field(v, "scale", w), field(v, "alpha", w), sgn);
    fail(where, "unknown marginal '" + name + "'");
}

json marginal_to(const Marginal& m) {
    switch (m.kind) {
        case Marginal::Kind::Point:
            return json{{"point", num(m.a)}};
        case Marginal::Kind::Normal:
            return json{{"normal", {{"mean", num(m.a)}, {"sd", num(m.b)}}}};
        case Marginal::Kind::Exponential:
            return json{{"exponential", {{"rate", num(m.a)}, {"sign", m.sign}}}};
        case Marginal::Kind::Pareto:
            return json{{"pareto", {{"scale", num(m.a)}, {"alpha", num(m.b)}, {"sign", m.sign}}}};
        case Marginal::Kind::LogPareto:
            return json{{"logpareto", {{"scale", num(m.a)}, {"alpha", num(m.b)}, {"sign", m.sign}}}};
    }
    return {};
}

BivLaw law_from(const json& j, const std::string& where) {
    if (j.is_string() && j.get<std::string>() == "zero") return BivLaw::zero();
    if (!j.is_object() || j.size() != 1) fail(where, "expected a one-key law object");
    const std::string name = j.begin().key();
    const json& v = j.begin().value();
    const std::string w = where + "." + name;
    if (name == "zero") return BivLaw::zero();
    if (name == "atom") {
        if (!v.is_array() || v.size() != 2) fail(w, "expected [x, y]");
        return BivLaw::atom(get_num(v[0], w), mag_from(v[1], w));
    }
    if (name == "atoms") {
        if (!v.is_array() || v.empty()) fail(w, "expected a non-empty list");
        BivLaw l;
        l.kind = BivLaw::Kind::Atoms;
        for (const auto& a : v) l.atoms.push_back({field(a, "p", w), field(a, "x", w), mag_from(a.at("y"), w)});
        return l;
    }
    if (name == "curve") {
        if (!v.contains("x_marginal")) fail(w, "missing key 'x_marginal'");
        return BivLaw::curve(field(v, "ci", w), field(v, "cj", w), marginal_from(v["x_marginal"], w));
    }
    if (name == "indep") {
        if (!v.contains("x") || !v.contains("y")) fail(w, "expected keys 'x' and 'y'");
        return BivLaw::indep(marginal_from(v["x"], w + ".x"), marginal_from(v["y"], w + ".y"));
    }
    fail(where, "unknown law '" + name + "'");
}

Triplet triplet_from(const json& j, const std::string& where) {
    Triplet t;
    if (!j.is_object()) fail(where, "expected an object");
    if (j.contains("drift")) {
        const auto& d = j["drift"];
        if (!d.is_array() || d.size() != 2) fail(where, "drift must be [bx, by]");
        t.bx = get_num(d[0], where + ".drift");
        t.by = mag_from(d[1], where + ".drift");
    }
    if (j.contains("sigma")) {
        const auto& s = j["sigma"];
        if (!s.is_array() || s.size() != 2 || !s[0].is_array() || !s[1].is_array() || s[0].size() != 2 ||
            s[1].size() != 2)
            fail(where, "sigma must be a 2x2 matrix");
        t.sxx = get_num(s[0][0], where);
        t.sxy = get_num(s[0][1], where);
        t.syy = get_num(s[1][1], where);
        if (get_num(s[1][0], where) != t.sxy) fail(where, "sigma must be symmetric");
    }
    if (j.contains("jumps")) {
        const auto& jj = j["jumps"];
        t.rate = field(jj, "rate", where + ".jumps");
        if (!jj.contains("law")) fail(where + ".jumps", "missing key 'law'");
        t.law = law_from(jj["law"], where + ".jumps.law");
    }
    if (j.contains("small_jumps")) {
        const auto& sj = j["small_jumps"];
        t.small_block = true;
        t.sj_eps = field(sj, "eps", where + ".small_jumps");
        if (!sj.contains("var") || !sj["var"].is_array() || sj["var"].size() != 2)
            fail(where + ".small_jumps", "var must be [vx, vy]");
        t.sj_vx = get_num(sj["var"][0], where);
        t.sj_vy = get_num(sj["var"][1], where);
    }
    return t;
}

json triplet_to(const Triplet& t, const json& id) {
    json j{{"id", id},
           {"drift", {num(t.bx), mag_to(t.by)}},
           {"sigma", {{num(t.sxx), num(t.sxy)}, {num(t.sxy), num(t.syy)}}}};
    if (t.rate > 0) j["jumps"] = {{"rate", num(t.rate)}, {"law", law_to_json(t.law)}};
    if (t.small_block) j["small_jumps"] = {{"eps", num(t.sj_eps)}, {"var", {num(t.sj_vx), num(t.sj_vy)}}};
    return j;
}

PetalTriplet petal_triplet_from(const json& j, const std::string& where) {
    PetalTriplet t;
    if (j.contains("drift")) {
        const auto& d = j["drift"];
        if (!d.is_array() || d.size() != 2) fail(where, "drift must be [bx, by]");
        t.bx = coef_from(d[0], where + ".drift");
        t.by = coef_from(d[1], where + ".drift");
    }
    json rest = j;
    rest.erase("drift");
    const Triplet base = triplet_from(rest, where);
    t.sxx = base.sxx;
    t.sxy = base.sxy;
    t.syy = base.syy;
    t.rate = base.rate;
    t.law = base.law;
    return t;
}

PetalSwitch petal_switch_from(const json& j, const std::string& where) {
    PetalSwitch s;
    if (j.is_object() && j.size() == 1 && j.contains("atom")) {
        const auto& v = j["atom"];
        if (!v.is_array() || v.size() != 2) fail(where, "expected [x, y]");
        s.coef = true;
        s.x = coef_from(v[0], where);
        s.y = coef_from(v[1], where);
        return s;
    }
    s.law = law_from(j, where);
    return s;
}

json petal_switch_to(const PetalSwitch& s) {
    if (s.coef) return json{{"atom", {coef_to(s.x), coef_to(s.y)}}};
    return law_to_json(s.law);
}

}  // namespace

json num(double x) {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}

json num(const XReal& x) {
    const double d = x.to_double();
    if (std::isfinite(d) && (d != 0.0 || x.is_zero())) return d;
    return x.str();
}

json law_to_json(const BivLaw& l) {
    switch (l.kind) {
        case BivLaw::Kind::Zero:
            return "zero";
        case BivLaw::Kind::Atoms: {
            if (l.atoms.size() == 1 && l.atoms[0].p == 1.0) return json{{"atom", {num(l.atoms[0].x), mag_to(l.atoms[0].y)}}};
            json a = json::array();
            for (const auto& at : l.atoms) a.push_back({{"p", num(at.p)}, {"x", num(at.x)}, {"y", mag_to(at.y)}});
            return json{{"atoms", a}};
        }
        case BivLaw::Kind::Curve:
            return json{{"curve", {{"ci", num(l.ci)}, {"cj", num(l.cj)}, {"x_marginal", marginal_to(l.mx)}}}};
        case BivLaw::Kind::Indep:
            return json{{"indep", {{"x", marginal_to(l.mx)}, {"y", marginal_to(l.my)}}}};
    }
    return {};
}

BivLaw law_from_json(const json& j) { return law_from(j, "law"); }

MapSpec spec_from_json(const json& j) {
    if (!j.is_object()) fail("document", "expected an object");
    if (j.contains("spec_version") && !(j["spec_version"].is_number_integer() && j["spec_version"].get<int>() == 1))
        fail("spec_version", "only version 1 is supported");
    if (!j.contains("chain")) fail("document", "missing key 'chain'");
    if (!j.contains("states") || !j["states"].is_array()) fail("document", "missing list 'states'");
    MapSpec s;
    const auto& c = j["chain"];
    const std::string kind = c.value("kind", std::string("dense"));
    if (kind == "dense" || kind == "dense_finite") {
        s.chain.kind = ChainSpec::Kind::DenseFinite;
        if (!c.contains("generator") || !c["generator"].is_array()) fail("chain", "missing matrix 'generator'");
        for (const auto& row : c["generator"]) {
            if (!row.is_array()) fail("chain.generator", "rows must be lists");
            std::vector<double> r;
            for (const auto& x : row) r.push_back(get_num(x, "chain.generator"));
            s.chain.Q.push_back(r);
        }
        const std::size_t n = s.chain.Q.size();
        s.states.resize(j["states"].size());
        std::vector<char> seen(s.states.size(), 0);
        std::size_t k = 0;
        for (const auto& st : j["states"]) {
            const std::string w = "states[" + std::to_string(k) + "]";
            std::size_t id = k;
            if (st.contains("id")) {
                if (!st["id"].is_number_integer()) fail(w, "dense state id must be an integer");
                id = st["id"].get<std::size_t>();
            }
            if (id >= s.states.size() || seen[id]) fail(w, "state ids must be 0..S-1 without repeats");
            seen[id] = 1;
            s.states[id] = triplet_from(st, w);
            ++k;
        }
        (void)n;
        if (j.contains("switch_laws")) {
            k = 0;
            for (const auto& sw : j["switch_laws"]) {
                const std::string w = "switch_laws[" + std::to_string(k++) + "]";
                if (!sw.contains("from") || !sw.contains("to") || !sw.contains("law")) fail(w, "expected from/to/law");
                if (!sw["from"].is_number_integer() || !sw["to"].is_number_integer()) fail(w, "from/to must be integers");
                s.switch_laws[{sw["from"].get<int>(), sw["to"].get<int>()}] = law_from(sw["law"], w + ".law");
            }
        }
        return s;
    }
    if (kind != "petal_flower") fail("chain.kind", "unknown chain kind '" + kind + "'");
    s.chain.kind = ChainSpec::Kind::PetalFlower;
    s.chain.rate = field(c, "rate", "chain");
    if (c.contains("weights")) {
        const auto& w = c["weights"];
        if (w.contains("explicit")) {
            s.chain.weights.mode = PetalWeights::Mode::Explicit;
            for (const auto& x : w["explicit"]) s.chain.weights.list.push_back(get_num(x, "chain.weights"));
            const std::string tail = w.value("tail", std::string("none"));
            if (tail != "none" && tail != "geometric") fail("chain.weights.tail", "expected 'none' or 'geometric'");
            s.chain.weights.geometric_tail = tail == "geometric";
        } else {
            if (w.value("family", std::string("geometric")) != "geometric")
                fail("chain.weights.family", "only 'geometric' is supported");
            s.chain.weights.ratio = field(w, "ratio", "chain.weights", 0.5, false);
        }
    }
    if (c.contains("satellite")) {
        if (!c["satellite"].is_number_integer()) fail("chain.satellite", "expected a petal index");
        s.chain.satellite = c["satellite"].get<int>();
    }
    bool have_hub = false, have_petal = false;
    for (const auto& st : j["states"]) {
        const std::string id = st.value("id", std::string());
        if (id == "hub") {
            s.hub = triplet_from(st, "states.hub");
            have_hub = true;
        } else if (id == "petal") {
            s.petal = petal_triplet_from(st, "states.petal");
            have_petal = true;
        } else if (id == "satellite") {
            s.sat = triplet_from(st, "states.satellite");
        } else {
            fail("states", "petal flower states are 'hub', 'petal' and 'satellite'");
        }
    }
    if (!have_hub || !have_petal) fail("states", "petal flower needs 'hub' and 'petal' entries");
    if (j.contains("switch_laws")) {
        for (const auto& sw : j["switch_laws"]) {
            const std::string from = sw.value("from", std::string()), to = sw.value("to", std::string());
            const std::string w = "switch_laws." + from + "->" + to;
            if (!sw.contains("law")) fail(w, "missing key 'law'");
            const PetalSwitch ps = petal_switch_from(sw["law"], w);
            if (from == "hub" && to == "petal") s.hub_to_petal = ps;
            else if (from == "petal" && to == "hub") s.petal_to_hub = ps;
            else if (from == "satellite" && to == "petal") s.sat_to_attach = ps;
            else if (from == "petal" && to == "satellite") s.attach_to_sat = ps;
            else fail(w, "unknown petal transition");
        }
    }
    return s;
}

MapSpec spec_from_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed document (byte ") + std::to_string(e.byte) + "): " + e.what());
    }
    try {
        return spec_from_json(j);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed document: ") + e.what());
    }
}

json spec_to_json(const MapSpec& s) {
    json j{{"spec_version", 1}};
    if (s.chain.kind == ChainSpec::Kind::DenseFinite) {
        json Q = json::array();
        for (const auto& row : s.chain.Q) {
            json r = json::array();
            for (double x : row) r.push_back(num(x));
            Q.push_back(r);
        }
        j["chain"] = {{"kind", "dense"}, {"generator", Q}};
        json st = json::array();
        for (std::size_t i = 0; i < s.states.size(); ++i) st.push_back(triplet_to(s.states[i], static_cast<int>(i)));
        j["states"] = st;
        json sw = json::array();
        for (const auto& [k, law] : s.switch_laws) sw.push_back({{"from", k.first}, {"to", k.second}, {"law", law_to_json(law)}});
        j["switch_laws"] = sw;
        return j;
    }
    json w;
    if (s.chain.weights.mode == PetalWeights::Mode::Geometric) {
        w = {{"family", "geometric"}, {"ratio", num(s.chain.weights.ratio)}};
    } else {
        json l = json::array();
        for (double x : s.chain.weights.list) l.push_back(num(x));
        w = {{"explicit", l}, {"tail", s.chain.weights.geometric_tail ? "geometric" : "none"}};
    }
    j["chain"] = {{"kind", "petal_flower"}, {"rate", num(s.chain.rate)}, {"weights", w}};
    if (s.chain.satellite) j["chain"]["satellite"] = s.chain.satellite;
    json st = json::array();
    st.push_back(triplet_to(s.hub, "hub"));
    json pt = triplet_to(s.petal.at(0.5), "petal");
    pt["drift"] = {coef_to(s.petal.bx), coef_to(s.petal.by)};
    st.push_back(pt);
    if (s.chain.satellite) st.push_back(triplet_to(s.sat, "satellite"));
    j["states"] = st;
    json sw = json::array();
    sw.push_back({{"from", "hub"}, {"to", "petal"}, {"law", petal_switch_to(s.hub_to_petal)}});
    sw.push_back({{"from", "petal"}, {"to", "hub"}, {"law", petal_switch_to(s.petal_to_hub)}});
    if (s.chain.satellite) {
        sw.push_back({{"from", "satellite"}, {"to", "petal"}, {"law", petal_switch_to(s.sat_to_attach)}});
        sw.push_back({{"from", "petal"}, {"to", "satellite"}, {"law", petal_switch_to(s.attach_to_sat)}});
    }
    j["switch_laws"] = sw;
    return j;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

}  // namespace mapexp
