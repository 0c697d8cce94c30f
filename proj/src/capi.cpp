#include "mapexp/mapexp.h"

#include <cstring>
#include <sstream>

#include "mapexp/classify.hpp"
#include "mapexp/io.hpp"
#include "mapexp/parallel.hpp"
#include "mapexp/rng.hpp"
#include "mapexp/scenarios.hpp"
#include "mapexp/svg.hpp"

#ifndef MAPEXP_VERSION
#define MAPEXP_VERSION "0.0.0"
#endif

struct mapexp_spec {
    mapexp::MapSpec spec;
};

struct mapexp_result {
    std::string json;
    std::vector<std::pair<std::string, std::string>> artifacts;
};

namespace {

using namespace mapexp;

thread_local std::string g_error;

struct OptionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

json parse_options(const char* text) {
    if (!text || !*text) return json::object();
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw OptionError(std::string("options: ") + e.what());
    }
    if (!j.is_object()) throw OptionError("options must be a JSON object");
    return j;
}

template <class T>
T opt(const json& o, const char* key, T dflt) {
    if (!o.contains(key)) return dflt;
    try {
        return o.at(key).get<T>();
    } catch (const json::exception&) {
        throw OptionError(std::string("option '") + key + "' has the wrong type");
    }
}

/// Runs f and maps exceptions onto status codes.
template <class F>
int guard(F&& f) {
    try {
        g_error.clear();
        return f();
    } catch (const OptionError& e) {
        g_error = e.what();
        return MAPEXP_EINVAL;
    } catch (const ParseError& e) {
        g_error = e.what();
        return MAPEXP_EPARSE;
    } catch (const json::parse_error& e) {
        g_error = e.what();
        return MAPEXP_EPARSE;
    } catch (const UnknownScenario& e) {
        g_error = e.what();
        return MAPEXP_EUNKNOWN_SCENARIO;
    } catch (const std::invalid_argument& e) {
        g_error = e.what();
        return MAPEXP_EDOMAIN;
    } catch (const std::domain_error& e) {
        g_error = e.what();
        return MAPEXP_EDOMAIN;
    } catch (const std::exception& e) {
        g_error = std::string("internal: ") + e.what();
        return MAPEXP_EINTERNAL;
    }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string path_json(const MapPath& p) {
    json t = json::array(), s = json::array(), x = json::array(), y = json::array(), e = json::array(),
         mk = json::array();
    for (const auto& q : p.pts) {
        t.push_back(num(q.t));
        s.push_back(q.next);
        x.push_back(num(q.xi));
        y.push_back(num(q.eta));
        e.push_back(num(q.E));
        mk.push_back(q.mark == Mark::Levy || q.mark == Mark::Switch ? to_string(q.mark) : "grid");
    }
    return json{{"t", t}, {"state", s}, {"xi", x}, {"eta", y}, {"E", e}, {"mark", mk}}.dump() + "\n";
}

std::string path_name(std::size_t i, const std::string& ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "path_%04zu.%s", i, ext.c_str());
    return buf;
}

double median(std::vector<double> v) {
    if (v.empty()) return NAN;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void simulate_impl(const MapSpec& spec, const json& o, mapexp_result& r) {
    const Model m = compile(spec);
    SimOptions so;
    so.horizon = opt(o, "horizon", 100.0);
    const std::size_t n = opt<std::size_t>(o, "paths", 1);
    const std::size_t keep = opt<std::size_t>(o, "keep_paths", n);
    const std::uint64_t seed = opt<std::uint64_t>(o, "seed", 1);
    const int threads = opt(o, "threads", 0);
    const std::string format = opt<std::string>(o, "format", "csv");
    if (format != "csv" && format != "json") throw OptionError("format must be csv or json");
    if (!(so.horizon > 0) || !std::isfinite(so.horizon)) throw OptionError("horizon must be positive and finite");
    if (o.contains("mesh")) {
        so.mesh = opt(o, "mesh", 0.0);
        if (!(so.mesh > 0)) throw OptionError("mesh must be positive");
        so.grid = GridPolicy::Always;
    }

    struct PathOut {
        std::string text;
        double xi = 0, eta = 0, E = 0, sup_ratio = -HUGE_VAL;
        std::size_t cycles = 0, discarded = 0, points = 0;
    };
    std::vector<PathOut> out(n);
    double mesh = 0.0;
    bool gridded = false;
    {
        PathStream probe(m, so, 0);
        mesh = probe.mesh();
        gridded = probe.gridded();
    }
    parallel_for(n, threads, [&](std::size_t i) {
        const MapPath p = simulate_path(m, so, stream_seed(seed, kPurposeSimulate, i));
        PathOut& po = out[i];
        CycleCollector cc(p.pts.front().next, 0.0);
        for (const auto& q : p.pts) {
            cc.push(q);
            if (q.t >= 0.5 * so.horizon && q.t > 0) po.sup_ratio = std::max(po.sup_ratio, q.xi / q.t);
        }
        po.discarded = cc.finish();
        po.cycles = cc.cycles().size();
        po.points = p.pts.size();
        po.xi = p.pts.back().xi;
        po.eta = p.pts.back().eta.to_double();
        po.E = p.pts.back().E.to_double();
        if (i < keep) {
            if (format == "csv") {
                std::ostringstream os;
                write_csv(os, p);
                po.text = os.str();
            } else {
                po.text = path_json(p);
            }
        }
    });
    json finals = json::array();
    std::vector<double> ratio, sup_ratio;
    std::size_t cycles = 0, discarded = 0;
    for (std::size_t i = 0; i < n; ++i) {
        finals.push_back({{"path", i}, {"xi", num(out[i].xi)}, {"eta", num(out[i].eta)}, {"E", num(out[i].E)}});
        ratio.push_back(out[i].xi / so.horizon);
        sup_ratio.push_back(out[i].sup_ratio);
        cycles += out[i].cycles;
        discarded += out[i].discarded;
        if (i < keep) r.artifacts.emplace_back(path_name(i, format), std::move(out[i].text));
    }
    json s{{"n_paths", n},
           {"horizon", num(so.horizon)},
           {"mesh", gridded ? num(mesh) : json(nullptr)},
           {"seed", seed},
           {"kept_paths", std::min(keep, n)},
           {"start_state", m.first_state()},
           {"cycles_at_start_state", cycles},
           {"discarded_cycles", discarded},
           {"median_xi_T_over_T", num(median(ratio))},
           {"limsup_xi_over_t", num(median(sup_ratio))},
           {"final", finals}};
    r.json = dump(s);
    r.artifacts.emplace_back("summary.json", r.json);
}

CriterionConfig config_of(const json& c) {
    CriterionConfig cfg = config_from_json(c);
    cfg.threads = opt(c, "threads", 0);
    return cfg;
}

std::string trace_plot(const Evidence& e) {
    Series s;
    for (const auto& p : e.result.at("trace")) {
        const double x = p[0].is_number() ? p[0].get<double>() : NAN;
        const double y = p[1].is_number() ? p[1].get<double>() : NAN;
        s.emplace_back(std::log2(x), y);
    }
    PlotSpec ps;
    ps.title = e.criterion + (e.state >= 0 ? " (state " + std::to_string(e.state) + ")" : "");
    ps.xlabel = "log2 cutoff";
    ps.ylabel = "partial integral";
    return svg_lines(ps, {s});
}

std::string summary_table(const ClassificationReport& rep) {
    std::ostringstream os;
    os << "verdict: " << to_string(rep.verdict) << "\n\n";
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-44s %-10s %-6s %s\n", "criterion", "mode", "state", "outcome");
    os << buf;
    for (const auto& e : rep.evidence) {
        std::string outcome;
        if (e.result.contains("verdict"))
            outcome = e.result["verdict"].get<std::string>();
        else if (e.result.contains("status"))
            outcome = e.result["status"].get<std::string>();
        else if (e.result.contains("pass"))
            outcome = e.result["pass"].get<bool>() ? "pass" : "fail";
        else if (e.result.contains("message"))
            outcome = e.result["message"].get<std::string>();
        std::snprintf(buf, sizeof buf, "%-44s %-10s %-6s %s\n", e.criterion.c_str(), e.mode.c_str(),
                      e.state < 0 ? "-" : std::to_string(e.state).c_str(), outcome.c_str());
        os << buf;
    }
    os << "\nassumptions:\n";
    for (const auto& a : rep.assumptions) os << "  - " << a << "\n";
    return os.str();
}

void report_artifacts(const ClassificationReport& rep, bool plots, mapexp_result& r, const std::string& prefix) {
    r.artifacts.emplace_back(prefix + "summary.txt", summary_table(rep));
    if (!plots) return;
    if (rep.corroboration && !rep.corroboration->fan.empty()) {
        PlotSpec ps;
        ps.title = "exponential integral, first paths";
        ps.xlabel = "t";
        ps.ylabel = "sign(E) log(1 + |E|)";
        r.artifacts.emplace_back(prefix + "fan.svg", svg_lines(ps, rep.corroboration->fan));
    }
    int k = 0;
    for (const auto& e : rep.evidence) {
        if (!e.result.is_object() || !e.result.contains("trace") || e.result["trace"].empty()) continue;
        char buf[96];
        std::snprintf(buf, sizeof buf, "trace_%02d_%s", k++, e.criterion.c_str());
        std::string name = buf;
        name += e.state >= 0 ? "_state" + std::to_string(e.state) + ".svg" : ".svg";
        std::replace(name.begin(), name.end(), ':', '_');
        r.artifacts.emplace_back(prefix + name, trace_plot(e));
    }
}

void classify_impl(const MapSpec& spec, const json& c, mapexp_result& r) {
    const CriterionConfig cfg = config_of(c);
    const ClassificationReport rep = classify(spec, cfg);
    r.json = dump(report_to_json(rep));
    r.artifacts.emplace_back("report.json", r.json);
    report_artifacts(rep, opt(c, "plots", true), r, "");
}

int estimate_impl(const MapSpec& spec, const json& o, mapexp_result& r) {
    const Model m = compile(spec);
    const std::size_t n = opt<std::size_t>(o, "paths", 1000);
    const std::uint64_t seed = opt<std::uint64_t>(o, "seed", 1);
    const int threads = opt(o, "threads", 0);
    const double mesh = opt(o, "mesh", 0.0);
    const std::string format = opt<std::string>(o, "format", "csv");
    if (format != "csv" && format != "json") throw OptionError("format must be csv or json");
    json warnings = json::array();
    double horizon = opt(o, "horizon", 0.0);
    if (!(horizon > 0)) {
        horizon = suggested_horizon(spec);
        if (!(horizon > 0)) {
            horizon = 100.0;
            warnings.push_back("kappa_xi is not finite and positive; horizon defaults to 100 and may be too short");
        }
    }
    json res{{"horizon", num(horizon)}, {"n_paths", n}, {"seed", seed}};
    if (opt(o, "check", true)) {
        json cj = o.contains("config") ? o["config"] : json::object();
        if (!cj.contains("seed")) cj["seed"] = seed;
        CriterionConfig cfg = config_of(cj);
        cfg.threads = threads;
        const ClassificationReport rep = classify(spec, cfg);
        res["verdict"] = to_string(rep.verdict);
        if (rep.verdict == Verdict::DivergesInProbability) {
            warnings.push_back("refused: the exponential integral diverges in probability, no limit law exists");
            res["warnings"] = warnings;
            res["classification"] = report_to_json(rep);
            r.json = dump(res);
            r.artifacts.emplace_back("estimate.json", r.json);
            g_error = "estimate refused: DivergesInProbability";
            return MAPEXP_EDOMAIN;
        }
    }
    const EstimateResult e = estimate_limit(m, horizon, n, seed, threads, mesh);
    json q = json::object();
    for (auto [p, v] : e.quantiles) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%.2f", p);
        q[buf] = num(v);
    }
    json edges = json::array();
    for (double x : e.hist_edges) edges.push_back(num(x));
    res["mean"] = num(e.mean);
    res["var"] = num(e.var);
    res["se_mean"] = num(e.se_mean);
    res["se_var"] = num(e.se_var);
    res["quantiles"] = q;
    res["histogram"] = {{"edges", edges}, {"counts", e.hist_counts}};
    res["non_finite"] = e.non_finite;
    res["warnings"] = warnings;
    r.json = dump(res);
    r.artifacts.emplace_back("estimate.json", r.json);
    if (format == "csv") {
        std::string s = "value\n";
        char buf[40];
        for (double v : e.values) {
            std::snprintf(buf, sizeof buf, "%.17g\n", v);
            s += buf;
        }
        r.artifacts.emplace_back("samples.csv", s);
    } else {
        json v = json::array();
        for (double x : e.values) v.push_back(num(x));
        r.artifacts.emplace_back("samples.json", json{{"values", v}}.dump() + "\n");
    }
    PlotSpec ps;
    ps.title = "empirical law of E(horizon)";
    ps.xlabel = "E";
    ps.ylabel = "count";
    r.artifacts.emplace_back("histogram.svg", svg_histogram(ps, e.hist_edges, e.hist_counts));
    return MAPEXP_OK;
}

template <class F>
int with_result(mapexp_result** out, F&& f) {
    if (!out) {
        g_error = "null output pointer";
        return MAPEXP_EINVAL;
    }
    *out = nullptr;
    auto r = std::make_unique<mapexp_result>();
    const int rc = guard([&] { return f(*r); });
    if (rc == MAPEXP_OK || !r->json.empty()) *out = r.release();
    return rc;
}

}  // namespace

extern "C" {

const char* mapexp_version(void) { return MAPEXP_VERSION; }

const char* mapexp_last_error(void) { return g_error.c_str(); }

int mapexp_spec_from_json(const char* text, mapexp_spec** out) {
    if (!text || !out) {
        g_error = "null argument";
        return MAPEXP_EINVAL;
    }
    *out = nullptr;
    return guard([&] {
        auto s = std::make_unique<mapexp_spec>();
        s->spec = spec_from_text(text);
        *out = s.release();
        return MAPEXP_OK;
    });
}

int mapexp_spec_from_scenario(const char* id, const char* params_json, mapexp_spec** out) {
    if (!id || !out) {
        g_error = "null argument";
        return MAPEXP_EINVAL;
    }
    *out = nullptr;
    return guard([&] {
        auto s = std::make_unique<mapexp_spec>();
        s->spec = build_scenario(id, parse_options(params_json)).spec;
        *out = s.release();
        return MAPEXP_OK;
    });
}

int mapexp_spec_to_json(const mapexp_spec* spec, char** out) {
    if (!spec || !out) {
        g_error = "null argument";
        return MAPEXP_EINVAL;
    }
    return guard([&] {
        const std::string s = spec_to_json(spec->spec).dump(2) + "\n";
        *out = static_cast<char*>(std::malloc(s.size() + 1));
        if (!*out) throw std::bad_alloc();
        std::memcpy(*out, s.c_str(), s.size() + 1);
        return MAPEXP_OK;
    });
}

void mapexp_spec_free(mapexp_spec* spec) { delete spec; }

void mapexp_string_free(char* s) { std::free(s); }

int mapexp_validate(const mapexp_spec* spec, mapexp_result** out) {
    if (!spec) {
        g_error = "null spec";
        return MAPEXP_EINVAL;
    }
    return with_result(out, [&](mapexp_result& r) {
        const ValidationReport v = validate(spec->spec);
        r.json = dump({{"ok", v.ok}, {"violations", v.violations}});
        if (!v.ok) {
            g_error = v.violations.empty() ? "invalid" : v.violations.front();
            return MAPEXP_EDOMAIN;
        }
        return MAPEXP_OK;
    });
}

int mapexp_simulate(const mapexp_spec* spec, const char* options_json, mapexp_result** out) {
    if (!spec) {
        g_error = "null spec";
        return MAPEXP_EINVAL;
    }
    return with_result(out, [&](mapexp_result& r) {
        simulate_impl(spec->spec, parse_options(options_json), r);
        return MAPEXP_OK;
    });
}

int mapexp_classify(const mapexp_spec* spec, const char* config_json, mapexp_result** out) {
    if (!spec) {
        g_error = "null spec";
        return MAPEXP_EINVAL;
    }
    return with_result(out, [&](mapexp_result& r) {
        classify_impl(spec->spec, parse_options(config_json), r);
        return MAPEXP_OK;
    });
}

int mapexp_estimate(const mapexp_spec* spec, const char* options_json, mapexp_result** out) {
    if (!spec) {
        g_error = "null spec";
        return MAPEXP_EINVAL;
    }
    return with_result(out, [&](mapexp_result& r) { return estimate_impl(spec->spec, parse_options(options_json), r); });
}

int mapexp_scenario_list(mapexp_result** out) {
    return with_result(out, [&](mapexp_result& r) {
        json l = json::array();
        for (const auto& id : scenario_ids()) {
            const Scenario s = build_scenario(id);
            l.push_back({{"id", id}, {"expected", to_string(s.expected)}, {"params", s.params}, {"notes", s.notes}});
        }
        r.json = dump(l);
        return MAPEXP_OK;
    });
}

int mapexp_scenario_run(const char* id, const char* params_json, const char* config_json, mapexp_result** out) {
    if (!id) {
        g_error = "null scenario id";
        return MAPEXP_EINVAL;
    }
    return with_result(out, [&](mapexp_result& r) {
        const json c = parse_options(config_json);
        const ScenarioRun run = run_scenario(id, config_of(c), parse_options(params_json));
        r.json = dump(run_to_json(run));
        r.artifacts.emplace_back("scenario_" + std::string(id) + ".json", r.json);
        r.artifacts.emplace_back("spec_" + std::string(id) + ".json", spec_to_json(run.scenario.spec).dump(2) + "\n");
        report_artifacts(run.report, opt(c, "plots", true), r, std::string(id) + "_");
        return MAPEXP_OK;
    });
}

const char* mapexp_result_json(const mapexp_result* r) { return r ? r->json.c_str() : ""; }

size_t mapexp_artifact_count(const mapexp_result* r) { return r ? r->artifacts.size() : 0; }

const char* mapexp_artifact_name(const mapexp_result* r, size_t i) {
    return r && i < r->artifacts.size() ? r->artifacts[i].first.c_str() : nullptr;
}

const char* mapexp_artifact_data(const mapexp_result* r, size_t i, size_t* len) {
    if (!r || i >= r->artifacts.size()) return nullptr;
    if (len) *len = r->artifacts[i].second.size();
    return r->artifacts[i].second.data();
}

void mapexp_result_free(mapexp_result* r) { delete r; }

}  // extern "C"
