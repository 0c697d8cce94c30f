// mapexp command-line front end, built on the C interface only.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "mapexp/mapexp.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kDomain = 1, kUsage = 2 };

struct Globals {
    std::uint64_t seed = 1;
    int threads = 0;
    std::string out;
    std::string format = "csv";
    std::string config_path;
};

using SpecPtr = std::unique_ptr<mapexp_spec, decltype(&mapexp_spec_free)>;
using ResultPtr = std::unique_ptr<mapexp_result, decltype(&mapexp_result_free)>;

std::string fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

int exit_for(int status) {
    switch (status) {
        case MAPEXP_OK: return kOk;
        case MAPEXP_EINVAL:
        case MAPEXP_EPARSE:
        case MAPEXP_EUNKNOWN_SCENARIO: return kUsage;
        default: return kDomain;
    }
}

int fail(int status) {
    std::cerr << "mapexp: " << mapexp_last_error() << "\n";
    return exit_for(status);
}

bool read_file(const std::string& path, std::string& text) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    std::ostringstream os;
    os << in.rdbuf();
    text = os.str();
    return true;
}

// Returns kOk or an exit code; on success `config` holds the parsed object.
int load_config(const Globals& g, json& config) {
    config = json::object();
    if (g.config_path.empty()) return kOk;
    std::string text;
    if (!read_file(g.config_path, text)) {
        std::cerr << "mapexp: cannot read config " << g.config_path << "\n";
        return kUsage;
    }
    try {
        config = json::parse(text);
    } catch (const json::parse_error& e) {
        std::cerr << "mapexp: config: " << e.what() << "\n";
        return kUsage;
    }
    if (!config.is_object()) {
        std::cerr << "mapexp: config must be a JSON object\n";
        return kUsage;
    }
    return kOk;
}

int load_spec(const std::string& path, SpecPtr& spec, std::string& hash) {
    std::string text;
    if (!read_file(path, text)) {
        std::cerr << "mapexp: cannot read " << path << "\n";
        return kUsage;
    }
    hash = fnv1a(text);
    mapexp_spec* s = nullptr;
    const int rc = mapexp_spec_from_json(text.c_str(), &s);
    if (rc != MAPEXP_OK) return fail(rc);
    spec.reset(s);
    return kOk;
}

std::string output_dir(const Globals& g) {
    if (!g.out.empty()) return g.out;
    if (const char* e = std::getenv("MAPEXP_OUT"); e && *e) return e;
    return "mapexp_out";
}

json manifest(const std::string& command, const std::string& spec_hash, const json& config, std::uint64_t seed) {
    return json{{"command", command},
                {"spec_hash", spec_hash},
                {"config", config},
                {"seed", seed},
                {"version", mapexp_version()},
                {"timestamps", nullptr}};
}

bool ends_with(const std::string& s, const char* suffix) {
    const std::string x(suffix);
    return s.size() >= x.size() && s.compare(s.size() - x.size(), x.size(), x) == 0;
}

/// Embeds the manifest in an artifact according to its type.
std::string stamp(const std::string& name, const std::string& data, const json& m) {
    if (ends_with(name, ".json")) {
        json j = json::parse(data);
        if (j.is_object()) {
            j["manifest"] = m;
            return j.dump(2) + "\n";
        }
        return json{{"manifest", m}, {"data", j}}.dump(2) + "\n";
    }
    if (ends_with(name, ".svg")) {
        const auto p = data.find('>');
        if (p == std::string::npos) return data;
        return data.substr(0, p + 1) + "\n<metadata>" + m.dump() + "</metadata>" + data.substr(p + 1);
    }
    return "# manifest " + m.dump() + "\n" + data;
}

int write_artifacts(const mapexp_result* r, const Globals& g, const json& m) {
    const fs::path dir = output_dir(g);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        std::cerr << "mapexp: cannot create " << dir << ": " << ec.message() << "\n";
        return kDomain;
    }
    const std::size_t n = mapexp_artifact_count(r);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t len = 0;
        const char* data = mapexp_artifact_data(r, i, &len);
        const std::string name = mapexp_artifact_name(r, i);
        std::ofstream f(dir / name, std::ios::binary);
        const std::string s = stamp(name, std::string(data, len), m);
        f.write(s.data(), static_cast<std::streamsize>(s.size()));
        if (!f) {
            std::cerr << "mapexp: cannot write " << (dir / name) << "\n";
            return kDomain;
        }
    }
    return kOk;
}

void print_json(const mapexp_result* r, const json& m) {
    std::cout << stamp("stdout.json", mapexp_result_json(r), m);
}

int cmd_validate(const std::string& path) {
    SpecPtr spec(nullptr, mapexp_spec_free);
    std::string hash;
    if (int rc = load_spec(path, spec, hash)) return rc;
    mapexp_result* raw = nullptr;
    const int rc = mapexp_validate(spec.get(), &raw);
    ResultPtr r(raw, mapexp_result_free);
    if (r) std::cout << mapexp_result_json(r.get());
    if (rc != MAPEXP_OK) return fail(rc);
    return kOk;
}

struct SimArgs {
    std::string spec;
    double horizon = 100.0;
    std::size_t paths = 1;
    double mesh = 0.0;
    long keep = -1;
};

int cmd_simulate(const SimArgs& a, const Globals& g) {
    SpecPtr spec(nullptr, mapexp_spec_free);
    std::string hash;
    if (int rc = load_spec(a.spec, spec, hash)) return rc;
    json o{{"horizon", a.horizon}, {"paths", a.paths}, {"seed", g.seed}, {"format", g.format}};
    if (a.mesh > 0) o["mesh"] = a.mesh;
    if (a.keep >= 0) o["keep_paths"] = a.keep;
    const json m = manifest("simulate", hash, o, g.seed);
    o["threads"] = g.threads;
    mapexp_result* raw = nullptr;
    const int rc = mapexp_simulate(spec.get(), o.dump().c_str(), &raw);
    ResultPtr r(raw, mapexp_result_free);
    if (rc != MAPEXP_OK) return fail(rc);
    if (int w = write_artifacts(r.get(), g, m)) return w;
    print_json(r.get(), m);
    return kOk;
}

int cmd_classify(const std::string& path, bool plots, const Globals& g) {
    SpecPtr spec(nullptr, mapexp_spec_free);
    std::string hash;
    if (int rc = load_spec(path, spec, hash)) return rc;
    json c;
    if (int rc = load_config(g, c)) return rc;
    c["seed"] = g.seed;
    c["plots"] = plots;
    const json m = manifest("classify", hash, c, g.seed);
    c["threads"] = g.threads;
    mapexp_result* raw = nullptr;
    const int rc = mapexp_classify(spec.get(), c.dump().c_str(), &raw);
    ResultPtr r(raw, mapexp_result_free);
    if (rc != MAPEXP_OK) return fail(rc);
    if (int w = write_artifacts(r.get(), g, m)) return w;
    print_json(r.get(), m);
    return kOk;
}

struct EstArgs {
    std::string spec;
    double horizon = 0.0;
    std::size_t paths = 1000;
    double mesh = 0.0;
    bool no_check = false;
};

int cmd_estimate(const EstArgs& a, const Globals& g) {
    SpecPtr spec(nullptr, mapexp_spec_free);
    std::string hash;
    if (int rc = load_spec(a.spec, spec, hash)) return rc;
    json c;
    if (int rc = load_config(g, c)) return rc;
    json o{{"paths", a.paths}, {"seed", g.seed}, {"format", g.format}, {"check", !a.no_check}, {"config", c}};
    if (a.horizon > 0) o["horizon"] = a.horizon;
    if (a.mesh > 0) o["mesh"] = a.mesh;
    const json m = manifest("estimate", hash, o, g.seed);
    o["threads"] = g.threads;
    mapexp_result* raw = nullptr;
    const int rc = mapexp_estimate(spec.get(), o.dump().c_str(), &raw);
    ResultPtr r(raw, mapexp_result_free);
    if (!r) return fail(rc);
    if (int w = write_artifacts(r.get(), g, m)) return w;
    print_json(r.get(), m);
    const json res = json::parse(mapexp_result_json(r.get()));
    for (const auto& w : res.value("warnings", json::array())) std::cerr << "mapexp: warning: " << w.get<std::string>() << "\n";
    return rc == MAPEXP_OK ? kOk : exit_for(rc);
}

int cmd_scenario_list() {
    mapexp_result* raw = nullptr;
    const int rc = mapexp_scenario_list(&raw);
    ResultPtr r(raw, mapexp_result_free);
    if (rc != MAPEXP_OK) return fail(rc);
    std::cout << mapexp_result_json(r.get());
    return kOk;
}

int cmd_scenario_show(const std::string& id, const std::string& params) {
    mapexp_spec* s = nullptr;
    if (int rc = mapexp_spec_from_scenario(id.c_str(), params.empty() ? nullptr : params.c_str(), &s); rc != MAPEXP_OK)
        return fail(rc);
    SpecPtr spec(s, mapexp_spec_free);
    char* text = nullptr;
    if (int rc = mapexp_spec_to_json(spec.get(), &text); rc != MAPEXP_OK) return fail(rc);
    std::cout << text;
    mapexp_string_free(text);
    return kOk;
}

int cmd_scenario_run(const std::string& id, const std::string& params, bool plots, const Globals& g) {
    json p = json::object();
    if (!params.empty()) {
        try {
            p = json::parse(params);
        } catch (const json::parse_error& e) {
            std::cerr << "mapexp: --params: " << e.what() << "\n";
            return kUsage;
        }
    }
    json c;
    if (int rc = load_config(g, c)) return rc;
    c["seed"] = g.seed;
    c["plots"] = plots;

    mapexp_spec* s = nullptr;
    if (int rc = mapexp_spec_from_scenario(id.c_str(), p.dump().c_str(), &s); rc != MAPEXP_OK) return fail(rc);
    SpecPtr spec(s, mapexp_spec_free);
    char* text = nullptr;
    if (int rc = mapexp_spec_to_json(spec.get(), &text); rc != MAPEXP_OK) return fail(rc);
    const std::string hash = fnv1a(text);
    mapexp_string_free(text);

    const json m = manifest("scenario run " + id, hash, json{{"config", c}, {"params", p}}, g.seed);
    c["threads"] = g.threads;
    mapexp_result* raw = nullptr;
    const int rc = mapexp_scenario_run(id.c_str(), p.dump().c_str(), c.dump().c_str(), &raw);
    ResultPtr r(raw, mapexp_result_free);
    if (rc != MAPEXP_OK) return fail(rc);
    if (int w = write_artifacts(r.get(), g, m)) return w;
    const json res = json::parse(mapexp_result_json(r.get()));
    const bool pass = res.at("pass").get<bool>();
    std::cout << id << ": " << (pass ? "pass" : "fail") << " (verdict " << res["report"]["verdict"].get<std::string>()
              << ", expected " << res["expected"].get<std::string>() << ")\n";
    return pass ? kOk : kDomain;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exponential integrals of Markov additive processes"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(mapexp_version()));

    Globals g;
    app.add_option("--seed", g.seed, "master seed")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    app.add_option("--out", g.out, "output directory (default $MAPEXP_OUT or ./mapexp_out)");
    app.add_option("--format", g.format, "table format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    app.add_option("--config", g.config_path, "criterion config JSON file")->check(CLI::ExistingFile);

    std::string spec_path;
    auto* validate = app.add_subcommand("validate", "check a model document");
    validate->add_option("spec", spec_path, "model JSON")->required();

    SimArgs sim;
    auto* simulate = app.add_subcommand("simulate", "simulate paths of (xi, eta, E)");
    simulate->add_option("spec", sim.spec, "model JSON")->required();
    simulate->add_option("--horizon", sim.horizon)->check(CLI::PositiveNumber)->capture_default_str();
    simulate->add_option("--paths", sim.paths)->check(CLI::PositiveNumber)->capture_default_str();
    simulate->add_option("--mesh", sim.mesh, "force a grid with this mesh")->check(CLI::PositiveNumber);
    simulate->add_option("--keep-paths", sim.keep, "write only the first N paths")->check(CLI::NonNegativeNumber);

    bool no_plots = false;
    auto* classify = app.add_subcommand("classify", "classify the limit behaviour of E(t)");
    classify->add_option("spec", spec_path, "model JSON")->required();
    classify->add_flag("--no-plots", no_plots);

    EstArgs est;
    auto* estimate = app.add_subcommand("estimate", "empirical law of E(horizon)");
    estimate->add_option("spec", est.spec, "model JSON")->required();
    estimate->add_option("--horizon", est.horizon, "default from kappa_xi")->check(CLI::PositiveNumber);
    estimate->add_option("--paths", est.paths)->check(CLI::PositiveNumber)->capture_default_str();
    estimate->add_option("--mesh", est.mesh)->check(CLI::PositiveNumber);
    estimate->add_flag("--no-check", est.no_check, "skip the divergence check");

    auto* scenario = app.add_subcommand("scenario", "built-in scenarios");
    scenario->require_subcommand(1);
    scenario->fallthrough();
    auto* list = scenario->add_subcommand("list", "list scenario ids");
    std::string id, params;
    auto* show = scenario->add_subcommand("show", "print the model document of a scenario");
    show->add_option("id", id)->required();
    show->add_option("--params", params, "scenario parameters as a JSON object");
    auto* run = scenario->add_subcommand("run", "run a scenario and check its expected verdict");
    run->add_option("id", id)->required();
    run->add_option("--params", params, "scenario parameters as a JSON object");
    run->add_flag("--no-plots", no_plots);
    run->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    if (*validate) return cmd_validate(spec_path);
    if (*simulate) return cmd_simulate(sim, g);
    if (*classify) return cmd_classify(spec_path, !no_plots, g);
    if (*estimate) return cmd_estimate(est, g);
    if (*list) return cmd_scenario_list();
    if (*show) return cmd_scenario_show(id, params);
    if (*run) return cmd_scenario_run(id, params, !no_plots, g);
    return kUsage;
}
