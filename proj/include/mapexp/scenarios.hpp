#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mapexp/classify.hpp"

namespace mapexp {

struct UnknownScenario : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Named check run next to the verdict. Informational checks never fail a run.
struct Diagnostic {
    std::string name;
    double value = 0.0;
    double target = 0.0;
    double tol = 0.0;
    bool pass = false;
    bool informational = false;
    std::string note;
};

struct Scenario {
    std::string id;
    MapSpec spec;
    Verdict expected = Verdict::Indeterminate;
    std::string notes;
    nlohmann::json params;  // effective parameters
};

const std::vector<std::string>& scenario_ids();

/// params keys: q, mu, sigma, c, c0, c1, ratio, weights, xi0, eta0, eta0_jump_rate, alpha.
Scenario build_scenario(const std::string& id, const nlohmann::json& params = nlohmann::json::object());

struct ScenarioRun {
    Scenario scenario;
    ClassificationReport report;
    std::vector<Diagnostic> diagnostics;
    bool pass = false;
};

ScenarioRun run_scenario(const std::string& id, const CriterionConfig& cfg,
                         const nlohmann::json& params = nlohmann::json::object());
nlohmann::json run_to_json(const ScenarioRun& r);

/// max over [T, 2T] of E and of -E, per path, for each T of the ladder.
struct Oscillation {
    std::vector<double> T;
    std::vector<std::vector<double>> max_E, max_negE;  // [ladder][path], may be +-inf
};
Oscillation oscillation(const Model& m, const std::vector<double>& ladder, std::size_t n_paths, std::uint64_t seed,
                        int threads);

}  // namespace mapexp
