#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mapexp/levy.hpp"
#include "mapexp/perpetuity.hpp"

namespace mapexp {

struct CriterionConfig {
    std::size_t n_paths = 100;  // corroboration paths
    std::size_t cycles = 4000;  // target return cycles per anchor
    std::size_t max_events = 1000000;
    std::size_t min_cycles = 30;
    std::vector<int> anchors;  // empty = all states, or hub + satellite + heaviest petals
    int max_petal_anchors = 20;
    std::size_t probe_paths = 32;
    double probe_horizon = 50.0;
    bool corroborate = true;
    std::vector<double> ladder{250.0, 500.0, 1000.0, 2000.0};
    double tstat = 3.0;
    bool sufficient = true;
    QuadConfig quad;
    int threads = 0;
    std::uint64_t seed = 1;
};

nlohmann::json config_to_json(const CriterionConfig& c);
/// Missing keys keep their defaults; throws ParseError on bad values.
CriterionConfig config_from_json(const nlohmann::json& j, CriterionConfig base = {});

enum class Verdict {
    ConvergesAS,
    ConvergesInProbabilityOnly,
    ConvergesInProbability,
    Degenerate,
    DivergesInProbability,
    Indeterminate
};
const char* to_string(Verdict v);

enum class XiDiag { PassesToInfinity, Fails, Indeterminate };
const char* to_string(XiDiag d);

struct Evidence {
    std::string criterion;
    std::string mode;  // analytic | empirical
    int state = -1;    // -1: whole model
    nlohmann::json result;
};

/// Triplet of state j (petal states evaluated at their weight).
Triplet state_triplet(const MapSpec& spec, const Model& m, int j);

std::vector<int> default_anchors(const Model& m, const CriterionConfig& cfg);

/// Cached per-anchor cycle batches, shared by the criteria.
class AnchorCycles {
public:
    AnchorCycles(const Model& m, const CriterionConfig& cfg);
    /// nullptr when the budget produced fewer than cfg.min_cycles cycles.
    const ExcursionBatch* get(int j);
    double block() const { return block_; }

private:
    const Model* m_;
    const CriterionConfig* cfg_;
    double block_;
    std::vector<std::optional<ExcursionBatch>> cache_;
};

struct XiDiagResult {
    XiDiag status = XiDiag::Indeterminate;
    bool analytic = false;
    double mean = 0.0, tstat = 0.0;
    std::size_t n = 0;
    std::string note;
};
XiDiagResult xi_divergence_diagnostic(const MapSpec& spec, const Model& m, AnchorCycles& cyc, int j,
                                      const CriterionConfig& cfg);
std::vector<std::pair<int, XiDiagResult>> xi_divergence_diagnostic(const MapSpec& spec, const CriterionConfig& cfg);

/// Condition on the sup of the cycle integral against the empirical xi_{tau_1(j)} tail.
QuadratureResult as_criterion(const ExcursionBatch& b, const QuadConfig& q);
std::vector<std::pair<int, QuadratureResult>> as_criterion(const MapSpec& spec, const CriterionConfig& cfg);

/// Mixed analytic/empirical test with A_xi^j and the excursion-augmented eta measure.
QuadratureResult prob_criterion(const MapSpec& spec, const Model& m, int j, const ExcursionBatch* b,
                                const QuadConfig& q);
std::vector<std::pair<int, QuadratureResult>> prob_criterion(const MapSpec& spec, const CriterionConfig& cfg);

/// (E1 drivers, E2 drivers): drift, Gaussian and small jumps of eta versus big jumps and switch jumps.
std::pair<MapSpec, MapSpec> decompose_e1_e2(const MapSpec& spec);

struct SuiteResult {
    std::vector<Evidence> evidence;
    bool converges_as = false;
    std::string conclusion;
};
SuiteResult sufficient_suite(const MapSpec& spec, const CriterionConfig& cfg);

/// Degeneracy probe on sampled jump-time steps (with the terminal segment of each path).
struct ProbeResult {
    DegeneracyResult solve;
    bool verified = false;
    double max_dev = 0.0;
};
ProbeResult degeneracy_probe(const Model& m, const CriterionConfig& cfg, std::uint64_t seed);

/// Trajectory statistics over the ladder T, with horizon 2 max(T).
struct Corroboration {
    std::vector<double> T;
    std::vector<double> log_med_sup;   // log median sup_{[T,2T]} |E(t) - E(T)|
    std::vector<double> log_med_absE;  // log median |E(T)|
    std::vector<std::vector<std::pair<double, double>>> fan;  // (t, E) for plotting
    std::size_t n_paths = 0;
};
Corroboration corroborate(const Model& m, const std::vector<double>& ladder, std::size_t n_paths, std::uint64_t seed,
                          int threads, std::size_t fan_paths = 20);

struct ClassificationReport {
    Verdict verdict = Verdict::Indeterminate;
    std::vector<Evidence> evidence;
    std::vector<std::string> assumptions;
    std::optional<DegeneracyResult> degeneracy;
    std::optional<Corroboration> corroboration;
    CriterionConfig config;
};

ClassificationReport classify(const MapSpec& spec, const CriterionConfig& cfg);
nlohmann::json report_to_json(const ClassificationReport& r);
nlohmann::json quad_to_json(const QuadratureResult& q);

/// Empirical law of E(horizon).
struct EstimateResult {
    std::vector<double> values;  // sorted
    double mean = 0.0, var = 0.0, se_mean = 0.0, se_var = 0.0;
    std::vector<std::pair<double, double>> quantiles;
    std::vector<double> hist_edges;
    std::vector<std::size_t> hist_counts;
    std::size_t non_finite = 0;
};
EstimateResult estimate_limit(const Model& m, double horizon, std::size_t n_paths, std::uint64_t seed, int threads,
                              double mesh = 0.0);
/// 2 log(1e6) / kappa when kappa is finite and positive, else 0.
double suggested_horizon(const MapSpec& spec);

}  // namespace mapexp
