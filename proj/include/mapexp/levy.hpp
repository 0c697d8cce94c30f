#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mapexp/model.hpp"

namespace mapexp {

struct QuadratureResult {
    enum class Verdict { Finite, DivergentEvidence, Indeterminate };
    double value = 0.0;
    double abs_error = 0.0;
    Verdict verdict = Verdict::Finite;
    std::vector<std::pair<double, double>> trace;  // (cutoff in log q, partial value)
    std::string note;
    double band_lo = NAN, band_hi = NAN;  // bootstrap band, empirical inputs only
};
const char* to_string(QuadratureResult::Verdict v);

struct NotEventuallyPositive : std::domain_error {
    using std::domain_error::domain_error;
};

/// xi-marginal Levy data in the compensated convention.
struct XiLevy {
    double gamma = 0.0;
    double rate = 0.0;
    BivLaw law;
    static XiLevy from(const Triplet& t);
    /// nu+((y, inf)).
    double nu_plus(double y) const;
    /// int_0^x nu+((y, inf)) dy for x >= 0.
    double nu_plus_integral(double x) const;
};

/// A(x) = gamma + nu+(1) + int_1^x nu+(y) dy.
double a_fn(const XiLevy& xi, double x);

/// a = inf{x >= 0 : A(x) > 0} + 0.01, by bisection over [0, xmax].
double a_root(const std::function<double(double)>& A, double xmax = 1e12);

/// Measure on u = log|y|: continuous tail u -> mass{log|y| > u} plus atoms.
struct LogMeasure {
    std::function<double(double)> cont_tail;
    std::vector<std::pair<double, double>> atoms;  // (u, mass)
    bool empty() const { return !cont_tail && atoms.empty(); }
};
/// rate * law of |delta eta| for the Levy jumps of a triplet.
LogMeasure eta_jump_measure(const Triplet& t);

/// Empirical law of u = log q with a Pareto extrapolation of the top order statistics.
struct EmpiricalTail {
    std::vector<double> body;  // sorted values <= u_thr, each with mass 1/n
    std::size_t n = 0;
    std::size_t n_pos = 0;
    double u_thr = 0.0;
    double alpha_hat = HUGE_VAL;
    double alpha_lo = HUGE_VAL;
    double tail_mass = 0.0;
    bool insufficient = false;
    double tail(double u) const;  // extrapolated mass above u (u >= u_thr)
};

struct QuadConfig {
    int doublings = 64;
    int steps = 128;
    double rel_tol = 1e-3;
    int last = 6;
    int min_exceed = 20;
    std::size_t min_samples = 30;
    int bootstrap = 40;
    unsigned long long boot_seed = 0x5eed;
};

EmpiricalTail empirical_tail(std::vector<double> logs, const QuadConfig& cfg = {});

/// One piece of a (possibly mixed) measure with a weight.
struct Piece {
    double weight = 1.0;
    const LogMeasure* analytic = nullptr;
    const EmpiricalTail* empirical = nullptr;
};

/// int_{[lo, inf)} g(u) dmu(u) over the summed pieces, with a doubling cutoff trace.
QuadratureResult integrate_pieces(const std::function<double(double)>& g, const std::vector<Piece>& pieces, double lo,
                                  const QuadConfig& cfg = {});

/// Erickson-Maller test: int_{(e^a, inf)} log y / A(log y) |d nu_eta(y)|.
QuadratureResult erickson_maller_test(const XiLevy& xi, const LogMeasure& eta, double a, const QuadConfig& cfg = {});
/// Same, with a computed by a_root; throws NotEventuallyPositive.
QuadratureResult erickson_maller_test(const Triplet& t, const QuadConfig& cfg = {});

struct Denominator {
    enum class Mode { Constant, ABar, EmpiricalXiTail };
    Mode mode = Mode::Constant;
    std::function<double(double)> D;
    static Denominator constant(double c = 1.0);
    /// D(x) = E[min(X+, x)] from a sample of X.
    static Denominator empirical_xi_tail(std::vector<double> xs);
    static Denominator a_bar(const MapSpec& spec);
};
const char* to_string(Denominator::Mode m);

/// int_{(1, inf)} log q / D(log q) P(dq) for an empirical sample of log q.
QuadratureResult log_moment_test(const std::vector<double>& log_q, const Denominator& d, const QuadConfig& cfg = {});
/// Same for a closed-form law given as a log-measure.
QuadratureResult log_moment_test(const LogMeasure& law, const Denominator& d, const QuadConfig& cfg = {});

/// Long-run xi drift function; finite state space only (throws std::domain_error otherwise).
double a_bar_fn(const MapSpec& spec, double x);

}  // namespace mapexp
