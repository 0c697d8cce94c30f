#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mapexp/laws.hpp"

namespace mapexp {

/// Per-state bivariate Levy data. Drifts are natural (uncompensated).
struct Triplet {
    double bx = 0.0;
    Mag by;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    double rate = 0.0;
    BivLaw law;
    // Gaussian stand-in for compensated jumps below sj_eps.
    bool small_block = false;
    double sj_eps = 0.0, sj_vx = 0.0, sj_vy = 0.0;
};

/// c0 + inv / p + exp * e^{1/p}, evaluated per petal weight p.
struct Coef {
    double c0 = 0.0, inv = 0.0, exp = 0.0;
    Mag at(double p) const;
    bool bounded() const { return inv == 0.0 && exp == 0.0; }
};

struct PetalTriplet {
    Coef bx, by;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    double rate = 0.0;
    BivLaw law;
    Triplet at(double p) const;
};

/// Switch law template: either a fixed law or a point mass at (x(p), y(p)).
struct PetalSwitch {
    bool coef = false;
    Coef x, y;
    BivLaw law;
    BivLaw at(double p) const;
};

struct PetalWeights {
    enum class Mode { Geometric, Explicit };
    Mode mode = Mode::Geometric;
    double ratio = 0.5;
    std::vector<double> list;       // p_2, p_3, ...
    bool geometric_tail = true;     // Explicit: spread leftover mass with ratio 1/2
};

struct ChainSpec {
    enum class Kind { DenseFinite, PetalFlower };
    Kind kind = Kind::DenseFinite;
    std::vector<std::vector<double>> Q;
    double rate = 1.0;
    PetalWeights weights;
    int satellite = 0;  // petal index the extra state 0 hangs off; 0 = none
};

struct MapSpec {
    ChainSpec chain;
    // DenseFinite
    std::vector<Triplet> states;
    std::map<std::pair<int, int>, BivLaw> switch_laws;
    // PetalFlower: hub = 1, petals 2.., optional satellite 0
    Triplet hub, sat;
    PetalTriplet petal;
    PetalSwitch hub_to_petal, petal_to_hub, sat_to_attach, attach_to_sat;
    // keeps the random-draw layout of a parent spec (E1/E2 split)
    bool gauss_hint = false;
    // one half of the E1/E2 split: an identically zero eta is allowed
    bool part = false;
};

constexpr int kMaxPetal = 64;

/// Petal weights p_j for j = 2..kMaxPetal (index j); leftover mass is merged
/// into the last materialized petal.
std::vector<double> petal_weights(const ChainSpec& c);
bool petal_countable(const ChainSpec& c);

struct ValidationReport {
    bool ok = true;
    std::vector<std::string> violations;
};
ValidationReport validate(const MapSpec& spec);

/// Compiled per-state dynamics used by the path engine.
struct StateDyn {
    bool present = false;
    double bx = 0.0;
    Mag by;
    double gx = 0.0, gy1 = 0.0, gy2 = 0.0;  // Cholesky factor of the cell covariance
    double sig2x = 0.0;
    bool gauss = false;
    double rate = 0.0;
    BivLaw law;
    double exit = 0.0;
    std::vector<int> to;
    std::vector<double> cum;
    std::vector<BivLaw> sw;
    double pi = 0.0;
    double weight = 0.0;  // petal weight p_j (petals only)
    const BivLaw* switch_to(int j) const;
};

struct Model {
    std::vector<StateDyn> st;
    bool petal = false;
    bool countable = false;
    bool gauss_any = false;
    bool small_block = false;
    double min_hold = HUGE_VAL;
    int n_present() const;
    int first_state() const;
    double q(int i, int j) const;
};

/// Throws std::invalid_argument with the violation list when invalid.
Model compile(const MapSpec& spec);

/// Stationary law indexed like Model::st (absent states get 0).
/// Throws std::domain_error("NonErgodic") if no strictly positive solution.
std::vector<double> stationary_law(const MapSpec& spec);

/// Extended real with an explicit undefined state and an optional formal value.
struct ExtReal {
    enum class Kind { Finite, PosInf, NegInf, Undefined };
    Kind kind = Kind::Finite;
    double value = 0.0;
    bool has_formal = false;
    double formal = 0.0;
    std::string note;
    bool finite() const { return kind == Kind::Finite; }
    std::string str() const;
};

enum class Component { Xi, Eta };
ExtReal long_term_mean(const MapSpec& spec, Component c);

enum class Trichotomy { ToPlusInf, ToMinusInf, Oscillates, Unknown };
Trichotomy drift_trichotomy(const MapSpec& spec);
const char* to_string(Trichotomy t);

/// gamma = b + E-part of jumps with |x| < 1, per unit time.
double xi_gamma(const Triplet& t);
double eta_gamma(const Triplet& t);

}  // namespace mapexp
