#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "mapexp/model.hpp"
#include "mapexp/xreal.hpp"

namespace mapexp {

/// Jump epochs and visited states of the modulating chain.
struct ChainPath {
    std::vector<double> times;  // T_0 = 0 < T_1 < ...
    std::vector<int> states;    // J on [T_n, T_{n+1})
    double horizon = 0.0;

    /// Return times tau_n(j) and exit times tau_n^-(j) (for a path started in j).
    std::vector<double> return_times(int j) const;
    std::vector<double> exit_times(int j) const;
    double occupation(int j) const;
};

/// Draws holding times and successors; shared by the chain-only and full engines.
class ChainSampler {
public:
    ChainSampler(const Model& m, int start, std::uint64_t seed);
    int state() const { return state_; }
    /// Time of the next jump and the state it leads to (inf if absorbing).
    double next_time() const { return t_next_; }
    int next_state() const { return next_; }
    void advance();

private:
    void draw(double now);
    const Model* m_;
    Rng rng_;
    int state_ = 0, next_ = 0;
    double t_next_ = HUGE_VAL;
};

ChainPath simulate_chain(const Model& m, double horizon, std::uint64_t seed, int start = -1);

enum class Mark { Start, Grid, Levy, Switch, End };
const char* to_string(Mark m);

/// One event of a simulated path. The cell (t_prev, t] runs in `state`;
/// the jump at t (if any) moves the chain to `next`.
struct Point {
    double t = 0.0;
    int state = 0;
    int next = 0;
    Mark mark = Mark::Start;
    std::int64_t grid = -1;  // sub-grid index k for t = k h
    double dxi_c = 0.0;      // continuous increments over the cell
    Mag deta_c;
    double bxi = 0.0;   // xi drift in the cell
    double sig2 = 0.0;  // xi Gaussian variance rate in the cell
    double dxi_j = 0.0;  // jump at t
    Mag deta_j;
    double xi = 0.0;  // values after the point
    XReal eta;
    XReal E;
};

enum class GridPolicy { Auto, Always, Never };

struct SimOptions {
    double horizon = 100.0;
    double mesh = 0.0;  // 0 = min(0.01, shortest mean holding time / 50)
    GridPolicy grid = GridPolicy::Auto;
    int start = -1;  // -1 = hub (petal flower) or state 0
    double block = 0.0;              // extra points at multiples of `block`
    std::vector<double> stops;       // extra points at these times (sorted)
};

double auto_mesh(const Model& m);

/// (1 - e^{-z}) / z, continuous at 0.
double phi1(double z);

/// Contributions of one cell (xi drift increment bdx) and of a jump to the
/// exponential integral, with weights e^{-(xi_{s-} - base)}.
XReal cell_integral(double xi_left, double base, double bdx, const Mag& deta_c);
XReal jump_integral(double xi_left, double base, const Mag& deta_j);

/// Event-driven path generator.
class PathStream {
public:
    PathStream(const Model& m, const SimOptions& o, std::uint64_t seed, const ChainPath* chain = nullptr);
    /// Fills the next point; false once the End point has been produced.
    bool next(Point& p);
    double mesh() const { return h_; }
    bool gridded() const { return grid_; }

private:
    double chain_time() const;
    int chain_next() const;
    void chain_advance();
    void draw_levy(double now);

    const Model* m_;
    SimOptions o_;
    const ChainPath* cp_;
    std::optional<ChainSampler> cs_;
    std::size_t cp_idx_ = 0;
    Rng rng_;
    std::normal_distribution<double> norm_;
    std::exponential_distribution<double> expo_;
    double h_ = 0.0;
    bool grid_ = false;
    bool started_ = false, done_ = false;
    int s_ = 0;
    double t_ = 0.0, xi_ = 0.0, t_levy_ = HUGE_VAL;
    std::int64_t k_ = 0, kb_ = 0;
    std::size_t stop_idx_ = 0;
    ExactSum eta_, E_;
};

struct MapPath {
    std::vector<Point> pts;
    double mesh = 0.0;
    std::uint64_t seed = 0;
};

MapPath simulate_path(const Model& m, const SimOptions& o, std::uint64_t seed);
/// Additive components on a given chain path (its horizon is used).
MapPath simulate_additive(const Model& m, const ChainPath& chain, SimOptions o, std::uint64_t seed);

struct ExpIntegralTrace {
    std::vector<XReal> E;
};
ExpIntegralTrace exp_integral(const MapPath& path);

/// Keeps every 2^m-th sub-grid point plus all non-grid events, merging cells.
MapPath coarsen(const MapPath& path, int m);

struct AnchorMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Path with the excursions away from j cut out.
struct ConflatedPath {
    std::vector<double> t, xi;
    std::vector<XReal> E;
    std::vector<char> conf;  // 1 where the point carries a conflation jump
    std::size_t n_conf = 0;
    double length = 0.0;
};
ConflatedPath conflate(const MapPath& path, int j);

/// Statistics of one regeneration cycle at an anchor.
/// log fields are log|.| and -inf for zero values.
struct CycleSample {
    double xi_tau = 0.0;       // xi_{tau_1(j)}
    double conf_jump = 0.0;    // xi_{tau_1(j)} - xi_{tau_1^-(j)-}
    double log_eta_inc = -HUGE_VAL;
    double log_exc_int = -HUGE_VAL;
    double log_w = -HUGE_VAL;       // sup of the cycle integral
    double log_maxjump = -HUGE_VAL;  // largest single discounted eta jump
    double log_cyc_int = -HUGE_VAL;  // cycle integral at tau_1(j)
    double duration = 0.0;
};

struct NoCompleteCycle : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Online cycle extraction from a point stream started in the anchor.
/// With block > 0 the cycles are the blocks [n block, (n+1) block] instead.
class CycleCollector {
public:
    CycleCollector(int anchor, double block);
    /// Returns true when the point closed a cycle.
    bool push(const Point& p);
    std::vector<CycleSample>& cycles() { return cycles_; }
    const std::vector<CycleSample>& cycles() const { return cycles_; }
    /// Count the open cycle as discarded.
    std::size_t finish();

private:
    void close(double t);
    int j_;
    double block_;
    std::int64_t next_block_ = 1;
    bool away_ = false;
    double t0_ = 0.0, t_last_ = 0.0, xi0_ = 0.0, xi_prev_ = 0.0;
    double xi_exit_ = 0.0;
    ExactSum local_, exc_, eta_exc_;
    double log_w_ = -HUGE_VAL, log_max_ = -HUGE_VAL;
    std::vector<CycleSample> cycles_;
};

struct ExcursionBatch {
    int anchor = 0;
    std::vector<CycleSample> cycles;
    std::size_t discarded = 0;
};

/// Throws AnchorMismatch if a path does not start in j and NoCompleteCycle if nothing closed.
ExcursionBatch excursion_stats(const std::vector<MapPath>& paths, int j, double block = 0.0);

/// Cycles from fresh paths started in j until `target` cycles or `max_events` events.
ExcursionBatch collect_cycles(const Model& m, int j, std::size_t target, std::size_t max_events, std::uint64_t seed,
                              double block = 0.0);

/// CSV with columns t,state,xi,eta,E,mark.
void write_csv(std::ostream& os, const MapPath& path);

}  // namespace mapexp
