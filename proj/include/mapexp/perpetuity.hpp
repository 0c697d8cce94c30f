#pragma once

#include <map>
#include <string>
#include <vector>

#include "mapexp/simulate.hpp"

namespace mapexp {

/// Z_n = Z_{n-1} + (A_1 ... A_{n-1}) B_n with A = e^{-dxi}.
struct PerpetuityStep {
    double dxi = 0.0;  // A = e^{-dxi}
    XReal B;
    int from = 0, to = 0;
    double A() const { return std::exp(-dxi); }
};

XReal perpetuity_iterate(const std::vector<PerpetuityStep>& steps, std::size_t n);
/// All partial values Z_1 .. Z_N.
std::vector<XReal> perpetuity_partials(const std::vector<PerpetuityStep>& steps);

/// One step per chain jump; `terminal` appends the segment after the last jump (from == to).
std::vector<PerpetuityStep> discretize_at_jumps(const MapPath& path, bool terminal = false);
/// Indices into path.pts of the chain jumps, aligned with the steps above.
std::vector<std::size_t> jump_indices(const MapPath& path);

struct DegSample {
    double A = 1.0, B = 0.0;
    int from = 0, to = 0;
};

struct DegeneracyResult {
    enum class Status { Solution, None, InsufficientSamples };
    Status status = Status::None;
    std::map<int, double> constants;
    double residual = HUGE_VAL;
    double tolerance = 0.0;
    std::size_t n_samples = 0;
    std::string note;
    bool found() const { return status == Status::Solution; }
};
const char* to_string(DegeneracyResult::Status s);

struct DegeneracyOptions {
    bool diffusive = false;
    double mesh = 0.0;  // used for the diffusive tolerance
};

/// Solves A c_to + B = c_from over all samples.
DegeneracyResult degeneracy_solve(const std::vector<DegSample>& samples, const DegeneracyOptions& o = {});

std::vector<DegSample> to_samples(const std::vector<PerpetuityStep>& steps);

struct IdentityCheck {
    bool ok = false;
    double max_dev = 0.0;  // max |E - (c_J0 - c_Jt e^{-xi})| / (1 + |c_J0| + |c_Jt e^{-xi}|)
};
IdentityCheck verify_degenerate_identity(const MapPath& path, const std::map<int, double>& c, double tol);

/// Stochastic logarithm of e^{-xi}: per-point increments and running value.
struct StochLog {
    std::vector<double> U;
    std::vector<double> dU_c;  // -dxi_c + sig2 dt / 2
    std::vector<double> dU_j;  // e^{-dxi_j} - 1
};
StochLog stochastic_logarithm(const MapPath& path);
/// log of the stochastic exponential of U on the path points.
std::vector<double> doleans_dade_log(const MapPath& path, const StochLog& u);

/// eta_t + int c_{J_s-} dU_s + c_{J_t} - c_{J_0} along the path.
std::vector<double> degenerate_eta_residual(const MapPath& path, const StochLog& u, const std::map<int, double>& c);

}  // namespace mapexp
