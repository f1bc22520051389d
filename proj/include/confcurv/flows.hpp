#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "confcurv/certificate.hpp"
#include "confcurv/functionals.hpp"
#include "confcurv/grid.hpp"

namespace confcurv {

enum class Which { J, I };

// ExpEuler: u exp(-dt Phi). Stabilized: u + dt V preconditioned by (1 + dt sigma |xi|^2)^-1.
enum class FlowScheme { ExpEuler, Stabilized };

struct FlowConfig {
    double dt_initial = 1e-4;
    double dt_min = 1e-16;
    double dt_max = 1.0;
    double t_max = 1e6;
    double tol_delta_sq = 1e-10;
    bool renormalize_each_step = true;
    double safeguard_min_u = 1e-10;
    double monitor_p = 0.0;  // 0 selects n/2
    std::size_t max_steps = 1000000;
    int sustain = 5;
    // Caps dt by stability_factor / (largest linearized rate).
    bool stability_cap = true;
    double stability_factor = 1.0;
    std::size_t trace_stride = 1;
    FlowScheme scheme = FlowScheme::ExpEuler;

    void validate() const;
};

struct TraceRow {
    double t, r, k, energy, volume, min_u, max_u, delta_sq, lp_defect;
};

struct FlowTrace {
    std::vector<TraceRow> rows;
    void write_csv(std::ostream& os) const;
};

struct FlowResult {
    ScalarField u;
    FlowTrace trace;
    bool converged = false;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    double t = 0.0;
    double delta_sq = 0.0;
    double energy = 0.0;
    std::string stop_reason;
};

class StiffStepError : public NumericalError {
public:
    StiffStepError(const std::string& what, ScalarField last, FlowTrace partial)
        : NumericalError(what), last_(std::move(last)), partial_(std::move(partial))
    {
    }
    const ScalarField& last_state() const { return last_; }
    const FlowTrace& partial_trace() const { return partial_; }

private:
    ScalarField last_;
    FlowTrace partial_;
};

// Flow velocity Phi for u: (k/r) R - K or R - (r/k) K.
ScalarField flow_defect(const ScalarField& u, const ScalarField& K, Which which);

// One exponential Euler step u exp(-dt Phi), optionally renormalized.
ScalarField step_flow(const ScalarField& u, const ScalarField& K, double dt, Which which, bool renormalize = true);
ScalarField step_j(const ScalarField& u, const ScalarField& K, double dt, bool renormalize = true);
ScalarField step_i(const ScalarField& u, const ScalarField& K, double dt, bool renormalize = true);

FlowResult run_flow(const ScalarField& u0, const ScalarField& K, const FlowConfig& cfg, Which which);

struct MinimizeOptions {
    int restarts = 1;
    std::uint64_t seed = 0;
    std::vector<ScalarField> seeds;  // tried before the generated family
    double perturbation = 0.3;
    int kmax = 2;
};

struct MinimizeResult {
    ScalarField u;
    EnergyReport report;
    std::vector<FlowTrace> traces;
    std::vector<double> energies;
    std::vector<bool> converged;
    std::size_t best = 0;
};

MinimizeResult minimize(const ScalarField& K, const FlowConfig& cfg, Which which, const MinimizeOptions& opt);

struct CompactnessOptions {
    double sobolev = 1.0;
    double sup_abs_K = 1.0;
    double max_K = 0.0;
    double growth_factor = 4.0;
};

struct CompactnessReport {
    bool bounds_hold = true;
    bool concentration_flag = false;
    double energy_level = 0.0;
    double c0 = 0.0;
    double r_lower = 0.0;
    double r_upper = 0.0;
    double k_lower = 0.0;
    double k_upper = 0.0;
    double min_abs_k = 0.0;
    double max_abs_k = 0.0;
    double min_abs_r = 0.0;
    double max_abs_r = 0.0;
    double max_u_growth = 1.0;
    bool monotone_max_u = false;
    std::vector<std::string> notes;
};

CompactnessReport compactness_monitor(const FlowTrace& trace, const ABCertificate& cert, Which which, const GridSpec& g,
                                      const CompactnessOptions& opt);

}  // namespace confcurv
