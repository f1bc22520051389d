#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "confcurv/admissibility.hpp"
#include "confcurv/bubbles.hpp"
#include "confcurv/flows.hpp"
#include "confcurv/functionals.hpp"
#include "confcurv/grid.hpp"

namespace confcurv {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitConstants = 2,
    kExitNecessary = 3,
    kExitNoCertificate = 4,
    kExitNonCompact = 5,
    kExitNumerical = 6,
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct KSource {
    std::string family = "constant";  // constant, plateau_bump, counterexample, punctured, sine, snapshot
    double value = -1.0;
    double floor = -1.0;
    double max = 0.5;
    double radius = 0.3;
    std::optional<double> plateau;   // default two lattice spacings
    std::optional<Point> center;     // default torus center
    double eps = 0.2;
    double lambda = 100.0;
    double p = 2.2;
    std::optional<double> cutoff;
    double inside = -20.0;
    double outside = 0.01;
    double inner_radius = 0.3;
    double amplitude = 0.5;
    std::filesystem::path snapshot;
};

struct ExperimentConfig {
    int n = 3;
    std::size_t grid = 32;
    double side = 1.0;
    std::uint64_t seed = 1;
    KSource K;
    FlowConfig flow_j;
    FlowConfig flow_i;
    int restarts = 1;
    double perturbation = 0.3;
    SamplerConfig sampler;
    double target_eps0 = 1e-3;
    std::size_t sobolev_samples = 64;
    std::vector<double> lambdas{20.0, 40.0, 80.0};
    double bubble_cutoff = 0.0;  // 0 selects side / 8
    CutoffShape bubble_shape = CutoffShape::Smooth;
    PolishOptions polish;
    std::vector<double> eps_sweep;  // maxima of the plateau family for the limit sweep
    std::filesystem::path decompose_u;
    std::filesystem::path decompose_u_inf;
    std::filesystem::path out = ".";
    Which which = Which::J;

    GridSpec grid_spec() const { return GridSpec(n, grid, side); }
};

// Parses key=value lines; '#' starts a comment. Unknown keys throw ConfigError.
ExperimentConfig parse_config(std::istream& is, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);
void apply_config_line(ExperimentConfig& cfg, const std::string& key, const std::string& value,
                       const std::filesystem::path& base_dir = ".");

ScalarField build_K(const GridSpec& g, const KSource& src);

struct TwoSolutionsReport {
    std::string u0_path, u1_path;
    double r0 = 0.0, k0 = 0.0, J0 = 0.0, beta0 = 0.0, residual0 = 0.0;
    double r1 = 0.0, k1 = 0.0, I1 = 0.0, beta1 = 0.0, residual1 = 0.0;
    double I_inf = 0.0;
    double max_K = 0.0;
    ABCertificate certificate;
    std::vector<double> lambdas;
    std::vector<double> seed_I;
    std::vector<double> seed_gap;
    std::vector<bool> seed_in_Y;
    double gap_slope = 0.0;
    bool gap_slope_valid = false;
    double chosen_lambda = 0.0;
    double separation = 0.0;  // relative max-norm distance of the two solutions
    CompactnessReport compactness;
    bool i_flow_converged = false;
    bool u0_signs = false, u1_signs = false, residuals_ok = false, below_threshold = false, distinct = false;
    bool verdict = false;
    std::vector<double> sweep_eps;
    std::vector<double> sweep_I;
    bool sweep_monotone = false;
    std::string text() const;
};

// Core of the two-solution pipeline without certification or file output.
TwoSolutionsReport two_solutions_core(const ScalarField& K, const ExperimentConfig& cfg,
                                      const ABCertificate* cert = nullptr, ScalarField* u0_out = nullptr,
                                      ScalarField* u1_out = nullptr, FlowTrace* trace_j = nullptr,
                                      FlowTrace* trace_i = nullptr);

// Log-log least-squares slope.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

int cmd_constants(int n, const std::filesystem::path& out, std::ostream& log);
int cmd_necessary(const ExperimentConfig& cfg, std::ostream& log);
int cmd_flow(const ExperimentConfig& cfg, std::ostream& log);
int cmd_minimize(const ExperimentConfig& cfg, std::ostream& log);
int cmd_certify(const ExperimentConfig& cfg, std::ostream& log);
int cmd_decompose(const ExperimentConfig& cfg, std::ostream& log);
int cmd_two_solutions(const ExperimentConfig& cfg, std::ostream& log, TwoSolutionsReport* report = nullptr);

}  // namespace confcurv
