#pragma once

#include <optional>

#include "confcurv/grid.hpp"
#include "confcurv/spectral.hpp"

namespace confcurv {

struct EnergyReport {
    double r = 0.0;
    double k = 0.0;
    std::optional<double> J;
    std::optional<double> I;
    double critical_norm = 0.0;
    bool in_X = false;
    bool in_Y = false;
};

constexpr double kNormTolerance = 1e-10;

// <L u, u> via Parseval.
double r_of(const ScalarField& u);
double r_of(const GridSpec& g, const Spectrum& u_hat);
// Integral of K u^(2n/(n-2)).
double k_of(const ScalarField& u, const ScalarField& K);

EnergyReport j_energy(const ScalarField& u, const ScalarField& K);
EnergyReport i_energy(const ScalarField& u, const ScalarField& K);

// Scale-invariant energy values from (r, k); NaN outside the cone.
double j_value(int n, double r, double k);
double i_value(int n, double r, double k);

// R_g = u^(-p) L u; aborts if u drops below the floor.
ScalarField scalar_curvature(const ScalarField& u, double floor = 1e-10);

ScalarField grad_j(const ScalarField& u, const ScalarField& K);
ScalarField grad_i(const ScalarField& u, const ScalarField& K);

// Flow defects (k/r) R - K and R - (r/k) K.
ScalarField defect_j(const ScalarField& u, const ScalarField& K);
ScalarField defect_i(const ScalarField& u, const ScalarField& K);

// Integral of |defect|^2 u^(2n/(n-2)).
double delta_j_sq(const ScalarField& u, const ScalarField& K);
double delta_i_sq(const ScalarField& u, const ScalarField& K);
// Integral of |defect|^q u^(2n/(n-2)).
double defect_moment(const ScalarField& defect, const ScalarField& u, double q);

// max |L u - K u^p / beta|.
double el_residual(const ScalarField& u, const ScalarField& K, double beta);
// Least-squares beta for L u = K u^p / beta.
double fit_beta(const ScalarField& u, const ScalarField& K);

struct ResidualNorms {
    double max_norm = 0.0;
    double l2 = 0.0;
    double h1_dual = 0.0;  // sqrt(<S^{-1} f, f>) with the screened operator S
};
ResidualNorms residual_norms(const ScalarField& u, const ScalarField& K, double beta);

struct ScaledSolution {
    ScalarField w;
    double beta = 1.0;      // least-squares fit on the input
    double scale = 1.0;     // w = scale * u
    double residual = 0.0;  // el_residual(w, K, 1)
    double r = 0.0;
    double k = 0.0;
};

// w = (r/k)^((n-2)/4) u, so that L w = K w^p for a critical point u.
ScaledSolution scaled_solution(const ScalarField& u_crit, const ScalarField& K);

struct PolishOptions {
    double tol = 1e-9;
    int max_newton = 30;
    int gmres_restart = 60;
    int gmres_max_restarts = 10;
    double gmres_rel_tol = 1e-7;
};

struct PolishResult {
    ScalarField w;
    double residual = 0.0;
    int newton_steps = 0;
    bool converged = false;
};

// Newton iteration on L w = K w^p with spectrally preconditioned GMRES.
PolishResult newton_polish(const ScalarField& w0, const ScalarField& K, const PolishOptions& opt = {});

// Projects phi onto the tangent space of the critical-norm sphere at u.
ScalarField tangent_projection(const ScalarField& u, const ScalarField& phi);

}  // namespace confcurv
