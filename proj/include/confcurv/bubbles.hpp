#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "confcurv/grid.hpp"

namespace confcurv {

struct BubbleConstants {
    int n = 3;
    double b = 0.0;
    double c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0;
    double c0 = 0.0;
    double gamma_n = 0.0;
    double omega_n = 0.0;  // unit ball volume, the normalization entering gamma_n
};

// Integral over R^n of r^(2a) (1 + r^2)^(-s).
double radial_integral_closed(int n, double a, double s);
double radial_integral_quadrature(int n, double a, double s);
double sphere_area(int n);

BubbleConstants bubble_constants_closed(int n);
BubbleConstants bubble_constants(int n);  // quadrature

// Largest relative deviation between quadrature and closed forms.
double constants_max_rel_diff(const BubbleConstants& q, const BubbleConstants& c);
void write_constants_csv(std::ostream& os, const std::vector<std::pair<BubbleConstants, BubbleConstants>>& rows);

enum class CutoffShape { Smooth, Smoothstep };
enum class BubbleMode { Fast, Exact };

struct BubbleParams {
    Point a{};
    double lambda = 1.0;
    double cutoff = 0.125;  // eta = 1 on B_cutoff(a), 0 outside B_2cutoff(a)
    CutoffShape shape = CutoffShape::Smooth;

    static BubbleParams with_default_cutoff(const GridSpec& g, const Point& a, double lambda);
    void validate(const GridSpec& g) const;
};

double cutoff_profile(const BubbleParams& p, double d);
double cutoff_profile_derivative(const BubbleParams& p, double d);

struct BubbleFields {
    ScalarField phi;
    ScalarField phi2;                  // -lambda d/dlambda phi
    std::vector<ScalarField> phi3;     // lambda^-1 grad_a phi, one per axis
};

ScalarField bubble_field(const GridSpec& g, const BubbleParams& p, BubbleMode mode = BubbleMode::Fast);
BubbleFields bubble_fields(const GridSpec& g, const BubbleParams& p, BubbleMode mode = BubbleMode::Fast);

// Relative L2 residual of L phi - 4n(n-1) phi^p on B_cutoff(a).
double bubble_inner_residual(const GridSpec& g, const BubbleParams& p, BubbleMode mode = BubbleMode::Fast);

double epsilon_ij(const GridSpec& g, const BubbleParams& pi, const BubbleParams& pj, BubbleMode mode = BubbleMode::Fast);

struct InteractionMatrix {
    std::vector<BubbleParams> params;
    std::vector<std::vector<double>> eps;
};
InteractionMatrix interaction_matrix(const GridSpec& g, const std::vector<BubbleParams>& params,
                                     BubbleMode mode = BubbleMode::Fast);

struct InteractionReport {
    double epsilon = 0.0;
    double self_c1 = 0.0;           // integral of phi_i^(2n/(n-2))
    double self_ratio = 0.0;        // / c1
    double self_c2 = 0.0;           // integral of phi_i^(4/(n-2)) phi_2i^2
    double self_c2_ratio = 0.0;
    double self_c3 = 0.0;           // first axis of phi_3i
    double self_c3_ratio = 0.0;
    double cross = 0.0;             // integral of phi_i^p phi_j
    double cross_ratio = 0.0;       // / (b eps_ij)
    double orthogonality = 0.0;     // integral of phi_i^p phi_2i
};

InteractionReport interaction_integrals(const GridSpec& g, const BubbleParams& pi, const BubbleParams& pj);

// Least single-bubble energy level above the J-minimizer.
double blowup_threshold(int n, double J_u0, double max_K);

struct SeedReport {
    ScalarField u;
    double alpha0 = 1.0;
    double alpha1 = 1.0;
    double r = 0.0;
    double k = 0.0;
    double I = 0.0;
    bool in_Y = false;
};

// normalize(alpha0 u0 + alpha1 phi_{a,lambda}) for L u0 = K u0^p / beta.
SeedReport seed_test_function(const ScalarField& u0, double beta, const ScalarField& K, const BubbleParams& bubble);

struct DecomposeOptions {
    bool refine = true;
    double eps1 = 0.1;
    double eps2 = 0.02;
    int max_sweeps = 50;
    double max_condition = 1e6;
    double golden_tol = 1e-7;
};

struct Decomposition {
    double alpha = 0.0;
    std::vector<double> alphas;
    std::vector<BubbleParams> bubbles;
    ScalarField v;
    double v_norm = 0.0;        // |v|_{H1} / |u|_{H1}
    double gram_condition = 0.0;
    double orth_u_inf = 0.0;    // |<v, u_inf>_L|
    double orth_phi = 0.0;      // max |<v, phi_i>_L|
    std::vector<double> resid_lambda;  // |<lambda d_lambda phi_i, v>_L|
    std::vector<double> resid_a;       // max over axes |<lambda^-1 grad_a phi_i, v>_L|
    double max_eps_ij = 0.0;
    double objective = 0.0;     // weighted functional at the final parameters
    int sweeps = 0;
    std::vector<std::string> notes;
    std::string text() const;
};

class DecompositionError : public NumericalError {
public:
    DecompositionError(const std::string& what, Decomposition partial)
        : NumericalError(what), partial_(std::move(partial))
    {
    }
    const Decomposition& partial() const { return partial_; }

private:
    Decomposition partial_;
};

// Fixed-parameter solve of the L-pairing system for (alpha, alpha_i).
Decomposition decompose_fixed(const ScalarField& u, const ScalarField& u_inf, const std::vector<BubbleParams>& bubbles,
                              const DecomposeOptions& opt = {});
Decomposition decompose(const ScalarField& u, const ScalarField& u_inf, const std::vector<BubbleParams>& guess,
                        const DecomposeOptions& opt = {});

}  // namespace confcurv
