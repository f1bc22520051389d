#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "confcurv/certificate.hpp"
#include "confcurv/grid.hpp"
#include "confcurv/operators.hpp"

namespace confcurv {

class NoCertificateError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

struct SamplerConfig {
    std::uint64_t seed = 1;
    std::size_t random_fields = 200;
    std::size_t bubbles = 100;
    std::size_t hard = 100;
    int kmax = 4;
    double ab_min = 1e-2;
    double ab_max = 1e3;
    int ab_points = 51;
    CertificateScope scope = CertificateScope::Global;
    double sobolev = 1.0;
};

struct CertificateSample {
    std::size_t index = 0;
    int family = 0;  // 0 constant, 1 random smooth, 2 bubble, 3 hard
    double r = 0.0;
    double k = 0.0;
    double h1 = 0.0;
};

std::size_t certificate_sample_count(const SamplerConfig& cfg);
// Regenerates sample `index` (critical norm 1, positive).
ScalarField certificate_sample_field(const ScalarField& K, const SamplerConfig& cfg, std::size_t index, int* family = nullptr);
std::vector<CertificateSample> draw_certificate_samples(const ScalarField& K, const SamplerConfig& cfg);

double ab_slack(int n, double A, double B, const CertificateSample& s);

// Tightest (A, B) on the logarithmic grid whose worst slack reaches target_eps0.
ABCertificate certify_ab(const ScalarField& K, const SamplerConfig& cfg, double target_eps0);
ABCertificate certify_ab_from_samples(int n, const std::vector<CertificateSample>& samples, const SamplerConfig& cfg,
                                      double target_eps0);
// Recomputes every retained sample and returns the minimal slack.
double replay_certificate(const ScalarField& K, const SamplerConfig& cfg, const ABCertificate& cert);

struct DomainPair {
    DirichletMask omega;
    DirichletMask big;
    double dist = 0.0;

    // Dilations of {K >= 0} by `cells` and 2*`cells` lattice cells.
    static DomainPair from_K(const ScalarField& K, int cells);
    static DomainPair from_masks(DirichletMask omega, DirichletMask big);
    void validate(const ScalarField& K) const;
};

// Lattice distance between the boundaries of two nested masks.
double boundary_distance(const DirichletMask& inner, const DirichletMask& outer);

struct RauzyReport {
    double nu1_D = 0.0;
    double dist = 0.0;
    double sup_K = 0.0;
    double inf_negK_outside = 0.0;
    double vol_D_minus_Omega = 0.0;
    double vol_M_minus_Omega = 0.0;
    double sobolev = 1.0;
    double C1 = 0.0, C2 = 0.0, C3 = 0.0;
    double B_min = 0.0;
    double chain_threshold = 0.0;
    double eps = 0.0;
    bool eps_is_default = true;
    double bracket = 0.0;
    bool nu1_positive = false;
    bool condition_i = false;
    bool pass = false;
    std::string text() const;
};

RauzyReport check_rauzy_smallness(const ScalarField& K, const DomainPair& pair, double sobolev,
                                  std::optional<double> eps = std::nullopt);

struct KWReport {
    ScalarField w_bar;
    double min_w_bar = 0.0;
    double integral_K = 0.0;
    double nu1_omega_K = 0.0;
    bool omega_K_empty = false;
    bool omega_K_full = false;
    double residual = 0.0;
    bool w_positive = false;
    bool integral_negative = false;
    bool nu1_positive = false;
    std::string text() const;
};

KWReport kazdan_warner(const ScalarField& K);

// -eps + eta (lambda / (1 + lambda^2 d^2))^p with eta = 1 on B_rho, 0 off B_2rho.
ScalarField counterexample_K(const GridSpec& g, double eps, double lambda, double p, const Point& x0,
                             std::optional<double> cutoff_radius = std::nullopt);

// exp(1 - 1/(1 - s^2)) on [0, 1), 1 below, 0 above.
double bump_profile(double s);
double bump_profile_derivative(double s);

struct SubsolutionReport {
    double residual = 0.0;
    double max_violation = 0.0;  // max of u^(-4/(n-2)) - w_bar
    bool holds = false;
};

SubsolutionReport subsolution_check(const ScalarField& u, const ScalarField& K, double residual_tol = 1e-6);

}  // namespace confcurv
