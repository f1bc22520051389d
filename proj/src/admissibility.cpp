#include "confcurv/admissibility.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "confcurv/functionals.hpp"
#include "confcurv/sampling.hpp"
#include "confcurv/spectral.hpp"

namespace confcurv {

double bump_profile(double s)
{
    if (s <= 0.0) return 1.0;
    if (s >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

double bump_profile_derivative(double s)
{
    if (s <= 0.0 || s >= 1.0) return 0.0;
    const double q = 1.0 - s * s;
    return bump_profile(s) * (-2.0 * s / (q * q));
}

// ---------------------------------------------------------------- certificate

std::size_t certificate_sample_count(const SamplerConfig& cfg) { return 1 + cfg.random_fields + cfg.bubbles + cfg.hard; }

namespace {

struct HardGeometry {
    Point center{};
    double radius = 0.1;
    bool has_positive = false;
};

HardGeometry hard_geometry(const ScalarField& K)
{
    const GridSpec& g = K.grid;
    HardGeometry hg;
    const std::size_t am = K.argmax();
    hg.center = lattice_point(g, am);
    double rmax = 0.0;
    for (std::size_t i = 0; i < K.size(); ++i)
        if (K[i] >= 0.0) {
            hg.has_positive = true;
            rmax = std::max(rmax, torus_distance(g, lattice_point(g, i), hg.center));
        }
    hg.radius = hg.has_positive ? rmax + 2.0 * g.spacing() : 0.1 * g.side;
    hg.radius = std::min(hg.radius, 0.5 * g.side);
    return hg;
}

}  // namespace

ScalarField certificate_sample_field(const ScalarField& K, const SamplerConfig& cfg, std::size_t index, int* family)
{
    const GridSpec& g = K.grid;
    const CriticalExponents ce(g.n);
    if (index >= certificate_sample_count(cfg)) throw std::out_of_range("sample index");
    auto rng = stream_rng(cfg.seed, index);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    ScalarField u(g, 1.0);
    int fam = 0;
    if (index == 0) {
        fam = 0;
    } else if (index <= cfg.random_fields) {
        fam = 1;
        const double sigma = 0.1 * std::pow(20.0, uni(rng));
        const double decay = 1.0 + 3.0 * uni(rng);
        ScalarField f = random_smooth_field(g, rng, cfg.kmax, decay);
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::exp(sigma * f[i]);
    } else if (index <= cfg.random_fields + cfg.bubbles) {
        fam = 2;
        const Point a = random_point(g, rng);
        const double lam_min = 2.0 / g.side;
        const double lam_max = 0.25 * static_cast<double>(g.points) / g.side;
        const double lam = lam_min * std::pow(lam_max / lam_min, uni(rng));
        const double c = 0.05 + 0.95 * uni(rng);
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double d = torus_distance(g, lattice_point(g, i), a);
            u[i] = c + power(lam / (1.0 + lam * lam * d * d), 0.5 * (g.n - 2));
        }
    } else {
        fam = 3;
        const HardGeometry hg = hard_geometry(K);
        const double rho = hg.radius * (0.5 + uni(rng));
        const double tau = 0.04 * uni(rng) - 0.02;
        ScalarField psi(g);
        for (std::size_t i = 0; i < psi.size(); ++i)
            psi[i] = bump_profile(torus_distance(g, lattice_point(g, i), hg.center) / rho);
        auto make = [&](double s) {
            ScalarField v(g);
            for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 + s * psi[i];
            return v;
        };
        double s = 20.0 * uni(rng);
        if (hg.has_positive) {
            // k(u) / |u|_{2*}^{2*} crosses the target once the bump dominates.
            auto kn = [&](double sv) {
                const ScalarField v = normalize_critical(make(sv));
                return k_of(v, K);
            };
            const double target = tau * std::abs(integrate(K)) / std::max(g.volume(), 1e-300);
            double lo = 0.0, hi = 1.0;
            while (kn(hi) < target && hi < 1e6) hi *= 2.0;
            if (kn(hi) >= target && kn(lo) < target) {
                for (int it = 0; it < 80; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (kn(mid) < target ? lo : hi) = mid;
                }
                s = 0.5 * (lo + hi);
            }
        }
        u = make(s);
    }
    if (family) *family = fam;
    return normalize_critical(u);
}

std::vector<CertificateSample> draw_certificate_samples(const ScalarField& K, const SamplerConfig& cfg)
{
    std::vector<CertificateSample> out;
    const std::size_t total = certificate_sample_count(cfg);
    out.reserve(total);
    for (std::size_t i = 0; i < total; ++i) {
        CertificateSample s;
        s.index = i;
        const ScalarField u = certificate_sample_field(K, cfg, i, &s.family);
        s.r = r_of(u);
        s.k = k_of(u, K);
        s.h1 = h1_norm_sq(u);
        if (cfg.scope == CertificateScope::OnX && !(s.r < 0.0 && s.k < 0.0)) continue;
        out.push_back(s);
    }
    return out;
}

double ab_slack(int n, double A, double B, const CertificateSample& s)
{
    return A * s.r + B * std::pow(std::abs(s.k), (n - 2.0) / n) - s.h1;
}

ABCertificate certify_ab_from_samples(int n, const std::vector<CertificateSample>& samples, const SamplerConfig& cfg,
                                      double target_eps0)
{
    if (samples.empty()) throw NoCertificateError("no empirical certificate: empty sample set");
    if (cfg.ab_points < 2) throw std::invalid_argument("ab_points must be at least 2");
    std::vector<double> grid(cfg.ab_points);
    for (int i = 0; i < cfg.ab_points; ++i)
        grid[i] = cfg.ab_min * std::pow(cfg.ab_max / cfg.ab_min, static_cast<double>(i) / (cfg.ab_points - 1));
    ABCertificate c;
    c.eps0 = target_eps0;
    c.sample_count = samples.size();
    c.seed = cfg.seed;
    c.scope = cfg.scope;
    c.sobolev = cfg.sobolev;
    double best_any = -std::numeric_limits<double>::infinity();
    for (double B : grid) {
        for (double A : grid) {
            double worst = std::numeric_limits<double>::infinity();
            for (const auto& s : samples) worst = std::min(worst, ab_slack(n, A, B, s));
            best_any = std::max(best_any, worst);
            if (worst >= target_eps0) {
                c.A = A;
                c.B = B;
                c.worst_slack = worst;
                return c;
            }
        }
    }
    std::ostringstream os;
    os << "no empirical certificate: K likely too positive (best worst-case slack " << best_any << ")";
    throw NoCertificateError(os.str());
}

ABCertificate certify_ab(const ScalarField& K, const SamplerConfig& cfg, double target_eps0)
{
    return certify_ab_from_samples(K.grid.n, draw_certificate_samples(K, cfg), cfg, target_eps0);
}

double replay_certificate(const ScalarField& K, const SamplerConfig& cfg, const ABCertificate& cert)
{
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& s : draw_certificate_samples(K, cfg)) worst = std::min(worst, ab_slack(K.grid.n, cert.A, cert.B, s));
    return worst;
}

// ---------------------------------------------------------------- domains

double boundary_distance(const DirichletMask& inner, const DirichletMask& outer)
{
    const GridSpec& g = inner.grid;
    const long N = static_cast<long>(g.points);
    auto is_boundary = [&](const DirichletMask& m, std::size_t i, bool want_inside) {
        // Inside points with an outside neighbour, or outside points with an inside neighbour.
        if (m.contains(i) != want_inside) return false;
        std::size_t rest = i;
        std::array<long, kMaxDim> ijk{};
        for (int d = g.n - 1; d >= 0; --d) {
            ijk[d] = static_cast<long>(rest % g.points);
            rest /= g.points;
        }
        for (int d = 0; d < g.n; ++d)
            for (long s : {-1L, 1L}) {
                std::array<std::size_t, kMaxDim> q{};
                for (int e = 0; e < g.n; ++e) q[e] = static_cast<std::size_t>(ijk[e]);
                q[d] = static_cast<std::size_t>(((ijk[d] + s) % N + N) % N);
                if (m.contains(lattice_index(g, q)) != want_inside) return true;
            }
        return false;
    };
    std::vector<Point> a, b;
    for (std::size_t i = 0; i < g.total(); ++i) {
        if (is_boundary(inner, i, true)) a.push_back(lattice_point(g, i));
        if (is_boundary(outer, i, false)) b.push_back(lattice_point(g, i));
    }
    if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : a)
        for (const auto& q : b) best = std::min(best, torus_distance(g, p, q));
    return best;
}

DomainPair DomainPair::from_masks(DirichletMask omega, DirichletMask big)
{
    DomainPair dp;
    dp.dist = boundary_distance(omega, big);
    dp.omega = std::move(omega);
    dp.big = std::move(big);
    return dp;
}

DomainPair DomainPair::from_K(const ScalarField& K, int cells)
{
    const DirichletMask base = superlevel_mask(K, 0.0);
    return from_masks(dilate(base, cells), dilate(base, 2 * cells));
}

void DomainPair::validate(const ScalarField& K) const
{
    const GridSpec& g = K.grid;
    bool strict = false;
    for (std::size_t i = 0; i < g.total(); ++i) {
        if (omega.contains(i) && !big.contains(i)) throw std::invalid_argument("omega is not contained in D");
        if (big.contains(i) && !omega.contains(i)) strict = true;
        if (K[i] >= 0.0 && !omega.contains(i)) throw std::invalid_argument("{K >= 0} is not contained in omega");
    }
    if (!strict) throw std::invalid_argument("omega must be strictly smaller than D");
    if (!(dist > 2.0 * g.spacing())) throw std::invalid_argument("dist(omega, D) must exceed two lattice cells");
}

std::string RauzyReport::text() const
{
    std::ostringstream os;
    os << std::setprecision(10);
    os << "nu1_D=" << nu1_D << "\n"
       << "dist=" << dist << "\n"
       << "sup_K=" << sup_K << "\n"
       << "inf_negK_outside_omega=" << inf_negK_outside << "\n"
       << "vol_D_minus_omega=" << vol_D_minus_Omega << "\n"
       << "vol_M_minus_omega=" << vol_M_minus_Omega << "\n"
       << "sobolev=" << sobolev << "\n"
       << "C1=" << C1 << "\nC2=" << C2 << "\nC3=" << C3 << "\n"
       << "B_min=" << B_min << "\n"
       << "chain_threshold=" << chain_threshold << "\n"
       << "eps=" << eps << (eps_is_default ? " (chain default, grid dependent)" : " (user)") << "\n"
       << "bracket=" << bracket << "\n"
       << "nu1_positive=" << nu1_positive << "\n"
       << "condition_i=" << condition_i << "\n"
       << "pass=" << pass << "\n";
    return os.str();
}

RauzyReport check_rauzy_smallness(const ScalarField& K, const DomainPair& pair, double sobolev, std::optional<double> eps)
{
    const GridSpec& g = K.grid;
    const CriticalExponents ce(g.n);
    const int n = g.n;
    const double en = static_cast<double>(n) / (n - 2);
    RauzyReport rep;
    rep.sobolev = sobolev;
    rep.sup_K = K.max();
    rep.dist = pair.dist;
    double inf_neg = std::numeric_limits<double>::infinity();
    std::size_t n_outside = 0, n_shell = 0;
    for (std::size_t i = 0; i < g.total(); ++i) {
        if (!pair.omega.contains(i)) {
            inf_neg = std::min(inf_neg, -K[i]);
            ++n_outside;
            if (pair.big.contains(i)) ++n_shell;
        }
    }
    if (!(inf_neg > 0.0)) throw std::invalid_argument("Omega does not contain {K >= 0}");
    rep.inf_negK_outside = inf_neg;
    rep.vol_M_minus_Omega = static_cast<double>(n_outside) * g.cell_volume();
    rep.vol_D_minus_Omega = static_cast<double>(n_shell) * g.cell_volume();
    rep.nu1_D = dirichlet_nu1(pair.big).value;
    rep.nu1_positive = rep.nu1_D > 0.0;

    const double nu = rep.nu1_D;
    const double d = rep.dist;
    rep.C3 = std::pow(rep.vol_M_minus_Omega, 2.0 / n);
    rep.C2 = ce.c_n;  // cutoff gradient bounded by 1/d
    if (rep.nu1_positive) {
        const double inner = 2.0 * rep.C2 * (nu + 1.0) / nu * std::pow(rep.vol_D_minus_Omega, 2.0 / n) / (d * d) + rep.C3;
        rep.B_min = 2.0 * inner / std::pow(inf_neg, 1.0 / en);
        rep.C1 = std::pow(ce.c_n * nu / (4.0 * (nu + 1.0) * sobolev * sobolev), en);
        rep.chain_threshold = rep.C1 / std::pow(rep.B_min, en);
    }
    const double shape = rep.nu1_positive
                             ? std::pow(d, 2.0 * (n - 1.0) / (n - 2.0)) * std::pow(nu / (nu + 1.0), en) * inf_neg
                             : 0.0;
    if (eps) {
        rep.eps = *eps;
        rep.eps_is_default = false;
    } else {
        rep.eps = shape > 0.0 ? rep.chain_threshold / shape : 0.0;
        rep.eps_is_default = true;
    }
    rep.bracket = rep.eps * shape;
    rep.condition_i = rep.nu1_positive && rep.sup_K < rep.bracket;
    rep.pass = rep.condition_i && rep.nu1_positive;
    return rep;
}

// ---------------------------------------------------------------- Kazdan-Warner

std::string KWReport::text() const
{
    std::ostringstream os;
    os << std::setprecision(10);
    os << "integral_K=" << integral_K << "\n"
       << "min_w_bar=" << min_w_bar << "\n"
       << "nu1_omega_K=" << nu1_omega_K << (omega_K_empty ? " (omega_K empty)" : "")
       << (omega_K_full ? " (omega_K is the whole torus)" : "") << "\n"
       << "w_bar_residual=" << residual << "\n"
       << "condition_integral_K_negative=" << (integral_negative ? "pass" : "fail") << "\n"
       << "condition_w_bar_positive=" << (w_positive ? "pass" : "fail") << "\n"
       << "condition_nu1_omega_K_positive=" << (nu1_positive ? "pass" : "fail") << "\n";
    return os.str();
}

KWReport kazdan_warner(const ScalarField& K)
{
    require_finite(K);
    const GridSpec& g = K.grid;
    KWReport rep;
    ScalarField rhs(K);
    for (double& v : rhs.values) v = -v;
    const SpectralOperator S(g, OperatorKind::ScreenedL);
    rep.w_bar = S.solve(rhs);
    const ScalarField back = S.apply(rep.w_bar);
    for (std::size_t i = 0; i < g.total(); ++i) rep.residual = std::max(rep.residual, std::abs(back[i] - rhs[i]));
    rep.min_w_bar = rep.w_bar.min();
    rep.integral_K = integrate(K);
    const DirichletMask omega = dilate(superlevel_mask(K, 0.0), 1);
    const std::size_t cnt = omega.count();
    if (cnt == 0) {
        rep.omega_K_empty = true;
        rep.nu1_omega_K = std::numeric_limits<double>::infinity();
    } else if (cnt == g.total()) {
        rep.omega_K_full = true;
        rep.nu1_omega_K = -1.0;  // constants on the closed torus
    } else {
        rep.nu1_omega_K = dirichlet_nu1(omega).value;
    }
    rep.w_positive = rep.min_w_bar > 0.0;
    rep.integral_negative = rep.integral_K < 0.0;
    rep.nu1_positive = rep.nu1_omega_K > 0.0;
    return rep;
}

ScalarField counterexample_K(const GridSpec& g, double eps, double lambda, double p, const Point& x0,
                             std::optional<double> cutoff_radius)
{
    const double lo = std::min(2.0, 0.5 * g.n);
    if (!(p > lo && p < g.n)) throw std::invalid_argument("p out of range (min{2, n/2}, n)");
    if (!(eps > 0.0 && lambda > 0.0)) throw std::invalid_argument("eps and lambda must be positive");
    const double rho = cutoff_radius.value_or(eps);
    if (!(rho > 0.0)) throw std::invalid_argument("cutoff radius must be positive");
    ScalarField K(g);
    for (std::size_t i = 0; i < K.size(); ++i) {
        const double d = torus_distance(g, lattice_point(g, i), x0);
        const double eta = bump_profile((d - rho) / rho);
        K[i] = -eps + (eta > 0.0 ? eta * std::pow(lambda / (1.0 + lambda * lambda * d * d), p) : 0.0);
    }
    return K;
}

SubsolutionReport subsolution_check(const ScalarField& u, const ScalarField& K, double residual_tol)
{
    const CriticalExponents ce(u.grid.n);
    SubsolutionReport rep;
    rep.residual = el_residual(u, K, 1.0);
    if (!(rep.residual < residual_tol)) throw NumericalError("not a solution (residual " + std::to_string(rep.residual) + ")");
    ScalarField rhs(K);
    for (double& v : rhs.values) v = -v;
    const ScalarField w = SpectralOperator(u.grid, OperatorKind::ScreenedL).solve(rhs);
    rep.max_violation = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < u.size(); ++i)
        rep.max_violation = std::max(rep.max_violation, power(u[i], -ce.conf) - w[i]);
    rep.holds = rep.max_violation <= 1e-8;
    return rep;
}

}  // namespace confcurv
