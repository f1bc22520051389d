#include "confcurv/bubbles.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "confcurv/admissibility.hpp"
#include "confcurv/functionals.hpp"
#include "confcurv/operators.hpp"
#include "confcurv/spectral.hpp"

namespace confcurv {

// ---------------------------------------------------------------- constants

double sphere_area(int n) { return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n); }

double radial_integral_closed(int n, double a, double s)
{
    const double h = 0.5 * n;
    return std::pow(std::numbers::pi, h) * std::exp(std::lgamma(a + h) + std::lgamma(s - a - h) - std::lgamma(h) - std::lgamma(s));
}

double radial_integral_quadrature(int n, double a, double s)
{
    using Rule = boost::math::quadrature::gauss<double, 10>;
    constexpr double R = 100.0;
    constexpr int panels = 10000;
    const double width = R / panels;
    const double e = n - 1.0 + 2.0 * a;
    auto f = [&](double r) { return std::pow(r, e) * std::pow(1.0 + r * r, -s); };
    const auto& x = Rule::abscissa();
    const auto& w = Rule::weights();
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = (p + 0.5) * width;
        double ps = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double dx = 0.5 * width * x[i];
            ps += (x[i] == 0.0) ? w[i] * f(mid) : w[i] * (f(mid - dx) + f(mid + dx));
        }
        sum += 0.5 * width * ps;
    }
    // Tail: (1 + r^2)^(-s) = r^(-2s) sum_j binom(-s, j) r^(-2j).
    double tail = 0.0;
    double binom = 1.0;
    for (int j = 0; j <= 10; ++j) {
        if (j > 0) binom *= (-s - (j - 1)) / j;
        const double q = e - 2.0 * s - 2.0 * j + 1.0;
        tail += binom * std::pow(R, q) / (-q);
    }
    return sphere_area(n) * (sum + tail);
}

namespace {

template <class F>
BubbleConstants assemble_constants(int n, F integral)
{
    if (n < 3 || n > 5) throw std::invalid_argument("n must be 3, 4 or 5");
    BubbleConstants c;
    c.n = n;
    const double nn = n;
    c.b = integral(n, 0.0, 0.5 * (nn + 2.0));
    c.c4 = c.b;
    c.c1 = integral(n, 0.0, nn);
    const double s = nn + 2.0;
    c.c2 = 0.25 * (nn - 2.0) * (nn - 2.0) * (integral(n, 2.0, s) - 2.0 * integral(n, 1.0, s) + integral(n, 0.0, s));
    c.c3 = (nn - 2.0) * (nn - 2.0) / nn * integral(n, 1.0, s);
    c.c0 = 4.0 * nn * (nn - 1.0) * c.c1;
    c.omega_n = sphere_area(n) / nn;
    c.gamma_n = std::pow(4.0 * nn * (nn - 1.0) * c.omega_n, 2.0 / (2.0 - nn));
    return c;
}

}  // namespace

BubbleConstants bubble_constants_closed(int n) { return assemble_constants(n, radial_integral_closed); }
BubbleConstants bubble_constants(int n) { return assemble_constants(n, radial_integral_quadrature); }

double constants_max_rel_diff(const BubbleConstants& q, const BubbleConstants& c)
{
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
    return std::max({rel(q.b, c.b), rel(q.c1, c.c1), rel(q.c2, c.c2), rel(q.c3, c.c3), rel(q.c4, c.c4),
                     rel(q.c0, c.c0), rel(q.gamma_n, c.gamma_n), rel(q.omega_n, c.omega_n)});
}

void write_constants_csv(std::ostream& os, const std::vector<std::pair<BubbleConstants, BubbleConstants>>& rows)
{
    os << "n,source,b,c1,c2,c3,c4,c0,gamma_n,omega_n,c0_over_c1,max_rel_diff\n";
    os << std::setprecision(17);
    for (const auto& [q, c] : rows) {
        const double diff = constants_max_rel_diff(q, c);
        for (int src = 0; src < 2; ++src) {
            const BubbleConstants& x = src == 0 ? q : c;
            os << x.n << ',' << (src == 0 ? "quadrature" : "closed_form") << ',' << x.b << ',' << x.c1 << ',' << x.c2
               << ',' << x.c3 << ',' << x.c4 << ',' << x.c0 << ',' << x.gamma_n << ',' << x.omega_n << ','
               << x.c0 / x.c1 << ',' << diff << '\n';
        }
    }
}

// ---------------------------------------------------------------- profiles

BubbleParams BubbleParams::with_default_cutoff(const GridSpec& g, const Point& a, double lambda)
{
    BubbleParams p;
    p.a = a;
    p.lambda = lambda;
    p.cutoff = g.side / 8.0;
    return p;
}

void BubbleParams::validate(const GridSpec& g) const
{
    if (!(lambda > 0.0)) throw std::invalid_argument("bubble lambda must be positive");
    if (!(cutoff > 0.0)) throw std::invalid_argument("bubble cutoff must be positive");
    if (lambda * cutoff < 1.0) throw std::invalid_argument("bubble not resolved inside its cutoff (lambda * cutoff < 1)");
    if (2.0 * cutoff > 0.5 * g.side) throw std::invalid_argument("bubble cutoff does not fit on the torus");
}

double cutoff_profile(const BubbleParams& p, double d)
{
    const double s = (d - p.cutoff) / p.cutoff;
    if (p.shape == CutoffShape::Smooth) return bump_profile(s);
    const double t = std::clamp(s, 0.0, 1.0);
    return 1.0 - t * t * (3.0 - 2.0 * t);
}

double cutoff_profile_derivative(const BubbleParams& p, double d)
{
    const double s = (d - p.cutoff) / p.cutoff;
    if (p.shape == CutoffShape::Smooth) return bump_profile_derivative(s) / p.cutoff;
    if (s <= 0.0 || s >= 1.0) return 0.0;
    return -6.0 * s * (1.0 - s) / p.cutoff;
}

namespace {

// rho^2 per lattice point; exact mode replaces d^2 by gamma_n G^(2/(2-n)).
std::vector<double> rho_squared(const GridSpec& g, const BubbleParams& p, BubbleMode mode, std::vector<double>* dist)
{
    std::vector<double> rho2(g.total()), d(g.total());
    for (std::size_t i = 0; i < g.total(); ++i) {
        d[i] = torus_distance(g, lattice_point(g, i), p.a);
        rho2[i] = d[i] * d[i];
    }
    if (mode == BubbleMode::Exact) {
        const double h = g.spacing();
        std::array<std::size_t, kMaxDim> ijk{};
        for (int k = 0; k < g.n; ++k) {
            const double q = p.a[k] / h;
            const double r = std::round(q);
            if (std::abs(q - r) > 1e-9) throw std::invalid_argument("exact mode needs a lattice center");
            ijk[k] = static_cast<std::size_t>((static_cast<long>(r) % static_cast<long>(g.points) + g.points) % g.points);
        }
        const GreensSample G = greens_function(g, lattice_index(g, ijk));
        const double gamma = bubble_constants_closed(g.n).gamma_n;
        for (std::size_t i = 0; i < g.total(); ++i) {
            if (d[i] >= 2.0 * p.cutoff) continue;
            if (!(G.values[i] > 0.0)) throw NumericalError("Green positivity violated in cutoff region");
            rho2[i] = gamma * std::pow(G.values[i], 2.0 / (2.0 - g.n));
        }
    }
    if (dist) *dist = std::move(d);
    return rho2;
}

}  // namespace

ScalarField bubble_field(const GridSpec& g, const BubbleParams& p, BubbleMode mode)
{
    p.validate(g);
    std::vector<double> d;
    const auto rho2 = rho_squared(g, p, mode, &d);
    const double e = 0.5 * (g.n - 2);
    ScalarField phi(g);
    for (std::size_t i = 0; i < g.total(); ++i) {
        const double eta = cutoff_profile(p, d[i]);
        if (eta > 0.0) phi[i] = eta * power(p.lambda / (1.0 + p.lambda * p.lambda * rho2[i]), e);
    }
    return phi;
}

BubbleFields bubble_fields(const GridSpec& g, const BubbleParams& p, BubbleMode mode)
{
    p.validate(g);
    std::vector<double> d;
    const auto rho2 = rho_squared(g, p, mode, &d);
    const double e = 0.5 * (g.n - 2);
    const double lam = p.lambda;
    BubbleFields bf;
    bf.phi = ScalarField(g);
    bf.phi2 = ScalarField(g);
    bf.phi3.assign(g.n, ScalarField(g));
    for (std::size_t i = 0; i < g.total(); ++i) {
        const double eta = cutoff_profile(p, d[i]);
        if (eta <= 0.0) continue;
        const double q = 1.0 + lam * lam * rho2[i];
        const double theta = power(lam / q, e);
        bf.phi[i] = eta * theta;
        bf.phi2[i] = eta * e * theta * (lam * lam * rho2[i] - 1.0) / q;
        if (mode == BubbleMode::Fast && d[i] > 0.0) {
            const double dtheta = -2.0 * e * theta * lam * lam * d[i] / q;
            const double radial = cutoff_profile_derivative(p, d[i]) * theta + eta * dtheta;
            const Point delta = torus_delta(g, lattice_point(g, i), p.a);
            for (int k = 0; k < g.n; ++k) bf.phi3[k][i] = -radial * delta[k] / d[i] / lam;
        }
    }
    if (mode == BubbleMode::Exact)
        for (int k = 0; k < g.n; ++k) {
            bf.phi3[k] = partial_derivative(bf.phi, k);
            for (double& v : bf.phi3[k].values) v = -v / lam;
        }
    return bf;
}

double bubble_inner_residual(const GridSpec& g, const BubbleParams& p, BubbleMode mode)
{
    const ScalarField phi = bubble_field(g, p, mode);
    const ScalarField Lphi = apply_L(phi);
    const CriticalExponents ce(g.n);
    const double coef = 4.0 * g.n * (g.n - 1.0);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < g.total(); ++i) {
        if (torus_distance(g, lattice_point(g, i), p.a) >= p.cutoff) continue;
        const double rhs = coef * power(phi[i], ce.p);
        num += (Lphi[i] - rhs) * (Lphi[i] - rhs);
        den += rhs * rhs;
    }
    return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

double epsilon_ij(const GridSpec& g, const BubbleParams& pi, const BubbleParams& pj, BubbleMode mode)
{
    const double d = torus_distance(g, pi.a, pj.a);
    const double eb = std::max(pi.cutoff, pj.cutoff);
    if (d >= 6.0 * eb) return 0.0;
    const double eta = d < 4.0 * eb ? 1.0 : bump_profile((d - 4.0 * eb) / (2.0 * eb));
    double rho2 = d * d;
    if (mode == BubbleMode::Exact) {
        BubbleParams probe = pi;
        probe.cutoff = std::max(probe.cutoff, 0.5 * d + g.spacing());
        const auto r2 = rho_squared(g, probe, mode, nullptr);
        std::array<std::size_t, kMaxDim> ijk{};
        for (int k = 0; k < g.n; ++k)
            ijk[k] = static_cast<std::size_t>(
                (static_cast<long>(std::round(pj.a[k] / g.spacing())) % static_cast<long>(g.points) + g.points) % g.points);
        rho2 = r2[lattice_index(g, ijk)];
    }
    const double li = pi.lambda, lj = pj.lambda;
    return eta * std::pow(lj / li + li / lj + li * lj * rho2, 0.5 * (2.0 - g.n));
}

InteractionMatrix interaction_matrix(const GridSpec& g, const std::vector<BubbleParams>& params, BubbleMode mode)
{
    InteractionMatrix m;
    m.params = params;
    const std::size_t q = params.size();
    m.eps.assign(q, std::vector<double>(q, 0.0));
    for (std::size_t i = 0; i < q; ++i)
        for (std::size_t j = i + 1; j < q; ++j) m.eps[i][j] = m.eps[j][i] = epsilon_ij(g, params[i], params[j], mode);
    return m;
}

InteractionReport interaction_integrals(const GridSpec& g, const BubbleParams& pi, const BubbleParams& pj)
{
    for (const auto* p : {&pi, &pj})
        if (p->lambda * g.spacing() >= 0.5) throw std::invalid_argument("bubble not resolved on grid (lambda * spacing >= 0.5)");
    const CriticalExponents ce(g.n);
    const BubbleConstants c = bubble_constants_closed(g.n);
    const BubbleFields fi = bubble_fields(g, pi);
    const ScalarField phj = bubble_field(g, pj);
    InteractionReport r;
    r.epsilon = epsilon_ij(g, pi, pj);
    double self = 0.0, s2 = 0.0, s3 = 0.0, cross = 0.0, orth = 0.0;
    for (std::size_t i = 0; i < g.total(); ++i) {
        const double ph = fi.phi[i];
        if (ph <= 0.0) continue;
        const double w = power(ph, ce.conf);
        const double pp = w * ph;
        self += pp * ph;
        s2 += w * fi.phi2[i] * fi.phi2[i];
        s3 += w * fi.phi3[0][i] * fi.phi3[0][i];
        cross += pp * phj[i];
        orth += pp * fi.phi2[i];
    }
    const double dv = g.cell_volume();
    r.self_c1 = self * dv;
    r.self_ratio = r.self_c1 / c.c1;
    r.self_c2 = s2 * dv;
    r.self_c2_ratio = r.self_c2 / c.c2;
    r.self_c3 = s3 * dv;
    r.self_c3_ratio = r.self_c3 / c.c3;
    r.cross = cross * dv;
    r.cross_ratio = r.epsilon > 0.0 ? r.cross / (c.b * r.epsilon) : std::numeric_limits<double>::quiet_NaN();
    r.orthogonality = orth * dv;
    return r;
}

double blowup_threshold(int n, double J_u0, double max_K)
{
    if (!(max_K > 0.0)) throw std::domain_error("Y empty, threshold undefined");
    if (!(J_u0 > 0.0)) throw std::invalid_argument("J(u0) must be positive");
    const double nn = n;
    const BubbleConstants c = bubble_constants_closed(n);
    const double E = -std::pow(J_u0, -(nn - 2.0) / 2.0);
    return std::pow(E + c.c0 * std::pow(4.0 * nn * (nn - 1.0) / max_K, (nn - 2.0) / 2.0), 2.0 / nn);
}

SeedReport seed_test_function(const ScalarField& u0, double beta, const ScalarField& K, const BubbleParams& bubble)
{
    require_same_grid(u0, K);
    const GridSpec& g = u0.grid;
    const double nn = g.n;
    // K at the lattice point nearest to the bubble center.
    std::array<std::size_t, kMaxDim> ijk{};
    for (int k = 0; k < g.n; ++k)
        ijk[k] = static_cast<std::size_t>(
            (static_cast<long>(std::round(bubble.a[k] / g.spacing())) % static_cast<long>(g.points) + g.points) % g.points);
    const double Ka = K[lattice_index(g, ijk)];
    if (!(Ka > 0.0)) throw std::domain_error("K(a) must be positive for the bubble seed");
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    SeedReport s;
    s.alpha0 = std::pow(1.0 / beta, (nn - 2.0) / 4.0);
    s.alpha1 = std::pow(4.0 * nn * (nn - 1.0) / Ka, (nn - 2.0) / 4.0);
    const ScalarField phi = bubble_field(g, bubble);
    s.u = normalize_critical(linear_combination(s.alpha0, u0, s.alpha1, phi));
    const EnergyReport e = i_energy(s.u, K);
    s.r = e.r;
    s.k = e.k;
    s.in_Y = e.in_Y;
    s.I = e.I.value_or(std::numeric_limits<double>::quiet_NaN());
    return s;
}

// ---------------------------------------------------------------- decomposition

std::string Decomposition::text() const
{
    std::ostringstream os;
    os << std::setprecision(10);
    os << "alpha=" << alpha << "\n";
    for (std::size_t i = 0; i < bubbles.size(); ++i) {
        os << "bubble" << i << ".alpha=" << alphas[i] << "\n";
        os << "bubble" << i << ".lambda=" << bubbles[i].lambda << "\n";
        os << "bubble" << i << ".a=";
        for (int k = 0; k < v.grid.n; ++k) os << (k ? "," : "") << bubbles[i].a[k];
        os << "\n";
        os << "bubble" << i << ".resid_lambda=" << resid_lambda[i] << "\n";
        os << "bubble" << i << ".resid_a=" << resid_a[i] << "\n";
    }
    os << "v_norm_rel_h1=" << v_norm << "\n"
       << "gram_condition=" << gram_condition << "\n"
       << "orth_u_inf=" << orth_u_inf << "\n"
       << "orth_phi=" << orth_phi << "\n"
       << "max_eps_ij=" << max_eps_ij << "\n"
       << "objective=" << objective << "\n"
       << "sweeps=" << sweeps << "\n";
    for (const auto& n : notes) os << "note=" << n << "\n";
    return os.str();
}

namespace {

struct LPairing {
    const GridSpec& g;
    std::vector<double> symbol;
    explicit LPairing(const GridSpec& grid) : g(grid), symbol(SpectralOperator(grid, OperatorKind::ConformalL).symbol()) {}
    double operator()(const Spectrum& a, const Spectrum& b) const { return spectral_form(g, a, b, symbol); }
};

// Weighted least-squares residual of u against span{u_inf, phi_i}.
double weighted_objective(const ScalarField& u, const ScalarField& weight, const std::vector<const ScalarField*>& basis)
{
    const std::size_t m = basis.size();
    Eigen::MatrixXd A(m, m);
    Eigen::VectorXd rhs(m);
    for (std::size_t a = 0; a < m; ++a) {
        rhs[a] = 0.0;
        for (std::size_t b = a; b < m; ++b) A(a, b) = 0.0;
    }
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double w = weight[i];
        if (w == 0.0) continue;
        for (std::size_t a = 0; a < m; ++a) {
            const double ba = (*basis[a])[i];
            if (ba == 0.0) continue;
            rhs[a] += w * ba * u[i];
            for (std::size_t b = a; b < m; ++b) A(a, b) += w * ba * (*basis[b])[i];
        }
    }
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < a; ++b) A(a, b) = A(b, a);
    const Eigen::VectorXd c = A.ldlt().solve(rhs);
    double obj = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        double r = u[i];
        for (std::size_t a = 0; a < m; ++a) r -= c[a] * (*basis[a])[i];
        obj += weight[i] * r * r;
    }
    return obj * u.grid.cell_volume();
}

template <class F>
double golden_section(F f, double lo, double hi, double tol)
{
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    while (hi - lo > tol) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = f(x2);
        }
    }
    return f1 < f2 ? x1 : x2;
}

double wrap(double x, double side)
{
    x = std::fmod(x, side);
    return x < 0.0 ? x + side : x;
}

}  // namespace

Decomposition decompose_fixed(const ScalarField& u, const ScalarField& u_inf, const std::vector<BubbleParams>& bubbles,
                              const DecomposeOptions& opt)
{
    require_same_grid(u, u_inf);
    const GridSpec& g = u.grid;
    const std::size_t q = bubbles.size();
    const LPairing L(g);
    std::vector<BubbleFields> fields;
    fields.reserve(q);
    for (const auto& b : bubbles) fields.push_back(bubble_fields(g, b));

    std::vector<Spectrum> spec;
    spec.push_back(forward(u_inf));
    for (const auto& f : fields) spec.push_back(forward(f.phi));
    const Spectrum su = forward(u);
    const std::size_t m = q + 1;
    Eigen::MatrixXd G(m, m);
    Eigen::VectorXd rhs(m);
    for (std::size_t a = 0; a < m; ++a) {
        rhs[a] = L(su, spec[a]);
        for (std::size_t b = a; b < m; ++b) G(a, b) = G(b, a) = L(spec[a], spec[b]);
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(G);
    const auto& sv = svd.singularValues();
    Decomposition d;
    d.gram_condition = sv[m - 1] > 0.0 ? sv[0] / sv[m - 1] : std::numeric_limits<double>::infinity();
    if (!(d.gram_condition < opt.max_condition)) throw NumericalError("bubbles nearly parallel");
    const Eigen::VectorXd c = G.fullPivLu().solve(rhs);
    d.alpha = c[0];
    d.alphas.assign(c.data() + 1, c.data() + m);
    d.bubbles = bubbles;
    d.v = u;
    for (std::size_t i = 0; i < u.size(); ++i) {
        double r = u[i] - c[0] * u_inf[i];
        for (std::size_t b = 0; b < q; ++b) r -= c[b + 1] * fields[b].phi[i];
        d.v[i] = r;
    }
    const Spectrum sv_hat = forward(d.v);
    d.orth_u_inf = std::abs(L(sv_hat, spec[0]));
    for (std::size_t b = 0; b < q; ++b) {
        d.orth_phi = std::max(d.orth_phi, std::abs(L(sv_hat, spec[b + 1])));
        d.resid_lambda.push_back(std::abs(L(sv_hat, forward(fields[b].phi2))));
        double ra = 0.0;
        for (int k = 0; k < g.n; ++k) ra = std::max(ra, std::abs(L(sv_hat, forward(fields[b].phi3[k]))));
        d.resid_a.push_back(ra);
    }
    const double un = std::sqrt(h1_norm_sq(u));
    d.v_norm = un > 0.0 ? std::sqrt(h1_norm_sq(d.v)) / un : 0.0;
    for (std::size_t i = 0; i < q; ++i)
        for (std::size_t j = i + 1; j < q; ++j) d.max_eps_ij = std::max(d.max_eps_ij, epsilon_ij(g, bubbles[i], bubbles[j]));
    if (d.max_eps_ij > opt.eps2) d.notes.push_back("interaction above eps2");
    return d;
}

Decomposition decompose(const ScalarField& u, const ScalarField& u_inf, const std::vector<BubbleParams>& guess,
                        const DecomposeOptions& opt)
{
    require_same_grid(u, u_inf);
    const GridSpec& g = u.grid;
    const CriticalExponents ce(g.n);
    std::vector<BubbleParams> cur = guess;
    int sweeps = 0;
    double obj = 0.0;
    if (opt.refine && !cur.empty()) {
        ScalarField weight(g);
        for (std::size_t i = 0; i < u.size(); ++i) weight[i] = power(std::abs(u[i]), ce.conf);
        std::vector<ScalarField> phis;
        for (const auto& b : cur) phis.push_back(bubble_field(g, b));
        auto objective = [&]() {
            std::vector<const ScalarField*> basis{&u_inf};
            for (const auto& p : phis) basis.push_back(&p);
            return weighted_objective(u, weight, basis);
        };
        obj = objective();
        for (sweeps = 1; sweeps <= opt.max_sweeps; ++sweeps) {
            const double before = obj;
            for (std::size_t b = 0; b < cur.size(); ++b) {
                const double l0 = guess[b].lambda;
                auto f_lambda = [&](double loglam) {
                    BubbleParams t = cur[b];
                    t.lambda = std::exp(loglam);
                    phis[b] = bubble_field(g, t);
                    return objective();
                };
                const double best = golden_section(f_lambda, std::log(l0) - 0.5, std::log(l0) + 0.5, opt.golden_tol);
                cur[b].lambda = std::exp(best);
                phis[b] = bubble_field(g, cur[b]);
            }
            for (std::size_t b = 0; b < cur.size(); ++b) {
                const double span = 2.0 / guess[b].lambda;
                for (int k = 0; k < g.n; ++k) {
                    const double a0 = guess[b].a[k];
                    auto f_a = [&](double x) {
                        BubbleParams t = cur[b];
                        t.a[k] = wrap(x, g.side);
                        phis[b] = bubble_field(g, t);
                        return objective();
                    };
                    const double best = golden_section(f_a, a0 - span, a0 + span, opt.golden_tol * span);
                    cur[b].a[k] = wrap(best, g.side);
                    phis[b] = bubble_field(g, cur[b]);
                }
            }
            obj = objective();
            if (before - obj <= 1e-12 * std::max(before, 1e-300)) break;
        }
        sweeps = std::min(sweeps, opt.max_sweeps);
    }
    Decomposition d = decompose_fixed(u, u_inf, cur, opt);
    d.sweeps = sweeps;
    d.objective = obj;
    if (opt.refine) {
        d.notes.push_back("trust region radii eps1, eps2 are engineering defaults");
        if (d.v_norm > opt.eps1) throw DecompositionError("refinement left the trust region eps1", d);
    }
    return d;
}

}  // namespace confcurv
