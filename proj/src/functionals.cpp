#include "confcurv/functionals.hpp"

#include <cmath>
#include <limits>

#include "confcurv/operators.hpp"

namespace confcurv {

double r_of(const GridSpec& g, const Spectrum& u_hat)
{
    const CriticalExponents ce(g.n);
    const auto& lay = layout_for(g);
    const auto& xi2 = lay.xi2();
    const auto& w = lay.weight();
    double s = 0.0;
    for (std::size_t m = 0; m < u_hat.size(); ++m) s += w[m] * (ce.c_n * xi2[m] - 1.0) * std::norm(u_hat[m]);
    return s * g.cell_volume() / static_cast<double>(g.total());
}

double r_of(const ScalarField& u)
{
    require_finite(u);
    return r_of(u.grid, forward(u));
}

double k_of(const ScalarField& u, const ScalarField& K)
{
    require_same_grid(u, K);
    const CriticalExponents ce(u.grid.n);
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        double v = u[i];
        if (v < 0.0) {
            if (v < -1e-13) throw NumericalError("fractional power of negative base");
            v = 0.0;
        }
        s += K[i] * power(v, ce.two_star);
    }
    return s * u.grid.cell_volume();
}

double j_value(int n, double r, double k)
{
    if (!(r < 0.0 && k < 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return -k / std::pow(-r, static_cast<double>(n) / (n - 2));
}

double i_value(int n, double r, double k)
{
    if (!(r > 0.0 && k > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return r / std::pow(k, static_cast<double>(n - 2) / n);
}

namespace {

EnergyReport base_report(const ScalarField& u, const ScalarField& K)
{
    EnergyReport rep;
    rep.r = r_of(u);
    rep.k = k_of(u, K);
    rep.critical_norm = critical_norm(u);
    const bool positive = u.min() > 0.0;
    const bool normed = std::abs(rep.critical_norm - 1.0) < kNormTolerance;
    rep.in_X = positive && normed && rep.r < 0.0 && rep.k < 0.0;
    rep.in_Y = positive && normed && rep.r > 0.0 && rep.k > 0.0;
    return rep;
}

}  // namespace

EnergyReport j_energy(const ScalarField& u, const ScalarField& K)
{
    EnergyReport rep = base_report(u, K);
    if (rep.in_X) rep.J = j_value(u.grid.n, rep.r, rep.k);
    if (rep.in_Y) rep.I = i_value(u.grid.n, rep.r, rep.k);
    return rep;
}

EnergyReport i_energy(const ScalarField& u, const ScalarField& K) { return j_energy(u, K); }

ScalarField scalar_curvature(const ScalarField& u, double floor)
{
    const CriticalExponents ce(u.grid.n);
    const double umin = u.min();
    if (!(umin >= floor))
        throw NumericalError("positivity floor violated (min u = " + std::to_string(umin) + "): R_g undefined");
    ScalarField R = apply_L(u);
    for (std::size_t i = 0; i < u.size(); ++i) R[i] /= power(u[i], ce.p);
    return R;
}

ScalarField grad_j(const ScalarField& u, const ScalarField& K)
{
    const EnergyReport rep = j_energy(u, K);
    if (!rep.in_X) throw std::domain_error("gradient defined on X only");
    const CriticalExponents ce(u.grid.n);
    const ScalarField Lu = apply_L(u);
    const double pre = ce.two_star / std::pow(-rep.r, static_cast<double>(ce.n) / (ce.n - 2));
    const double ratio = rep.k / rep.r;
    ScalarField g(u.grid);
    for (std::size_t i = 0; i < u.size(); ++i) g[i] = pre * (ratio * Lu[i] - K[i] * power(u[i], ce.p));
    return g;
}

ScalarField grad_i(const ScalarField& u, const ScalarField& K)
{
    const EnergyReport rep = i_energy(u, K);
    if (!rep.in_Y) throw std::domain_error("gradient defined on Y only");
    const CriticalExponents ce(u.grid.n);
    const ScalarField Lu = apply_L(u);
    const double pre = 2.0 / std::pow(rep.k, static_cast<double>(ce.n - 2) / ce.n);
    const double ratio = rep.r / rep.k;
    ScalarField g(u.grid);
    for (std::size_t i = 0; i < u.size(); ++i) g[i] = pre * (Lu[i] - ratio * K[i] * power(u[i], ce.p));
    return g;
}

ScalarField defect_j(const ScalarField& u, const ScalarField& K)
{
    ScalarField R = scalar_curvature(u);
    const double ratio = k_of(u, K) / r_of(u);
    for (std::size_t i = 0; i < u.size(); ++i) R[i] = ratio * R[i] - K[i];
    return R;
}

ScalarField defect_i(const ScalarField& u, const ScalarField& K)
{
    ScalarField R = scalar_curvature(u);
    const double ratio = r_of(u) / k_of(u, K);
    for (std::size_t i = 0; i < u.size(); ++i) R[i] = R[i] - ratio * K[i];
    return R;
}

double defect_moment(const ScalarField& defect, const ScalarField& u, double q)
{
    const CriticalExponents ce(u.grid.n);
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += power(std::abs(defect[i]), q) * power(u[i], ce.two_star);
    return s * u.grid.cell_volume();
}

double delta_j_sq(const ScalarField& u, const ScalarField& K)
{
    const EnergyReport rep = j_energy(u, K);
    if (!rep.in_X) throw std::domain_error("delta_j_sq defined on X only");
    return defect_moment(defect_j(u, K), u, 2.0);
}

double delta_i_sq(const ScalarField& u, const ScalarField& K)
{
    const EnergyReport rep = i_energy(u, K);
    if (!rep.in_Y) throw std::domain_error("delta_i_sq defined on Y only");
    return defect_moment(defect_i(u, K), u, 2.0);
}

double el_residual(const ScalarField& u, const ScalarField& K, double beta)
{
    return residual_norms(u, K, beta).max_norm;
}

ResidualNorms residual_norms(const ScalarField& u, const ScalarField& K, double beta)
{
    if (beta == 0.0) throw std::invalid_argument("beta must be nonzero");
    const CriticalExponents ce(u.grid.n);
    ScalarField res = apply_L(u);
    for (std::size_t i = 0; i < u.size(); ++i) res[i] -= K[i] * power(std::max(u[i], 0.0), ce.p) / beta;
    ResidualNorms out;
    for (double v : res.values) out.max_norm = std::max(out.max_norm, std::abs(v));
    out.l2 = std::sqrt(dot(res, res));
    const ScalarField inv = SpectralOperator(u.grid, OperatorKind::ScreenedL).solve(res);
    out.h1_dual = std::sqrt(std::max(0.0, dot(inv, res)));
    return out;
}

double fit_beta(const ScalarField& u, const ScalarField& K)
{
    const CriticalExponents ce(u.grid.n);
    const ScalarField Lu = apply_L(u);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double f = K[i] * power(u[i], ce.p);
        num += f * f;
        den += Lu[i] * f;
    }
    if (den == 0.0) throw NumericalError("beta fit degenerate");
    return num / den;
}

ScaledSolution scaled_solution(const ScalarField& u_crit, const ScalarField& K)
{
    const CriticalExponents ce(u_crit.grid.n);
    ScaledSolution s;
    s.r = r_of(u_crit);
    s.k = k_of(u_crit, K);
    if (!(s.r * s.k > 0.0)) throw std::domain_error("scaled_solution needs r*k > 0");
    s.beta = fit_beta(u_crit, K);
    s.scale = std::pow(s.r / s.k, (ce.n - 2) / 4.0);
    s.w = u_crit;
    for (double& v : s.w.values) v *= s.scale;
    s.residual = el_residual(s.w, K, 1.0);
    s.r = r_of(s.w);
    s.k = k_of(s.w, K);
    return s;
}

ScalarField tangent_projection(const ScalarField& u, const ScalarField& phi)
{
    const CriticalExponents ce(u.grid.n);
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double up = power(u[i], ce.p);
        a += up * phi[i];
        b += up * u[i];
    }
    ScalarField out(phi);
    const double c = a / b;
    for (std::size_t i = 0; i < u.size(); ++i) out[i] -= c * u[i];
    return out;
}

namespace {

using Vec = std::vector<double>;

double vdot(const Vec& a, const Vec& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Right-preconditioned restarted GMRES; returns the final relative residual.
template <class Op, class Prec>
double gmres(const Op& A, const Prec& P, const Vec& b, Vec& x, int restart, int max_restarts, double rel_tol)
{
    const std::size_t n = b.size();
    const double bnorm = std::sqrt(vdot(b, b));
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return 0.0;
    }
    double rel = 1.0;
    for (int cycle = 0; cycle < max_restarts; ++cycle) {
        Vec Ax = A(x);
        Vec r(n);
        for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - Ax[i];
        const double beta = std::sqrt(vdot(r, r));
        rel = beta / bnorm;
        if (rel < rel_tol) return rel;
        std::vector<Vec> V;
        V.reserve(restart + 1);
        for (double& v : r) v /= beta;
        V.push_back(std::move(r));
        std::vector<std::vector<double>> H(restart + 1, std::vector<double>(restart, 0.0));
        std::vector<double> cs(restart), sn(restart), g(restart + 1, 0.0);
        g[0] = beta;
        int k = 0;
        for (; k < restart; ++k) {
            Vec w = A(P(V[k]));
            for (int j = 0; j <= k; ++j) {
                H[j][k] = vdot(w, V[j]);
                for (std::size_t i = 0; i < n; ++i) w[i] -= H[j][k] * V[j][i];
            }
            H[k + 1][k] = std::sqrt(vdot(w, w));
            for (int j = 0; j < k; ++j) {
                const double t = cs[j] * H[j][k] + sn[j] * H[j + 1][k];
                H[j + 1][k] = -sn[j] * H[j][k] + cs[j] * H[j + 1][k];
                H[j][k] = t;
            }
            const double den = std::hypot(H[k][k], H[k + 1][k]);
            cs[k] = den == 0.0 ? 1.0 : H[k][k] / den;
            sn[k] = den == 0.0 ? 0.0 : H[k + 1][k] / den;
            H[k][k] = den;
            H[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];
            const double hk1 = std::sqrt(vdot(w, w));
            if (hk1 > 0.0) {
                for (double& v : w) v /= hk1;
            }
            V.push_back(std::move(w));
            rel = std::abs(g[k + 1]) / bnorm;
            if (rel < rel_tol) {
                ++k;
                break;
            }
        }
        std::vector<double> y(k, 0.0);
        for (int i = k - 1; i >= 0; --i) {
            double s = g[i];
            for (int j = i + 1; j < k; ++j) s -= H[i][j] * y[j];
            y[i] = s / H[i][i];
        }
        Vec z(n, 0.0);
        for (int j = 0; j < k; ++j)
            for (std::size_t i = 0; i < n; ++i) z[i] += y[j] * V[j][i];
        const Vec Pz = P(z);
        for (std::size_t i = 0; i < n; ++i) x[i] += Pz[i];
        if (rel < rel_tol) return rel;
    }
    return rel;
}

}  // namespace

PolishResult newton_polish(const ScalarField& w0, const ScalarField& K, const PolishOptions& opt)
{
    const GridSpec& g = w0.grid;
    const CriticalExponents ce(g.n);
    const auto& xi2 = layout_for(g).xi2();
    PolishResult out;
    out.w = w0;

    auto residual = [&](const ScalarField& w) {
        ScalarField F = apply_L(w);
        for (std::size_t i = 0; i < w.size(); ++i) F[i] -= K[i] * power(w[i], ce.p);
        return F;
    };
    auto maxabs = [](const ScalarField& f) {
        double m = 0.0;
        for (double v : f.values) m = std::max(m, std::abs(v));
        return m;
    };

    ScalarField F = residual(out.w);
    out.residual = maxabs(F);
    for (int it = 0; it < opt.max_newton && out.residual >= opt.tol; ++it) {
        ScalarField D(g);
        double mean_abs = 0.0;
        for (std::size_t i = 0; i < D.size(); ++i) {
            D[i] = ce.p * K[i] * power(out.w[i], ce.p - 1.0);
            mean_abs += std::abs(D[i]);
        }
        mean_abs /= static_cast<double>(D.size());
        const double m = std::max(mean_abs, 1.0);
        auto A = [&](const Vec& v) {
            ScalarField f(g, v);
            ScalarField Lf = apply_L(f);
            for (std::size_t i = 0; i < Lf.size(); ++i) Lf[i] -= D[i] * v[i];
            return Lf.values;
        };
        auto P = [&](const Vec& v) {
            Spectrum s = forward(ScalarField(g, v));
            for (std::size_t k = 0; k < s.size(); ++k) s[k] /= ce.c_n * xi2[k] + m;
            return inverse(g, s).values;
        };
        Vec b(F.values);
        for (double& v : b) v = -v;
        Vec dx(b.size(), 0.0);
        gmres(A, P, b, dx, opt.gmres_restart, opt.gmres_max_restarts, opt.gmres_rel_tol);

        double step = 1.0;
        const double l2_old = std::sqrt(dot(F, F));
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls) {
            ScalarField trial(out.w);
            for (std::size_t i = 0; i < trial.size(); ++i) trial[i] += step * dx[i];
            if (trial.min() > 0.0) {
                ScalarField Ft = residual(trial);
                if (std::sqrt(dot(Ft, Ft)) < l2_old * (1.0 - 1e-4 * step) || ls == 29) {
                    out.w = std::move(trial);
                    F = std::move(Ft);
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        ++out.newton_steps;
        out.residual = maxabs(F);
        if (!accepted) break;
    }
    out.converged = out.residual < opt.tol;
    return out;
}

}  // namespace confcurv
