#pragma once

#include <cmath>
#include <numbers>

#include "confcurv/flows.hpp"
#include "confcurv/functionals.hpp"
#include "confcurv/sampling.hpp"

namespace confcurv::testing {

inline double max_abs_diff(const ScalarField& a, const ScalarField& b)
{
    double e = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
    return e;
}

inline double energy_of(const ScalarField& u, const ScalarField& K, Which which)
{
    const EnergyReport r = which == Which::J ? j_energy(u, K) : i_energy(u, K);
    const auto& e = which == Which::J ? r.J : r.I;
    return e ? *e : std::numeric_limits<double>::quiet_NaN();
}

struct GradientCheck {
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
};

// Central difference along the tangent projection of phi, compared with <grad, phi_t>.
inline GradientCheck gradient_check(const ScalarField& u, const ScalarField& phi, const ScalarField& K, Which which,
                                    double h)
{
    const ScalarField t = tangent_projection(u, phi);
    const double ep = energy_of(normalize_critical(linear_combination(1.0, u, h, t)), K, which);
    const double em = energy_of(normalize_critical(linear_combination(1.0, u, -h, t)), K, which);
    GradientCheck c;
    c.numeric = (ep - em) / (2.0 * h);
    c.analytic = dot(which == Which::J ? grad_j(u, K) : grad_i(u, K), t);
    c.rel_error = std::abs(c.numeric - c.analytic) / std::max(std::abs(c.analytic), 1e-300);
    return c;
}

inline ScalarField sine_field(const GridSpec& g, double base, double amp, int axis = 0, int mode = 1)
{
    ScalarField f(g);
    for (std::size_t i = 0; i < f.size(); ++i)
        f[i] = base + amp * std::sin(2.0 * std::numbers::pi * mode * lattice_point(g, i)[axis] / g.side);
    return f;
}

// Normalized 1 + amp f with the amplitude halved until r < 0 (in X for any K < 0).
inline ScalarField random_x_field(const GridSpec& g, std::mt19937_64& rng, double amp)
{
    const ScalarField f = random_smooth_field(g, rng, 3, 2.0);
    for (;; amp *= 0.5) {
        ScalarField u(f);
        for (auto& v : u.values) v = 1.0 + amp * v;
        u = normalize_critical(u);
        // Keep away from the boundary r = 0 of the cone.
        if (r_of(u) < -0.5) return u;
    }
}

}  // namespace confcurv::testing
