#include "confcurv/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace confcurv {

GridSpec::GridSpec(int dim, std::size_t points_per_axis, double side_length)
    : n(dim), points(points_per_axis), side(side_length)
{
    if (n < 3 || n > 5) throw std::invalid_argument("dimension must be 3, 4 or 5");
    if (points < 8) throw std::invalid_argument("points_per_axis must be at least 8");
    if (!(side > 0.0) || !std::isfinite(side)) throw std::invalid_argument("side_length must be positive");
}

std::size_t GridSpec::total() const
{
    std::size_t t = 1;
    for (int d = 0; d < n; ++d) t *= points;
    return t;
}

double GridSpec::cell_volume() const { return std::pow(spacing(), n); }

double GridSpec::volume() const { return std::pow(side, n); }

CriticalExponents::CriticalExponents(int dim) : n(dim)
{
    if (n < 3) throw std::invalid_argument("dimension must be at least 3");
    const double nn = n;
    p = (nn + 2.0) / (nn - 2.0);
    two_star = 2.0 * nn / (nn - 2.0);
    c_n = 4.0 * (nn - 1.0) / (nn - 2.0);
    conf = 4.0 / (nn - 2.0);
}

double power(double x, double e)
{
    if (e == 1.0) return x;
    if (e == 2.0) return x * x;
    if (e == 3.0) return x * x * x;
    if (e == 4.0) { const double x2 = x * x; return x2 * x2; }
    if (e == 5.0) { const double x2 = x * x; return x2 * x2 * x; }
    if (e == 6.0) { const double x2 = x * x; return x2 * x2 * x2; }
    if (e == 0.5) return std::sqrt(x);
    return std::pow(x, e);
}

ScalarField::ScalarField(const GridSpec& g, double fill) : grid(g), values(g.total(), fill) {}

ScalarField::ScalarField(const GridSpec& g, std::vector<double> v) : grid(g), values(std::move(v))
{
    if (values.size() != grid.total()) throw std::invalid_argument("field size does not match grid");
}

double ScalarField::min() const { return *std::min_element(values.begin(), values.end()); }

double ScalarField::max() const { return *std::max_element(values.begin(), values.end()); }

std::size_t ScalarField::argmax() const
{
    return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

Point lattice_point(const GridSpec& g, std::size_t idx)
{
    Point x{};
    const double h = g.spacing();
    for (int d = g.n - 1; d >= 0; --d) {
        x[d] = static_cast<double>(idx % g.points) * h;
        idx /= g.points;
    }
    return x;
}

std::size_t lattice_index(const GridSpec& g, const std::array<std::size_t, kMaxDim>& ijk)
{
    std::size_t idx = 0;
    for (int d = 0; d < g.n; ++d) idx = idx * g.points + (ijk[d] % g.points);
    return idx;
}

Point torus_delta(const GridSpec& g, const Point& x, const Point& a)
{
    Point dx{};
    const double L = g.side;
    for (int d = 0; d < g.n; ++d) {
        double t = std::fmod(x[d] - a[d], L);
        if (t < -0.5 * L) t += L;
        if (t >= 0.5 * L) t -= L;
        dx[d] = t;
    }
    return dx;
}

double torus_distance(const GridSpec& g, const Point& x, const Point& a)
{
    const Point dx = torus_delta(g, x, a);
    double s = 0.0;
    for (int d = 0; d < g.n; ++d) s += dx[d] * dx[d];
    return std::sqrt(s);
}

ScalarField distance_field(const GridSpec& g, const Point& a)
{
    ScalarField f(g);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = torus_distance(g, lattice_point(g, i), a);
    return f;
}

void require_same_grid(const ScalarField& a, const ScalarField& b)
{
    if (a.grid != b.grid) throw std::invalid_argument("grid mismatch");
}

void require_finite(const ScalarField& f)
{
    for (double v : f.values)
        if (!std::isfinite(v)) throw NumericalError("non-finite field");
}

double integrate(const ScalarField& f)
{
    double s = 0.0;
    for (double v : f.values) {
        if (!std::isfinite(v)) throw NumericalError("non-finite field");
        s += v;
    }
    return s * f.grid.cell_volume();
}

double lp_norm(const ScalarField& f, double p)
{
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm requires p >= 1");
    double s = 0.0;
    for (double v : f.values) {
        if (!std::isfinite(v)) throw NumericalError("non-finite field");
        s += power(std::abs(v), p);
    }
    return std::pow(s * f.grid.cell_volume(), 1.0 / p);
}

double critical_norm(const ScalarField& u)
{
    return lp_norm(u, CriticalExponents(u.grid.n).two_star);
}

ScalarField normalize_critical(const ScalarField& u)
{
    const double nrm = critical_norm(u);
    if (!(nrm > 0.0)) throw NumericalError("cannot normalize zero field");
    ScalarField out(u.grid);
    const double inv = 1.0 / nrm;
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] * inv;
    return out;
}

ScalarField pow_field(const ScalarField& u, double e)
{
    ScalarField out(u.grid);
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = power(u[i], e);
    return out;
}

ScalarField product(const ScalarField& a, const ScalarField& b)
{
    require_same_grid(a, b);
    ScalarField out(a.grid);
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

ScalarField linear_combination(double a, const ScalarField& x, double b, const ScalarField& y)
{
    require_same_grid(x, y);
    ScalarField out(x.grid);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + b * y[i];
    return out;
}

double dot(const ScalarField& a, const ScalarField& b)
{
    require_same_grid(a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s * a.grid.cell_volume();
}

}  // namespace confcurv
