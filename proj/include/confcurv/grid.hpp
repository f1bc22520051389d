#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace confcurv {

constexpr int kMaxDim = 5;
using Point = std::array<double, kMaxDim>;

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GridSpec {
    int n = 3;
    std::size_t points = 32;
    double side = 1.0;

    GridSpec() = default;
    GridSpec(int dim, std::size_t points_per_axis, double side_length = 1.0);

    double spacing() const { return side / static_cast<double>(points); }
    std::size_t total() const;
    double cell_volume() const;
    double volume() const;

    bool operator==(const GridSpec& o) const
    {
        return n == o.n && points == o.points && side == o.side;
    }
    bool operator!=(const GridSpec& o) const { return !(*this == o); }
};

struct CriticalExponents {
    int n;
    double p;         // (n+2)/(n-2)
    double two_star;  // 2n/(n-2)
    double c_n;       // 4(n-1)/(n-2)
    double conf;      // 4/(n-2)

    explicit CriticalExponents(int dim);
};

// Raises x >= 0 to the given power, exact multiplication for small integers.
double power(double x, double e);

struct ScalarField {
    GridSpec grid;
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(const GridSpec& g, double fill = 0.0);
    ScalarField(const GridSpec& g, std::vector<double> v);

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }

    double min() const;
    double max() const;
    std::size_t argmax() const;  // lowest index among ties
};

// Coordinates of lattice point idx (x = i * spacing, row-major, last axis fastest).
Point lattice_point(const GridSpec& g, std::size_t idx);
std::size_t lattice_index(const GridSpec& g, const std::array<std::size_t, kMaxDim>& ijk);

// Periodic displacement x - a wrapped to [-side/2, side/2).
Point torus_delta(const GridSpec& g, const Point& x, const Point& a);
double torus_distance(const GridSpec& g, const Point& x, const Point& a);
ScalarField distance_field(const GridSpec& g, const Point& a);

void require_same_grid(const ScalarField& a, const ScalarField& b);
void require_finite(const ScalarField& f);

double integrate(const ScalarField& f);
double lp_norm(const ScalarField& f, double p);
double critical_norm(const ScalarField& u);
ScalarField normalize_critical(const ScalarField& u);

// Pointwise helpers returning fresh fields.
ScalarField pow_field(const ScalarField& u, double e);
ScalarField product(const ScalarField& a, const ScalarField& b);
ScalarField linear_combination(double a, const ScalarField& x, double b, const ScalarField& y);
double dot(const ScalarField& a, const ScalarField& b);  // quadrature of a*b

}  // namespace confcurv
