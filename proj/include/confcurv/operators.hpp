#pragma once

#include <cstdint>
#include <vector>

#include "confcurv/grid.hpp"
#include "confcurv/spectral.hpp"

namespace confcurv {

enum class OperatorKind { Laplacian, ConformalL, ScreenedL };

class NotInvertibleError : public NumericalError {
public:
    NotInvertibleError(const std::string& what, std::size_t mode) : NumericalError(what), mode_(mode) {}
    std::size_t mode() const { return mode_; }

private:
    std::size_t mode_;
};

class SpectralOperator {
public:
    SpectralOperator(const GridSpec& g, OperatorKind kind);

    const GridSpec& grid() const { return grid_; }
    OperatorKind kind() const { return kind_; }
    const std::vector<double>& symbol() const { return symbol_; }
    double symbol_at(double xi2) const;

    ScalarField apply(const ScalarField& f) const;
    Spectrum apply_spectrum(const Spectrum& s) const;
    ScalarField solve(const ScalarField& rhs) const;

    static constexpr double invertibility_tol = 1e-12;

private:
    GridSpec grid_;
    OperatorKind kind_;
    std::vector<double> symbol_;
};

// L = -c_n Laplacian - 1.
ScalarField apply_L(const ScalarField& u);
// Screened operator -(n-1) Laplacian + 1.
ScalarField apply_screened(const ScalarField& u);

struct GreensSample {
    std::size_t pole = 0;
    ScalarField values;
};

GreensSample greens_function(const GridSpec& g, std::size_t pole);

struct DirichletMask {
    GridSpec grid;
    std::vector<std::uint8_t> inside;

    DirichletMask() = default;
    DirichletMask(const GridSpec& g, std::vector<std::uint8_t> in);
    std::size_t count() const;
    bool contains(std::size_t i) const { return inside[i] != 0; }
};

// Mask of lattice points strictly inside an axis-aligned cube.
DirichletMask cube_mask(const GridSpec& g, const Point& center, double side);
DirichletMask ball_mask(const GridSpec& g, const Point& center, double radius);
// Lattice dilation by a Euclidean ball of the given number of cells.
DirichletMask dilate(const DirichletMask& m, int cells);
// Points of {f >= level}.
DirichletMask superlevel_mask(const ScalarField& f, double level);

struct EigenResult {
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> vector;  // values on the mask, mask order
};

struct EigenOptions {
    double rel_tol = 1e-8;
    int max_iterations = 500;
    double cg_tol = 1e-12;
};

// Smallest Dirichlet eigenvalue of L on the mask, second-order finite differences.
EigenResult dirichlet_nu1(const DirichletMask& mask, const EigenOptions& opt = {});

struct SobolevEstimate {
    double value = 0.0;
    std::size_t samples = 0;
    std::vector<double> running_max;  // after each sample
};

// Empirical upper bound for |f|_{2n/(n-2)} / |f|_{H^1} over a seeded sample family.
SobolevEstimate sobolev_constant_estimate(const GridSpec& g, std::size_t samples, std::uint64_t seed);

}  // namespace confcurv
