#pragma once

#include <complex>
#include <memory>
#include <vector>

#include "confcurv/grid.hpp"

namespace confcurv {

using Spectrum = std::vector<std::complex<double>>;

// Half-spectrum geometry of the real transform on a periodic lattice.
class SpectralLayout {
public:
    explicit SpectralLayout(const GridSpec& g);

    const GridSpec& grid() const { return grid_; }
    std::size_t size() const { return xi2_.size(); }
    std::size_t half() const { return half_; }

    // |xi|^2 with xi = 2 pi k / side.
    const std::vector<double>& xi2() const { return xi2_; }
    double xi2_max() const { return xi2_max_; }
    // Multiplicity of each stored mode in the full spectrum.
    const std::vector<double>& weight() const { return weight_; }
    // Angular wavenumber along one axis; zero on Nyquist planes.
    double xi(std::size_t mode, int axis) const;
    std::array<long, kMaxDim> wavevector(std::size_t mode) const;

private:
    GridSpec grid_;
    std::size_t half_;
    std::vector<double> xi2_;
    std::vector<double> weight_;
    double xi2_max_ = 0.0;
};

const SpectralLayout& layout_for(const GridSpec& g);

// Unnormalized forward transform.
Spectrum forward(const ScalarField& f);
// Inverse transform including the 1/N^n factor.
ScalarField inverse(const GridSpec& g, const Spectrum& s);

// Quadrature of f*g from spectra: cell_volume / N^n * sum w Re(f conj g).
double spectral_dot(const GridSpec& g, const Spectrum& a, const Spectrum& b);
// Same with a real multiplier m(mode) between the two.
double spectral_form(const GridSpec& g, const Spectrum& a, const Spectrum& b,
                     const std::vector<double>& multiplier);

ScalarField laplacian(const ScalarField& f);
ScalarField partial_derivative(const ScalarField& f, int axis);
// Integral of |grad f|^2.
double dirichlet_energy(const ScalarField& f);
// Integral of |grad f|^2 + f^2.
double h1_norm_sq(const ScalarField& f);

}  // namespace confcurv
