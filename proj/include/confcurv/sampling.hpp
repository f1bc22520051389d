#pragma once

#include <cstdint>
#include <random>

#include "confcurv/grid.hpp"

namespace confcurv {

// Independent stream for (seed, index); same inputs give the same stream.
std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t index);

// Real trigonometric polynomial with Gaussian coefficients on modes |k|_inf <= kmax,
// amplitude (1 + |k|^2)^(-decay/2), scaled to max |f| = 1. Zero mean.
ScalarField random_smooth_field(const GridSpec& g, std::mt19937_64& rng, int kmax, double decay);

// Uniform random point of the torus.
Point random_point(const GridSpec& g, std::mt19937_64& rng);

}  // namespace confcurv
