#include "confcurv/sampling.hpp"

#include <cmath>

#include "confcurv/spectral.hpp"

namespace confcurv {

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t index)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x5eedu};
    return std::mt19937_64(seq);
}

ScalarField random_smooth_field(const GridSpec& g, std::mt19937_64& rng, int kmax, double decay)
{
    const auto& lay = layout_for(g);
    Spectrum s(lay.size(), {0.0, 0.0});
    std::normal_distribution<double> normal(0.0, 1.0);
    const long N = static_cast<long>(g.points);
    for (std::size_t m = 0; m < s.size(); ++m) {
        const auto k = lay.wavevector(m);
        bool keep = true;
        double k2 = 0.0;
        bool zero = true;
        for (int d = 0; d < g.n; ++d) {
            if (std::labs(k[d]) > kmax || 2 * std::labs(k[d]) >= N) keep = false;
            k2 += static_cast<double>(k[d] * k[d]);
            if (k[d] != 0) zero = false;
        }
        // Draw for every mode so the stream does not depend on kmax.
        const double re = normal(rng);
        const double im = normal(rng);
        if (!keep || zero) continue;
        const double amp = std::pow(1.0 + k2, -0.5 * decay);
        s[m] = {amp * re, k[g.n - 1] == 0 ? 0.0 : amp * im};
    }
    ScalarField f = inverse(g, s);
    double mx = 0.0;
    for (double v : f.values) mx = std::max(mx, std::abs(v));
    if (mx > 0.0)
        for (double& v : f.values) v /= mx;
    return f;
}

Point random_point(const GridSpec& g, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> uni(0.0, g.side);
    Point a{};
    for (int d = 0; d < g.n; ++d) a[d] = uni(rng);
    return a;
}

}  // namespace confcurv
