#include "confcurv/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace confcurv {

namespace {

struct PlanPair {
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;
};

std::mutex& plan_mutex()
{
    static std::mutex m;
    return m;
}

const PlanPair& plans_for(const GridSpec& g)
{
    static std::map<std::pair<int, std::size_t>, PlanPair> cache;
    std::lock_guard<std::mutex> lock(plan_mutex());
    auto key = std::make_pair(g.n, g.points);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    int dims[kMaxDim];
    for (int d = 0; d < g.n; ++d) dims[d] = static_cast<int>(g.points);
    const std::size_t nreal = g.total();
    const std::size_t ncplx = nreal / g.points * (g.points / 2 + 1);
    double* rbuf = fftw_alloc_real(nreal);
    fftw_complex* cbuf = fftw_alloc_complex(ncplx);
    PlanPair pp;
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    pp.r2c = fftw_plan_dft_r2c(g.n, dims, rbuf, cbuf, flags);
    pp.c2r = fftw_plan_dft_c2r(g.n, dims, cbuf, rbuf, flags);
    fftw_free(rbuf);
    fftw_free(cbuf);
    if (!pp.r2c || !pp.c2r) throw NumericalError("FFT planning failed");
    return cache.emplace(key, pp).first->second;
}

}  // namespace

SpectralLayout::SpectralLayout(const GridSpec& g) : grid_(g), half_(g.points / 2 + 1)
{
    const std::size_t N = g.points;
    const std::size_t count = g.total() / N * half_;
    xi2_.resize(count);
    weight_.resize(count);
    const double k0 = 2.0 * std::numbers::pi / g.side;
    for (std::size_t m = 0; m < count; ++m) {
        std::size_t rest = m;
        const std::size_t last = rest % half_;
        rest /= half_;
        double s = 0.0;
        {
            const double k = static_cast<double>(last) * k0;
            s += k * k;
        }
        for (int d = g.n - 2; d >= 0; --d) {
            const std::size_t i = rest % N;
            rest /= N;
            const long kk = (i <= N / 2) ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(N);
            const double k = static_cast<double>(kk) * k0;
            s += k * k;
        }
        xi2_[m] = s;
        xi2_max_ = std::max(xi2_max_, s);
        const bool self_conjugate = (last == 0) || (N % 2 == 0 && last == N / 2);
        weight_[m] = self_conjugate ? 1.0 : 2.0;
    }
}

std::array<long, kMaxDim> SpectralLayout::wavevector(std::size_t mode) const
{
    std::array<long, kMaxDim> k{};
    const std::size_t N = grid_.points;
    std::size_t rest = mode;
    k[grid_.n - 1] = static_cast<long>(rest % half_);
    rest /= half_;
    for (int d = grid_.n - 2; d >= 0; --d) {
        const std::size_t i = rest % N;
        rest /= N;
        k[d] = (i <= N / 2) ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(N);
    }
    return k;
}

double SpectralLayout::xi(std::size_t mode, int axis) const
{
    const auto k = wavevector(mode);
    const long N = static_cast<long>(grid_.points);
    if (N % 2 == 0 && std::labs(k[axis]) == N / 2) return 0.0;
    return 2.0 * std::numbers::pi * static_cast<double>(k[axis]) / grid_.side;
}

const SpectralLayout& layout_for(const GridSpec& g)
{
    static std::map<std::tuple<int, std::size_t, double>, std::unique_ptr<SpectralLayout>> cache;
    static std::mutex m;
    std::lock_guard<std::mutex> lock(m);
    auto key = std::make_tuple(g.n, g.points, g.side);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, std::make_unique<SpectralLayout>(g)).first;
    return *it->second;
}

Spectrum forward(const ScalarField& f)
{
    const GridSpec& g = f.grid;
    const PlanPair& pp = plans_for(g);
    Spectrum out(g.total() / g.points * (g.points / 2 + 1));
    std::vector<double> in(f.values);
    fftw_execute_dft_r2c(pp.r2c, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

ScalarField inverse(const GridSpec& g, const Spectrum& s)
{
    const PlanPair& pp = plans_for(g);
    Spectrum tmp(s);
    ScalarField out(g);
    fftw_execute_dft_c2r(pp.c2r, reinterpret_cast<fftw_complex*>(tmp.data()), out.values.data());
    const double inv = 1.0 / static_cast<double>(g.total());
    for (double& v : out.values) v *= inv;
    return out;
}

double spectral_dot(const GridSpec& g, const Spectrum& a, const Spectrum& b)
{
    const auto& w = layout_for(g).weight();
    double s = 0.0;
    for (std::size_t m = 0; m < a.size(); ++m) s += w[m] * (a[m].real() * b[m].real() + a[m].imag() * b[m].imag());
    return s * g.cell_volume() / static_cast<double>(g.total());
}

double spectral_form(const GridSpec& g, const Spectrum& a, const Spectrum& b,
                     const std::vector<double>& multiplier)
{
    const auto& w = layout_for(g).weight();
    double s = 0.0;
    for (std::size_t m = 0; m < a.size(); ++m)
        s += w[m] * multiplier[m] * (a[m].real() * b[m].real() + a[m].imag() * b[m].imag());
    return s * g.cell_volume() / static_cast<double>(g.total());
}

ScalarField laplacian(const ScalarField& f)
{
    Spectrum s = forward(f);
    const auto& xi2 = layout_for(f.grid).xi2();
    for (std::size_t m = 0; m < s.size(); ++m) s[m] *= -xi2[m];
    return inverse(f.grid, s);
}

ScalarField partial_derivative(const ScalarField& f, int axis)
{
    if (axis < 0 || axis >= f.grid.n) throw std::invalid_argument("axis out of range");
    Spectrum s = forward(f);
    const auto& lay = layout_for(f.grid);
    for (std::size_t m = 0; m < s.size(); ++m) s[m] *= std::complex<double>(0.0, lay.xi(m, axis));
    return inverse(f.grid, s);
}

double dirichlet_energy(const ScalarField& f)
{
    const Spectrum s = forward(f);
    return spectral_form(f.grid, s, s, layout_for(f.grid).xi2());
}

double h1_norm_sq(const ScalarField& f)
{
    const Spectrum s = forward(f);
    const auto& lay = layout_for(f.grid);
    std::vector<double> m(lay.xi2());
    for (double& v : m) v += 1.0;
    return spectral_form(f.grid, s, s, m);
}

}  // namespace confcurv
