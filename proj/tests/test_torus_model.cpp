#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "confcurv/grid.hpp"
#include "confcurv/sampling.hpp"
#include "confcurv/spectral.hpp"

using namespace confcurv;

namespace {

ScalarField random_positive(const GridSpec& g, std::uint64_t seed)
{
    auto rng = stream_rng(seed, 0);
    ScalarField f = random_smooth_field(g, rng, 3, 2.0);
    for (auto& v : f.values) v = 1.5 + v;
    return f;
}

ScalarField sine_x(const GridSpec& g)
{
    ScalarField f(g);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::sin(2.0 * std::numbers::pi * lattice_point(g, i)[0] / g.side);
    return f;
}

}  // namespace

TEST_CASE("grid spec geometry")
{
    GridSpec g(3, 16);
    CHECK(g.total() == 4096);
    CHECK(g.spacing() == doctest::Approx(1.0 / 16));
    CHECK(g.volume() == doctest::Approx(1.0));
    GridSpec h(4, 8, 2.0);
    CHECK(h.total() == 4096);
    CHECK(h.volume() == doctest::Approx(16.0));
    CHECK_THROWS(GridSpec(2, 16));
    CHECK_THROWS(GridSpec(6, 16));
    CHECK_THROWS(GridSpec(3, 4));
    CHECK_THROWS(GridSpec(3, 16, 0.0));
}

TEST_CASE("critical exponents")
{
    CriticalExponents e3(3);
    CHECK(e3.c_n == 8.0);
    CHECK(e3.two_star == 6.0);
    CHECK(e3.p == 5.0);
    CriticalExponents e4(4);
    CHECK(e4.p == 3.0);
    CHECK(e4.two_star == 4.0);
    CriticalExponents e5(5);
    CHECK(e5.p == doctest::Approx(7.0 / 3.0));
    CHECK(e5.c_n == doctest::Approx(16.0 / 3.0));
    for (int n = 3; n <= 5; ++n) {
        CriticalExponents e(n);
        CHECK(e.p + 1.0 == doctest::Approx(e.two_star));
        CHECK(e.conf == doctest::Approx(e.p - 1.0));
    }
}

TEST_CASE("lattice indexing and periodic distance")
{
    GridSpec g(3, 8);
    for (std::size_t i : {std::size_t{0}, std::size_t{5}, std::size_t{77}, g.total() - 1}) {
        Point x = lattice_point(g, i);
        std::array<std::size_t, kMaxDim> ijk{};
        for (int d = 0; d < 3; ++d) ijk[d] = static_cast<std::size_t>(std::lround(x[d] / g.spacing()));
        CHECK(lattice_index(g, ijk) == i);
    }
    Point a{0.05, 0.5, 0.5}, b{0.95, 0.5, 0.5};
    CHECK(torus_distance(g, a, b) == doctest::Approx(0.1));
    Point dx = torus_delta(g, a, b);
    CHECK(dx[0] == doctest::Approx(0.1));
}

TEST_CASE("integrate")
{
    GridSpec g(3, 16);
    CHECK(integrate(ScalarField(g, 1.0)) == doctest::Approx(1.0));
    CHECK(integrate(ScalarField(g, 0.0)) == 0.0);
    CHECK(std::abs(integrate(sine_x(g))) < 1e-14);
    ScalarField bad(g, 1.0);
    bad[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH(integrate(bad), "non-finite field");
}

TEST_CASE("single Fourier modes integrate to zero")
{
    GridSpec g(3, 16, 1.7);
    for (int k = 1; k <= 7; ++k) {
        ScalarField c(g), s(g);
        for (std::size_t i = 0; i < c.size(); ++i) {
            const Point x = lattice_point(g, i);
            const double ph = 2.0 * std::numbers::pi * (k * x[0] + 2 * x[1] - x[2]) / g.side;
            c[i] = std::cos(ph);
            s[i] = std::sin(ph);
        }
        CHECK(std::abs(integrate(c)) < 1e-13);
        CHECK(std::abs(integrate(s)) < 1e-13);
    }
}

TEST_CASE("lp norms")
{
    GridSpec g(3, 16);
    CHECK(lp_norm(ScalarField(g, 2.0), 2.0) == doctest::Approx(2.0));
    CHECK(lp_norm(ScalarField(g, 1.0), 6.0) == doctest::Approx(1.0));
    CHECK_THROWS(lp_norm(ScalarField(g, 1.0), 0.5));
    ScalarField f = random_positive(g, 3);
    ScalarField f3 = linear_combination(3.0, f, 0.0, f);
    CHECK(lp_norm(f3, 4.0) == doctest::Approx(3.0 * lp_norm(f, 4.0)).epsilon(1e-13));
}

TEST_CASE("Holder bound between L2 and the critical norm")
{
    for (int n = 3; n <= 5; ++n) {
        GridSpec g(n, n == 3 ? 16 : 8, 1.3);
        auto rng = stream_rng(11, n);
        for (int t = 0; t < 5; ++t) {
            ScalarField f = random_smooth_field(g, rng, 2, 1.0);
            const double lhs = lp_norm(f, 2.0);
            const double rhs = std::pow(g.volume(), 1.0 / n) * critical_norm(f);
            CHECK(lhs <= rhs * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("critical normalization")
{
    GridSpec g(3, 16);
    ScalarField three(g, 3.0);
    ScalarField one = normalize_critical(three);
    for (double v : one.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_WITH(normalize_critical(ScalarField(g, 0.0)), "cannot normalize zero field");

    ScalarField u = random_positive(g, 5);
    ScalarField nu = normalize_critical(u);
    CHECK(std::abs(critical_norm(nu) - 1.0) < 1e-13);
    ScalarField again = normalize_critical(nu);
    ScalarField scaled = normalize_critical(linear_combination(7.5, u, 0.0, u));
    double d1 = 0.0, d2 = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        d1 = std::max(d1, std::abs(again[i] - nu[i]));
        d2 = std::max(d2, std::abs(scaled[i] - nu[i]));
    }
    CHECK(d1 < 1e-14);
    CHECK(d2 < 1e-13);
}

TEST_CASE("spectral transforms")
{
    GridSpec g(3, 16, 1.3);
    ScalarField u = random_positive(g, 9);
    ScalarField back = inverse(g, forward(u));
    double err = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) err = std::max(err, std::abs(back[i] - u[i]));
    CHECK(err < 1e-13);

    ScalarField v = random_positive(g, 10);
    CHECK(spectral_dot(g, forward(u), forward(v)) == doctest::Approx(dot(u, v)).epsilon(1e-12));

    GridSpec g1(3, 16);
    ScalarField s = sine_x(g1);
    ScalarField lap = laplacian(s);
    double lerr = 0.0;
    const double w2 = 4.0 * std::numbers::pi * std::numbers::pi;
    for (std::size_t i = 0; i < s.size(); ++i) lerr = std::max(lerr, std::abs(lap[i] + w2 * s[i]));
    CHECK(lerr < 1e-10);
    CHECK(dirichlet_energy(s) == doctest::Approx(0.5 * w2).epsilon(1e-12));
    CHECK(h1_norm_sq(s) == doctest::Approx(0.5 * w2 + 0.5).epsilon(1e-12));
}

TEST_CASE("random fields are deterministic per stream")
{
    GridSpec g(3, 8);
    auto r1 = stream_rng(42, 7), r2 = stream_rng(42, 7), r3 = stream_rng(42, 8);
    ScalarField a = random_smooth_field(g, r1, 2, 1.0);
    ScalarField b = random_smooth_field(g, r2, 2, 1.0);
    ScalarField c = random_smooth_field(g, r3, 2, 1.0);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
    CHECK(std::max(std::abs(a.min()), std::abs(a.max())) == doctest::Approx(1.0));
    CHECK(std::abs(integrate(a)) < 1e-13);
}
