#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "confcurv/operators.hpp"
#include "confcurv/sampling.hpp"

using namespace confcurv;

namespace {

double max_abs_diff(const ScalarField& a, const ScalarField& b)
{
    double e = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
    return e;
}

ScalarField random_field(const GridSpec& g, std::uint64_t seed)
{
    auto rng = stream_rng(seed, 0);
    return random_smooth_field(g, rng, 4, 1.0);
}

}  // namespace

TEST_CASE("conformal operator on constants")
{
    for (int n = 3; n <= 5; ++n) {
        GridSpec g(n, n == 3 ? 32 : 8);
        ScalarField Lu = apply_L(ScalarField(g, 1.0));
        for (double v : Lu.values) CHECK(v == -1.0);
        ScalarField Su = apply_screened(ScalarField(g, 1.0));
        for (double v : Su.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("symbols")
{
    GridSpec g(3, 16, 1.4);
    SpectralOperator L(g, OperatorKind::ConformalL), S(g, OperatorKind::ScreenedL);
    const auto& xi2 = layout_for(g).xi2();
    for (std::size_t m = 0; m < xi2.size(); m += 17) {
        CHECK(L.symbol()[m] == doctest::Approx(8.0 * xi2[m] - 1.0));
        CHECK(S.symbol()[m] == doctest::Approx(2.0 * xi2[m] + 1.0));
        CHECK(S.symbol()[m] >= 1.0);
    }
    CHECK(L.symbol()[0] == -1.0);
}

TEST_CASE("Laplacian eigenfunction")
{
    GridSpec g(3, 16);
    ScalarField s(g);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::sin(2.0 * std::numbers::pi * lattice_point(g, i)[0]);
    ScalarField lap = SpectralOperator(g, OperatorKind::Laplacian).apply(s);
    ScalarField expect = linear_combination(-4.0 * std::numbers::pi * std::numbers::pi, s, 0.0, s);
    CHECK(max_abs_diff(lap, expect) < 1e-10);
}

TEST_CASE("solve and apply round trip")
{
    GridSpec g(3, 24, 1.1);
    for (auto kind : {OperatorKind::ConformalL, OperatorKind::ScreenedL}) {
        SpectralOperator op(g, kind);
        ScalarField f = random_field(g, 2);
        CHECK(max_abs_diff(op.solve(op.apply(f)), f) < 1e-10);
        CHECK(max_abs_diff(op.apply(op.solve(f)), f) < 1e-10);
    }
    SpectralOperator S(GridSpec(3, 16), OperatorKind::ScreenedL);
    ScalarField w = S.solve(ScalarField(GridSpec(3, 16), 1.0));
    for (double v : w.values) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("grid mismatch is rejected")
{
    SpectralOperator op(GridSpec(3, 16), OperatorKind::ConformalL);
    CHECK_THROWS(op.apply(ScalarField(GridSpec(3, 8), 1.0)));
}

TEST_CASE("engineered singular symbol")
{
    // c_n (2 pi / side)^2 = 1 for the first nonzero mode.
    const double side = 2.0 * std::numbers::pi * std::sqrt(8.0);
    GridSpec g(3, 8, side);
    SpectralOperator L(g, OperatorKind::ConformalL);
    try {
        L.solve(ScalarField(g, 1.0));
        FAIL("expected NotInvertibleError");
    } catch (const NotInvertibleError& e) {
        CHECK(std::string(e.what()).find("operator not invertible on this grid") != std::string::npos);
        CHECK(e.mode() != 0);
    }
}

TEST_CASE("self-adjointness and screened positivity")
{
    GridSpec g(3, 16, 0.9);
    ScalarField f = random_field(g, 4), h = random_field(g, 5);
    const double a = dot(apply_L(f), h), b = dot(f, apply_L(h));
    CHECK(std::abs(a - b) <= 1e-11 * std::max(std::abs(a), 1.0));
    CHECK(dot(apply_screened(f), f) >= dot(f, f));
}

TEST_CASE("Green's function")
{
    // Coarser unit-torus lattices do not resolve the positive core.
    GridSpec g(3, 64);
    const std::size_t a = lattice_index(g, {3, 5, 7}), b = lattice_index(g, {10, 2, 12});
    GreensSample Ga = greens_function(g, a), Gb = greens_function(g, b);
    CHECK(std::abs(Ga.values[b] - Gb.values[a]) < 1e-10);
    CHECK(Ga.values.min() < 0.0);
    CHECK(Ga.values.max() > 0.0);
    CHECK(Ga.values.argmax() == a);

    ScalarField LG = apply_L(Ga.values);
    double off = 0.0;
    for (std::size_t i = 0; i < LG.size(); ++i)
        if (i != a) off = std::max(off, std::abs(LG[i]));
    // Relative to the delta weight 1 / cell_volume.
    CHECK(off * g.cell_volume() < 1e-12);
    CHECK(LG[a] * g.cell_volume() == doctest::Approx(1.0));

    // Translation invariance: G(a, a + s) = G(0, s).
    GreensSample G0 = greens_function(g, 0);
    const std::size_t s = lattice_index(g, {2, 1, 4});
    const std::size_t as = lattice_index(g, {5, 6, 11});
    CHECK(std::abs(Ga.values[as] - G0.values[s]) < 1e-12);
    CHECK_THROWS(greens_function(g, g.total()));
}

TEST_CASE("Dirichlet eigenvalue of a cube")
{
    GridSpec g(3, 32);
    Point c{0.5, 0.5, 0.5};
    EigenResult r = dirichlet_nu1(cube_mask(g, c, 0.5));
    CHECK(r.converged);
    const double exact = 96.0 * std::numbers::pi * std::numbers::pi - 1.0;
    CHECK(std::abs(r.value - exact) / exact < 0.02);

    // Halving the cube roughly quadruples the Laplacian part.
    EigenResult half = dirichlet_nu1(cube_mask(g, c, 0.25));
    CHECK((half.value + 1.0) / (r.value + 1.0) == doctest::Approx(4.0).epsilon(0.05));
    // Monotone under inclusion.
    CHECK(half.value >= r.value);
}

TEST_CASE("Dirichlet eigenvalue of a disconnected mask")
{
    GridSpec g(3, 32);
    const DirichletMask big = cube_mask(g, {0.3, 0.3, 0.3}, 0.3);
    const DirichletMask small = cube_mask(g, {0.75, 0.75, 0.75}, 0.2);
    std::vector<std::uint8_t> in(g.total(), 0);
    for (std::size_t i = 0; i < in.size(); ++i) in[i] = big.inside[i] || small.inside[i];
    const EigenResult both = dirichlet_nu1(DirichletMask(g, in));
    const EigenResult alone = dirichlet_nu1(big);
    CHECK(both.value == doctest::Approx(alone.value).epsilon(1e-8));
    // The ground state lives on the larger component.
    double on_small = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < in.size(); ++i)
        if (in[i]) {
            if (small.inside[i]) on_small = std::max(on_small, std::abs(both.vector[k]));
            ++k;
        }
    CHECK(on_small == 0.0);
}

TEST_CASE("punctured torus has negative first eigenvalue")
{
    // A large torus keeps the lattice capacity of the removed point small against the volume.
    GridSpec g(3, 16, 4.0);
    std::vector<std::uint8_t> in(g.total(), 1);
    in[lattice_index(g, {8, 8, 8})] = 0;
    EigenResult r = dirichlet_nu1(DirichletMask(g, in));
    CHECK(r.value < 0.0);
    CHECK(r.value > -1.0);
}

TEST_CASE("mask dilation and level sets")
{
    GridSpec g(3, 16);
    Point c{0.5, 0.5, 0.5};
    DirichletMask b = ball_mask(g, c, 0.2);
    DirichletMask d = dilate(b, 1);
    CHECK(d.count() > b.count());
    for (std::size_t i = 0; i < g.total(); ++i)
        if (b.contains(i)) CHECK(d.contains(i));
    ScalarField dist = distance_field(g, c);
    DirichletMask lvl = superlevel_mask(linear_combination(-1.0, dist, 0.0, dist), -0.2);
    CHECK(lvl.count() >= b.count());
}

TEST_CASE("empirical Sobolev constant")
{
    GridSpec g(3, 16);
    SobolevEstimate a = sobolev_constant_estimate(g, 40, 1);
    SobolevEstimate b = sobolev_constant_estimate(g, 40, 1);
    CHECK(a.value == b.value);
    CHECK(a.value >= 1.0);
    for (std::size_t i = 1; i < a.running_max.size(); ++i) CHECK(a.running_max[i] >= a.running_max[i - 1]);
    SobolevEstimate more = sobolev_constant_estimate(g, 80, 1);
    CHECK(more.value >= a.value);
}
