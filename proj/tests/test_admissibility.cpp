#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "confcurv/admissibility.hpp"
#include "confcurv/functionals.hpp"
#include "support.hpp"

using namespace confcurv;
using namespace confcurv::testing;

namespace {

const Point kCenter{0.5, 0.5, 0.5};

SamplerConfig small_sampler()
{
    SamplerConfig s;
    s.random_fields = 30;
    s.bubbles = 20;
    s.hard = 10;
    return s;
}

ScalarField punctured_K(const GridSpec& g, double outside, double inside, double ri, double ro)
{
    const Point c{0.5 * g.side, 0.5 * g.side, 0.5 * g.side};
    ScalarField K(g);
    for (std::size_t i = 0; i < K.size(); ++i) {
        const double d = torus_distance(g, lattice_point(g, i), c);
        K[i] = outside + (inside - outside) * bump_profile((d - ri) / (ro - ri));
    }
    return K;
}

}  // namespace

TEST_CASE("bump profile")
{
    CHECK(bump_profile(-0.5) == 1.0);
    CHECK(bump_profile(0.0) == 1.0);
    CHECK(bump_profile(1.0) == 0.0);
    CHECK(bump_profile(2.0) == 0.0);
    CHECK(bump_profile(0.5) == doctest::Approx(std::exp(1.0 - 1.0 / 0.75)));
    const double h = 1e-6, s = 0.4;
    CHECK(bump_profile_derivative(s) == doctest::Approx((bump_profile(s + h) - bump_profile(s - h)) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("certificate for K = -1")
{
    GridSpec g(3, 16);
    ScalarField K(g, -1.0);
    SamplerConfig s = small_sampler();
    ABCertificate c = certify_ab(K, s, 1e-3);
    CHECK(c.A > 0.0);
    CHECK(c.B > 0.0);
    CHECK(c.worst_slack >= 1e-3);
    CHECK(c.sample_count == certificate_sample_count(s));
    CHECK(replay_certificate(K, s, c) >= c.eps0);

    ABCertificate again = certify_ab(K, s, 1e-3);
    CHECK(again.A == c.A);
    CHECK(again.B == c.B);
    CHECK(again.worst_slack == c.worst_slack);

    std::stringstream ss;
    write_certificate(ss, c);
    ABCertificate back = read_certificate(ss);
    CHECK(back.A == c.A);
    CHECK(back.B == c.B);
    CHECK(back.worst_slack == c.worst_slack);
    CHECK(back.seed == c.seed);
}

TEST_CASE("certificate samples are normalized and reproducible")
{
    GridSpec g(3, 16);
    ScalarField K = sine_field(g, -0.5, 0.8);
    SamplerConfig s = small_sampler();
    for (std::size_t i : {std::size_t{0}, std::size_t{5}, std::size_t{40}, std::size_t{55}}) {
        int fam = -1;
        ScalarField u = certificate_sample_field(K, s, i, &fam);
        ScalarField v = certificate_sample_field(K, s, i);
        CHECK(u.values == v.values);
        CHECK(std::abs(critical_norm(u) - 1.0) < 1e-12);
        CHECK(u.min() > 0.0);
        CHECK(fam >= 0);
    }
    auto samples = draw_certificate_samples(K, s);
    CHECK(samples.size() == certificate_sample_count(s));
    SamplerConfig onx = s;
    onx.scope = CertificateScope::OnX;
    for (const auto& x : draw_certificate_samples(K, onx)) {
        CHECK(x.r < 0.0);
        CHECK(x.k < 0.0);
    }
}

TEST_CASE("certificate for K = +1 depends on the sample scope")
{
    GridSpec g(3, 16);
    const ScalarField K(g, 1.0);
    // Over all fields the inequality only sees |k|, so a pair exists.
    const ABCertificate c = certify_ab(K, small_sampler(), 1e-3);
    CHECK(c.worst_slack >= 1e-3);
    CHECK(c.B - c.A >= 1.0);
    SamplerConfig on_x = small_sampler();
    on_x.scope = CertificateScope::OnX;
    CHECK_THROWS_AS(certify_ab(K, on_x, 1e-3), NoCertificateError);
}

TEST_CASE("slack formula")
{
    CertificateSample s;
    s.r = -0.5;
    s.k = -8.0;
    s.h1 = 1.0;
    CHECK(ab_slack(3, 1.0, 2.0, s) == doctest::Approx(-0.5 + 2.0 * 2.0 - 1.0));
}

TEST_CASE("Kazdan-Warner report for constants")
{
    GridSpec g(3, 16);
    KWReport a = kazdan_warner(ScalarField(g, -1.0));
    CHECK(a.min_w_bar == doctest::Approx(1.0));
    CHECK(a.integral_K == doctest::Approx(-1.0));
    CHECK(a.w_positive);
    CHECK(a.integral_negative);
    CHECK(a.omega_K_empty);
    CHECK(a.residual < 1e-10);

    KWReport b = kazdan_warner(ScalarField(g, 1.0));
    CHECK(b.min_w_bar == doctest::Approx(-1.0));
    CHECK_FALSE(b.w_positive);
    CHECK(b.omega_K_full);
    CHECK_FALSE(b.nu1_positive);
    CHECK(b.text().find("condition_w_bar_positive=fail") != std::string::npos);
}

TEST_CASE("positive w_bar implies negative integral on random K")
{
    GridSpec g(3, 16);
    int positive = 0;
    for (int t = 0; t < 100; ++t) {
        auto rng = stream_rng(77, t);
        ScalarField K = random_smooth_field(g, rng, 3, 1.0);
        const double shift = -0.6 + 0.9 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        for (auto& v : K.values) v += shift;
        ScalarField rhs = linear_combination(-1.0, K, 0.0, K);
        ScalarField w = SpectralOperator(g, OperatorKind::ScreenedL).solve(rhs);
        if (w.min() > 0.0) {
            ++positive;
            CHECK(integrate(K) < 0.0);
        }
    }
    CHECK(positive > 0);
}

TEST_CASE("counterexample family values")
{
    GridSpec g(3, 32);
    const double eps = 0.6, lam = 30.0, p = 2.2;
    ScalarField K = counterexample_K(g, eps, lam, p, kCenter, 0.2);
    const std::size_t c = lattice_index(g, {16, 16, 16});
    CHECK(K[c] == doctest::Approx(-eps + std::pow(lam, p)));
    CHECK(K[0] == -eps);
    CHECK_THROWS(counterexample_K(g, eps, lam, 1.4, kCenter));
    CHECK_THROWS(counterexample_K(g, eps, lam, 3.0, kCenter));
    CHECK_THROWS(counterexample_K(g, -1.0, lam, p, kCenter));
}

TEST_CASE("counterexample family exhibits positive nu1, negative integral and negative w_bar")
{
    GridSpec g(3, 48);
    KWReport r = kazdan_warner(counterexample_K(g, 0.6, 30.0, 2.2, kCenter, 0.2));
    CHECK(r.integral_K == doctest::Approx(-0.193).epsilon(0.02));
    CHECK(r.min_w_bar == doctest::Approx(-0.172).epsilon(0.02));
    CHECK(r.nu1_omega_K > 0.0);
    CHECK(r.integral_negative);
    CHECK_FALSE(r.w_positive);
    CHECK(r.nu1_positive);
}

TEST_CASE("punctured construction exhibits positive w_bar with negative nu1")
{
    GridSpec g(3, 32, 4.0);
    KWReport r = kazdan_warner(punctured_K(g, 0.01, -20.0, 0.3, 0.55));
    CHECK(r.w_positive);
    CHECK(r.min_w_bar == doctest::Approx(0.0669).epsilon(0.02));
    CHECK(r.integral_negative);
    CHECK(r.nu1_omega_K < 0.0);
    CHECK(r.nu1_omega_K == doctest::Approx(-0.1526).epsilon(0.02));
}

TEST_CASE("smallness check on cubes")
{
    GridSpec g(3, 32);
    ScalarField K(g, -1.0);
    const DirichletMask omega = cube_mask(g, kCenter, 0.2);
    std::vector<double> brackets;
    for (double s : {0.6, 0.5, 0.4}) {
        DomainPair dp = DomainPair::from_masks(omega, cube_mask(g, kCenter, s));
        dp.validate(K);
        RauzyReport r = check_rauzy_smallness(K, dp, 1.0, 1.0);
        CHECK(r.nu1_positive);
        CHECK(r.pass);
        brackets.push_back(r.bracket);
    }
    CHECK(brackets[0] > brackets[1]);
    CHECK(brackets[1] > brackets[2]);

    DomainPair dp = DomainPair::from_masks(omega, cube_mask(g, kCenter, 0.4));
    RauzyReport d = check_rauzy_smallness(K, dp, 1.0);
    CHECK(d.eps_is_default);
    CHECK(d.bracket == doctest::Approx(d.chain_threshold));
    CHECK(d.text().find("pass=1") != std::string::npos);
}

TEST_CASE("smallness check rejects bad domain pairs")
{
    GridSpec g(3, 32);
    ScalarField K = counterexample_K(g, 0.6, 30.0, 2.2, kCenter, 0.2);
    DomainPair tiny = DomainPair::from_masks(cube_mask(g, kCenter, 0.05), cube_mask(g, kCenter, 0.3));
    CHECK_THROWS(tiny.validate(K));
    CHECK_THROWS(check_rauzy_smallness(K, tiny, 1.0));
    DomainPair same = DomainPair::from_masks(cube_mask(g, kCenter, 0.3), cube_mask(g, kCenter, 0.3));
    CHECK_THROWS(same.validate(ScalarField(g, -1.0)));
}

TEST_CASE("large concentrated positive part fails the smallness condition")
{
    GridSpec g(3, 32);
    ScalarField K = counterexample_K(g, 0.6, 30.0, 2.2, kCenter, 0.2);
    DomainPair dp = DomainPair::from_K(K, 2);
    dp.validate(K);
    RauzyReport r = check_rauzy_smallness(K, dp, 1.0);
    CHECK_FALSE(r.condition_i);
    CHECK_FALSE(r.pass);
}

TEST_CASE("more negative K outside omega keeps a passing check")
{
    GridSpec g(3, 32);
    ScalarField K = punctured_K(g, -1.0, 1e-9, 0.05, 0.1);
    DomainPair dp = DomainPair::from_K(K, 2);
    dp.validate(K);
    RauzyReport a = check_rauzy_smallness(K, dp, 1.0, 1.0);
    REQUIRE(a.pass);
    ScalarField K2 = K;
    for (std::size_t i = 0; i < K2.size(); ++i)
        if (!dp.omega.contains(i)) K2[i] -= 3.0;
    RauzyReport b = check_rauzy_smallness(K2, dp, 1.0, 1.0);
    CHECK(b.pass);
    CHECK(b.bracket > a.bracket);

    // A passing check goes with an empirical certificate.
    CHECK_NOTHROW(certify_ab(K, small_sampler(), 1e-3));
}

TEST_CASE("subsolution check")
{
    GridSpec g(3, 16);
    SubsolutionReport a = subsolution_check(ScalarField(g, 1.0), ScalarField(g, -1.0));
    CHECK(a.holds);
    CHECK(std::abs(a.max_violation) < 1e-12);
    SubsolutionReport b = subsolution_check(ScalarField(g, std::pow(2.0, -0.25)), ScalarField(g, -2.0));
    CHECK(b.holds);
    CHECK(std::abs(b.max_violation) < 1e-12);
    CHECK_THROWS(subsolution_check(ScalarField(g, 1.5), ScalarField(g, -1.0)));
}
