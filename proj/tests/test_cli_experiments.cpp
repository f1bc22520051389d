#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "confcurv/experiments.hpp"
#include "confcurv/snapshot.hpp"
#include "support.hpp"

using namespace confcurv;
using namespace confcurv::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("confcurv_test_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

ExperimentConfig parse(const std::string& text, const fs::path& base = ".")
{
    std::istringstream is(text);
    return parse_config(is, base);
}

int run_cli(const std::string& args)
{
    const char* cli = std::getenv("CONFCURV_CLI");
    REQUIRE(cli != nullptr);
    const std::string cmd = std::string(cli) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const fs::path kConfigs = fs::path(CONFCURV_SOURCE_DIR) / "configs";

}  // namespace

TEST_CASE("config parsing")
{
    ExperimentConfig c = parse(
        "n = 4   # comment\n"
        "grid = 12\n"
        "side = 2.5\n"
        "K.family = plateau_bump\n"
        "K.center = 0.1, 0.2, 0.3, 0.4\n"
        "flow.scheme = stabilized\n"
        "flow_i.tol_delta_sq = 1e-6\n"
        "cert.scope = on_x\n"
        "bubble.lambdas = 10, 20\n"
        "sweep.eps = 0.5, 0.25\n"
        "K.snapshot = k.cscf\n",
        "/data/run");
    CHECK(c.n == 4);
    CHECK(c.grid == 12);
    CHECK(c.side == 2.5);
    CHECK(c.K.family == "plateau_bump");
    REQUIRE(c.K.center.has_value());
    CHECK((*c.K.center)[3] == 0.4);
    CHECK(c.flow_j.scheme == FlowScheme::Stabilized);
    CHECK(c.flow_i.scheme == FlowScheme::Stabilized);
    CHECK(c.flow_i.tol_delta_sq == 1e-6);
    CHECK(c.flow_j.tol_delta_sq == 1e-10);
    CHECK(c.sampler.scope == CertificateScope::OnX);
    CHECK(c.lambdas == std::vector<double>{10.0, 20.0});
    CHECK(c.eps_sweep.size() == 2);
    CHECK(c.K.snapshot == fs::path("/data/run/k.cscf"));
    CHECK(c.grid_spec().total() == 12 * 12 * 12 * 12);
}

TEST_CASE("config errors")
{
    CHECK_THROWS_AS(parse("bogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse("K.bogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse("flow.bogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse("grid = abc\n"), ConfigError);
    CHECK_THROWS_AS(parse("grid = 12.5\n"), ConfigError);
    CHECK_THROWS_AS(parse("just a line\n"), ConfigError);
    CHECK_THROWS_AS(parse("which = x\n"), ConfigError);
    CHECK_THROWS(parse("n = 2\n"));
    CHECK_THROWS(parse("flow.dt_initial = 5\n"));
    CHECK_THROWS_AS(load_config("/nonexistent/config.cfg"), ConfigError);
}

TEST_CASE("shipped configs parse")
{
    for (const char* name : {"headline.cfg", "counterexample.cfg", "punctured.cfg", "negative_constant.cfg"}) {
        CAPTURE(name);
        CHECK_NOTHROW(load_config(kConfigs / name));
    }
    ExperimentConfig h = load_config(kConfigs / "headline.cfg");
    CHECK(h.grid == 48);
    CHECK(h.K.max == 0.5);
}

TEST_CASE("K families")
{
    GridSpec g(3, 32);
    KSource s;
    s.family = "constant";
    s.value = -2.0;
    ScalarField K = build_K(g, s);
    CHECK(K.min() == -2.0);
    CHECK(K.max() == -2.0);

    s.family = "plateau_bump";
    s.floor = -0.1;
    s.max = 0.5;
    s.radius = 0.3;
    K = build_K(g, s);
    CHECK(K.max() == 0.5);
    CHECK(K.min() == -0.1);
    // Locally constant at the maximum.
    const std::size_t c = lattice_index(g, {16, 16, 16});
    CHECK(K[c] == 0.5);
    CHECK(K[lattice_index(g, {17, 16, 16})] == 0.5);
    // Ties go to the lowest row-major index on the plateau.
    CHECK(K.argmax() == lattice_index(g, {14, 16, 16}));

    s.family = "sine";
    s.value = -1.0;
    s.amplitude = 0.5;
    K = build_K(g, s);
    CHECK(integrate(K) == doctest::Approx(-1.0));

    s.family = "unknown";
    CHECK_THROWS_AS(build_K(g, s), ConfigError);
    s.family = "plateau_bump";
    s.radius = 0.01;
    CHECK_THROWS_AS(build_K(g, s), ConfigError);
}

TEST_CASE("snapshot round trip")
{
    const fs::path dir = scratch("snap");
    GridSpec g(4, 8, 1.5);
    auto rng = stream_rng(3, 0);
    ScalarField f = random_smooth_field(g, rng, 2, 1.0);
    save_snapshot((dir / "f.cscf").string(), f);
    ScalarField back = load_snapshot((dir / "f.cscf").string());
    CHECK(back.grid == g);
    CHECK(back.values == f.values);

    std::stringstream bad("XXXX");
    CHECK_THROWS(read_snapshot(bad));
    std::string bytes = slurp(dir / "f.cscf");
    std::stringstream trunc(bytes.substr(0, bytes.size() - 8));
    CHECK_THROWS(read_snapshot(trunc));
    CHECK_THROWS(load_snapshot((dir / "missing.cscf").string()));
}

TEST_CASE("snapshot K source")
{
    const fs::path dir = scratch("ksnap");
    GridSpec g(3, 16);
    ScalarField K = sine_field(g, -1.0, 0.3);
    save_snapshot((dir / "k.cscf").string(), K);
    ExperimentConfig c = parse("grid = 16\nK.family = snapshot\nK.snapshot = k.cscf\n", dir);
    CHECK(build_K(c.grid_spec(), c.K).values == K.values);
    ExperimentConfig wrong = parse("grid = 32\nK.family = snapshot\nK.snapshot = k.cscf\n", dir);
    CHECK_THROWS_AS(build_K(wrong.grid_spec(), wrong.K), ConfigError);
}

TEST_CASE("log-log slope")
{
    std::vector<double> x{1.0, 2.0, 4.0, 8.0}, y;
    for (double v : x) y.push_back(3.0 * std::pow(v, -0.5));
    CHECK(loglog_slope(x, y) == doctest::Approx(-0.5));
}

TEST_CASE("constants command")
{
    const fs::path dir = scratch("constants");
    std::ostringstream log;
    CHECK(cmd_constants(3, dir, log) == kExitOk);
    const std::string csv = slurp(dir / "constants.csv");
    CHECK(csv.find("3,closed_form,4.18879020478639") != std::string::npos);
    CHECK(csv.find(",24,") != std::string::npos);
    CHECK(cmd_constants(4, dir, log) == kExitOk);
    CHECK(slurp(dir / "constants.csv").find(",48,") != std::string::npos);
    CHECK(cmd_constants(2, dir, log) == kExitUsage);
}

TEST_CASE("necessary command")
{
    std::ostringstream log;
    ExperimentConfig c = parse("grid = 16\nK.family = constant\nK.value = -1\n");
    c.out = scratch("nec_neg");
    CHECK(cmd_necessary(c, log) == kExitOk);

    c.K.value = 1.0;
    c.out = scratch("nec_pos");
    CHECK(cmd_necessary(c, log) == kExitNecessary);
    const std::string rep = slurp(c.out / "report.txt");
    CHECK(rep.find("failed=integral_K_negative") != std::string::npos);
    CHECK(rep.find("failed=w_bar_positive") != std::string::npos);
    CHECK(rep.find("failed=nu1_omega_K_positive") != std::string::npos);
    CHECK(fs::exists(c.out / "w_bar.cscf"));

    ExperimentConfig ce = load_config(kConfigs / "counterexample.cfg");
    ce.out = scratch("nec_ce");
    CHECK(cmd_necessary(ce, log) == kExitNecessary);
    const std::string r2 = slurp(ce.out / "report.txt");
    CHECK(r2.find("failed=w_bar_positive") != std::string::npos);
    CHECK(r2.find("failed=integral_K_negative") == std::string::npos);
    CHECK(r2.find("failed=nu1_omega_K_positive") == std::string::npos);
}

TEST_CASE("flow and minimize commands")
{
    std::ostringstream log;
    ExperimentConfig c = parse("grid = 16\nK.family = constant\nK.value = -1\n");
    c.out = scratch("flow");
    CHECK(cmd_flow(c, log) == kExitOk);
    std::ifstream is(c.out / "trace.csv");
    std::string line;
    std::getline(is, line);
    CHECK(line == "t,r,k,energy,volume,min_u,max_u,delta_sq,lp_defect");
    double prev = std::numeric_limits<double>::infinity();
    int rows = 0;
    while (std::getline(is, line)) {
        std::stringstream ss(line);
        std::string cell;
        for (int i = 0; i < 4; ++i) std::getline(ss, cell, ',');
        const double e = std::stod(cell);
        CHECK(e <= prev + 1e-10 * (1.0 + std::abs(prev)));
        prev = e;
        ++rows;
    }
    CHECK(rows > 1);

    c.out = scratch("minimize");
    CHECK(cmd_minimize(c, log) == kExitOk);
    CHECK(fs::exists(c.out / "report.txt"));

    c.which = Which::I;
    c.out = scratch("minimize_i");
    CHECK(cmd_minimize(c, log) == kExitUsage);
}

TEST_CASE("certify command is deterministic")
{
    std::ostringstream log;
    ExperimentConfig c = load_config(kConfigs / "negative_constant.cfg");
    c.out = scratch("cert_a");
    CHECK(cmd_certify(c, log) == kExitOk);
    const std::string a = slurp(c.out / "certificate.txt");
    c.out = scratch("cert_b");
    CHECK(cmd_certify(c, log) == kExitOk);
    CHECK(slurp(c.out / "certificate.txt") == a);

    c.K.value = 1.0;
    c.out = scratch("cert_pos");
    CHECK(cmd_certify(c, log) == kExitOk);
    c.sampler.scope = CertificateScope::OnX;
    c.out = scratch("cert_pos_x");
    CHECK(cmd_certify(c, log) == kExitNoCertificate);
}

TEST_CASE("decompose command")
{
    std::ostringstream log;
    ExperimentConfig c = parse("grid = 64\nbubble.lambdas = 40\n");
    c.out = scratch("decompose");
    CHECK(cmd_decompose(c, log) == kExitOk);
    const std::string rep = slurp(c.out / "report.txt");
    const auto pos = rep.find("v_norm_rel_h1=");
    REQUIRE(pos != std::string::npos);
    CHECK(std::stod(rep.substr(pos + 14)) < 1e-3);
    CHECK(fs::exists(c.out / "v.cscf"));
}

TEST_CASE("two-solutions requires a sign change")
{
    std::ostringstream log;
    ExperimentConfig c = load_config(kConfigs / "negative_constant.cfg");
    c.out = scratch("two_neg");
    CHECK(cmd_two_solutions(c, log) == kExitUsage);
    CHECK(log.str().find("Y is empty") != std::string::npos);

    ExperimentConfig p = parse("grid = 16\nK.family = constant\nK.value = 1\n");
    p.out = scratch("two_pos");
    CHECK(cmd_two_solutions(p, log) == kExitUsage);
    CHECK(log.str().find("X is empty") != std::string::npos);
}

TEST_CASE("command line binary")
{
    const fs::path dir = scratch("cli");
    CHECK(run_cli("constants --n 3 --out " + dir.string()) == kExitOk);
    CHECK(fs::exists(dir / "constants.csv"));
    CHECK(run_cli("constants --n 2") == kExitUsage);
    CHECK(run_cli("") == kExitUsage);
    CHECK(run_cli("frobnicate") == kExitUsage);
    CHECK(run_cli("flow --which x") == kExitUsage);
    CHECK(run_cli("necessary --config /nonexistent.cfg") == kExitUsage);

    const std::string cfg = (kConfigs / "negative_constant.cfg").string();
    CHECK(run_cli("certify --config " + cfg + " --seed 5 --out " + (dir / "a").string()) == kExitOk);
    CHECK(run_cli("certify --config " + cfg + " --seed 5 --out " + (dir / "b").string()) == kExitOk);
    CHECK(slurp(dir / "a" / "certificate.txt") == slurp(dir / "b" / "certificate.txt"));
    CHECK(run_cli("necessary --config " + cfg + " --out " + (dir / "n").string()) == kExitOk);
}
