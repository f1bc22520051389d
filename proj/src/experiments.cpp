#include "confcurv/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include "confcurv/certificate.hpp"
#include "confcurv/operators.hpp"
#include "confcurv/sampling.hpp"
#include "confcurv/snapshot.hpp"

namespace confcurv {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- config

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v)
{
    std::size_t pos = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("bad number for " + key + ": " + v);
    }
    if (pos != v.size()) throw ConfigError("bad number for " + key + ": " + v);
    return x;
}

long long to_int(const std::string& key, const std::string& v)
{
    const double x = to_double(key, v);
    if (x != std::floor(x)) throw ConfigError("expected integer for " + key + ": " + v);
    return static_cast<long long>(x);
}

bool to_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("bad boolean for " + key + ": " + v);
}

std::vector<double> to_list(const std::string& key, const std::string& v)
{
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(to_double(key, item));
    }
    if (out.empty()) throw ConfigError("empty list for " + key);
    return out;
}

Point to_point(const std::string& key, const std::string& v)
{
    const auto xs = to_list(key, v);
    if (xs.size() > static_cast<std::size_t>(kMaxDim)) throw ConfigError("too many coordinates for " + key);
    Point p{};
    std::copy(xs.begin(), xs.end(), p.begin());
    return p;
}

fs::path to_path(const std::string& v, const fs::path& base)
{
    const fs::path p(v);
    return p.is_absolute() ? p : base / p;
}

bool apply_flow_key(FlowConfig& f, const std::string& key, const std::string& sub, const std::string& v)
{
    if (sub == "dt_initial") f.dt_initial = to_double(key, v);
    else if (sub == "dt_min") f.dt_min = to_double(key, v);
    else if (sub == "dt_max") f.dt_max = to_double(key, v);
    else if (sub == "t_max") f.t_max = to_double(key, v);
    else if (sub == "tol_delta_sq") f.tol_delta_sq = to_double(key, v);
    else if (sub == "renormalize") f.renormalize_each_step = to_bool(key, v);
    else if (sub == "safeguard_min_u") f.safeguard_min_u = to_double(key, v);
    else if (sub == "monitor_p") f.monitor_p = to_double(key, v);
    else if (sub == "max_steps") f.max_steps = static_cast<std::size_t>(to_int(key, v));
    else if (sub == "sustain") f.sustain = static_cast<int>(to_int(key, v));
    else if (sub == "stability_cap") f.stability_cap = to_bool(key, v);
    else if (sub == "stability_factor") f.stability_factor = to_double(key, v);
    else if (sub == "trace_stride") f.trace_stride = static_cast<std::size_t>(to_int(key, v));
    else if (sub == "scheme") {
        if (v == "exp_euler") f.scheme = FlowScheme::ExpEuler;
        else if (v == "stabilized") f.scheme = FlowScheme::Stabilized;
        else throw ConfigError("flow scheme must be exp_euler or stabilized");
    }
    else return false;
    return true;
}

}  // namespace

void apply_config_line(ExperimentConfig& c, const std::string& key, const std::string& v, const fs::path& base)
{
    auto prefixed = [&](const char* pre, std::string& rest) {
        const std::string p(pre);
        if (key.rfind(p, 0) != 0) return false;
        rest = key.substr(p.size());
        return true;
    };
    std::string sub;
    if (key == "n") c.n = static_cast<int>(to_int(key, v));
    else if (key == "grid") c.grid = static_cast<std::size_t>(to_int(key, v));
    else if (key == "side") c.side = to_double(key, v);
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(to_int(key, v));
    else if (key == "out") c.out = to_path(v, base);
    else if (key == "which") {
        if (v == "j") c.which = Which::J;
        else if (v == "i") c.which = Which::I;
        else throw ConfigError("which must be j or i");
    } else if (prefixed("K.", sub)) {
        KSource& k = c.K;
        if (sub == "family") k.family = v;
        else if (sub == "value") k.value = to_double(key, v);
        else if (sub == "floor") k.floor = to_double(key, v);
        else if (sub == "max") k.max = to_double(key, v);
        else if (sub == "radius") k.radius = to_double(key, v);
        else if (sub == "plateau") k.plateau = to_double(key, v);
        else if (sub == "center") k.center = to_point(key, v);
        else if (sub == "eps") k.eps = to_double(key, v);
        else if (sub == "lambda") k.lambda = to_double(key, v);
        else if (sub == "p") k.p = to_double(key, v);
        else if (sub == "cutoff") k.cutoff = to_double(key, v);
        else if (sub == "inside") k.inside = to_double(key, v);
        else if (sub == "outside") k.outside = to_double(key, v);
        else if (sub == "inner_radius") k.inner_radius = to_double(key, v);
        else if (sub == "amplitude") k.amplitude = to_double(key, v);
        else if (sub == "snapshot") k.snapshot = to_path(v, base);
        else throw ConfigError("unknown key " + key);
    } else if (prefixed("flow.", sub)) {
        if (!apply_flow_key(c.flow_j, key, sub, v) || !apply_flow_key(c.flow_i, key, sub, v))
            throw ConfigError("unknown key " + key);
    } else if (prefixed("flow_j.", sub)) {
        if (!apply_flow_key(c.flow_j, key, sub, v)) throw ConfigError("unknown key " + key);
    } else if (prefixed("flow_i.", sub)) {
        if (!apply_flow_key(c.flow_i, key, sub, v)) throw ConfigError("unknown key " + key);
    } else if (key == "minimize.restarts") c.restarts = static_cast<int>(to_int(key, v));
    else if (key == "minimize.perturbation") c.perturbation = to_double(key, v);
    else if (prefixed("cert.", sub)) {
        SamplerConfig& s = c.sampler;
        if (sub == "random_fields") s.random_fields = static_cast<std::size_t>(to_int(key, v));
        else if (sub == "bubbles") s.bubbles = static_cast<std::size_t>(to_int(key, v));
        else if (sub == "hard") s.hard = static_cast<std::size_t>(to_int(key, v));
        else if (sub == "seed") s.seed = static_cast<std::uint64_t>(to_int(key, v));
        else if (sub == "kmax") s.kmax = static_cast<int>(to_int(key, v));
        else if (sub == "eps0") c.target_eps0 = to_double(key, v);
        else if (sub == "scope") {
            if (v == "global") s.scope = CertificateScope::Global;
            else if (v == "on_x") s.scope = CertificateScope::OnX;
            else throw ConfigError("cert.scope must be global or on_x");
        } else if (sub == "sobolev_samples") c.sobolev_samples = static_cast<std::size_t>(to_int(key, v));
        else throw ConfigError("unknown key " + key);
    } else if (key == "bubble.lambdas") c.lambdas = to_list(key, v);
    else if (key == "bubble.cutoff") c.bubble_cutoff = to_double(key, v);
    else if (key == "bubble.shape") {
        if (v == "smooth") c.bubble_shape = CutoffShape::Smooth;
        else if (v == "smoothstep") c.bubble_shape = CutoffShape::Smoothstep;
        else throw ConfigError("bubble.shape must be smooth or smoothstep");
    } else if (key == "polish.tol") c.polish.tol = to_double(key, v);
    else if (key == "polish.max_newton") c.polish.max_newton = static_cast<int>(to_int(key, v));
    else if (key == "sweep.eps") c.eps_sweep = to_list(key, v);
    else if (key == "decompose.u") c.decompose_u = to_path(v, base);
    else if (key == "decompose.u_inf") c.decompose_u_inf = to_path(v, base);
    else throw ConfigError("unknown key " + key);
}

ExperimentConfig parse_config(std::istream& is, const fs::path& base_dir)
{
    ExperimentConfig c;
    c.out = base_dir;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
        apply_config_line(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), base_dir);
    }
    c.grid_spec();
    c.flow_j.validate();
    c.flow_i.validate();
    return c;
}

ExperimentConfig load_config(const fs::path& path)
{
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config " + path.string());
    return parse_config(is, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

// ---------------------------------------------------------------- K families

ScalarField build_K(const GridSpec& g, const KSource& s)
{
    Point center{};
    for (int d = 0; d < g.n; ++d) center[d] = 0.5 * g.side;
    if (s.center) center = *s.center;
    ScalarField K(g);
    if (s.family == "constant") {
        for (double& v : K.values) v = s.value;
    } else if (s.family == "plateau_bump") {
        const double pl = s.plateau.value_or(2.0 * g.spacing());
        if (!(s.radius > pl)) throw ConfigError("K.radius must exceed the plateau radius");
        for (std::size_t i = 0; i < K.size(); ++i) {
            const double d = torus_distance(g, lattice_point(g, i), center);
            K[i] = s.floor + (s.max - s.floor) * bump_profile((d - pl) / (s.radius - pl));
        }
    } else if (s.family == "counterexample") {
        K = counterexample_K(g, s.eps, s.lambda, s.p, center, s.cutoff);
    } else if (s.family == "punctured") {
        if (!(s.radius > s.inner_radius)) throw ConfigError("K.radius must exceed K.inner_radius");
        for (std::size_t i = 0; i < K.size(); ++i) {
            const double d = torus_distance(g, lattice_point(g, i), center);
            K[i] = s.outside + (s.inside - s.outside) * bump_profile((d - s.inner_radius) / (s.radius - s.inner_radius));
        }
    } else if (s.family == "sine") {
        const double tp = 2.0 * std::numbers::pi / g.side;
        for (std::size_t i = 0; i < K.size(); ++i) {
            const Point x = lattice_point(g, i);
            K[i] = s.value + s.amplitude * std::sin(tp * x[0]);
        }
    } else if (s.family == "snapshot") {
        K = load_snapshot(s.snapshot.string());
        if (K.grid != g) throw ConfigError("K snapshot grid does not match the configured grid");
    } else {
        throw ConfigError("unknown K family " + s.family);
    }
    require_finite(K);
    return K;
}

// ---------------------------------------------------------------- two solutions

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope needs two or more points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0 && y[i] > 0.0)) throw std::domain_error("log-log slope needs positive data");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

std::string TwoSolutionsReport::text() const
{
    std::ostringstream os;
    os << std::setprecision(12);
    os << "u0_snapshot=" << u0_path << "\n"
       << "u1_snapshot=" << u1_path << "\n"
       << "certificate.A=" << certificate.A << "\n"
       << "certificate.B=" << certificate.B << "\n"
       << "certificate.worst_slack=" << certificate.worst_slack << "\n"
       << "u0.r=" << r0 << "\nu0.k=" << k0 << "\nu0.J=" << J0 << "\nu0.beta=" << beta0 << "\nu0.residual=" << residual0
       << "\n"
       << "max_K=" << max_K << "\n"
       << "I_inf=" << I_inf << "\n";
    for (std::size_t i = 0; i < lambdas.size(); ++i)
        os << "seed.lambda=" << lambdas[i] << " I=" << seed_I[i] << " gap=" << seed_gap[i]
           << " in_Y=" << (seed_in_Y[i] ? "true" : "false") << "\n";
    os << "seed.gap_slope=" << (gap_slope_valid ? gap_slope : std::numeric_limits<double>::quiet_NaN()) << "\n"
       << "seed.chosen_lambda=" << chosen_lambda << "\n"
       << "i_flow.converged=" << (i_flow_converged ? "true" : "false") << "\n"
       << "i_flow.concentration_flag=" << (compactness.concentration_flag ? "true" : "false") << "\n"
       << "i_flow.bounds_hold=" << (compactness.bounds_hold ? "true" : "false") << "\n"
       << "i_flow.max_u_growth=" << compactness.max_u_growth << "\n"
       << "u1.r=" << r1 << "\nu1.k=" << k1 << "\nu1.I=" << I1 << "\nu1.beta=" << beta1 << "\nu1.residual=" << residual1
       << "\n"
       << "separation=" << separation << "\n";
    for (std::size_t i = 0; i < sweep_eps.size(); ++i)
        os << "sweep.max_K=" << sweep_eps[i] << " I_u1=" << sweep_I[i] << "\n";
    if (!sweep_eps.empty()) os << "sweep.monotone=" << (sweep_monotone ? "true" : "false") << "\n";
    os << "check.u0_r_k_negative=" << (u0_signs ? "pass" : "fail") << "\n"
       << "check.u1_r_k_positive=" << (u1_signs ? "pass" : "fail") << "\n"
       << "check.residuals_below_1e-6=" << (residuals_ok ? "pass" : "fail") << "\n"
       << "check.I_u1_below_I_inf=" << (below_threshold ? "pass" : "fail") << "\n"
       << "check.distinct=" << (distinct ? "pass" : "fail") << "\n"
       << "verdict=" << (verdict ? "true" : "false") << "\n";
    return os.str();
}

namespace {

struct SolvedBranch {
    ScalarField w;
    ScalarField u;  // critical-norm normalization of w
    double residual = 0.0;
    double beta = 1.0;
};

SolvedBranch polish_branch(const ScalarField& u_crit, const ScalarField& K, const PolishOptions& opt)
{
    const ScaledSolution s = scaled_solution(u_crit, K);
    const PolishResult p = newton_polish(s.w, K, opt);
    SolvedBranch b;
    b.w = p.w;
    b.residual = el_residual(p.w, K, 1.0);
    b.u = normalize_critical(p.w);
    b.beta = fit_beta(b.u, K);
    return b;
}

Point lattice_argmax(const ScalarField& K) { return lattice_point(K.grid, K.argmax()); }

}  // namespace

TwoSolutionsReport two_solutions_core(const ScalarField& K, const ExperimentConfig& cfg, const ABCertificate* cert_in,
                                      ScalarField* u0_out,
                                      ScalarField* u1_out, FlowTrace* trace_j, FlowTrace* trace_i)
{
    const GridSpec& g = K.grid;
    TwoSolutionsReport rep;
    rep.max_K = K.max();
    if (!(rep.max_K > 0.0)) throw std::domain_error("Y is empty: no second solution expected for K <= 0");

    MinimizeOptions mj;
    mj.restarts = std::max(cfg.restarts, 1);
    mj.seed = cfg.seed;
    mj.perturbation = cfg.perturbation;
    const MinimizeResult jm = minimize(K, cfg.flow_j, Which::J, mj);
    if (trace_j) *trace_j = jm.traces[jm.best];
    const SolvedBranch b0 = polish_branch(jm.u, K, cfg.polish);
    const EnergyReport e0 = j_energy(b0.u, K);
    rep.r0 = e0.r;
    rep.k0 = e0.k;
    rep.J0 = e0.J.value_or(std::numeric_limits<double>::quiet_NaN());
    rep.beta0 = b0.beta;
    rep.residual0 = b0.residual;
    rep.u0_signs = e0.r < 0.0 && e0.k < 0.0;
    if (!rep.u0_signs) throw NumericalError("J-minimizer left X");

    rep.I_inf = blowup_threshold(g.n, rep.J0, rep.max_K);

    const Point a = lattice_argmax(K);
    const double cutoff = cfg.bubble_cutoff > 0.0 ? cfg.bubble_cutoff : g.side / 8.0;
    double best_I = std::numeric_limits<double>::infinity();
    ScalarField seed;
    for (double lam : cfg.lambdas) {
        BubbleParams bp;
        bp.a = a;
        bp.lambda = lam;
        bp.cutoff = cutoff;
        bp.shape = cfg.bubble_shape;
        const SeedReport s = seed_test_function(b0.u, b0.beta, K, bp);
        rep.lambdas.push_back(lam);
        rep.seed_I.push_back(s.I);
        rep.seed_gap.push_back(rep.I_inf - s.I);
        rep.seed_in_Y.push_back(s.in_Y);
        if (s.in_Y && s.I < best_I) {
            best_I = s.I;
            seed = s.u;
            rep.chosen_lambda = lam;
        }
    }
    if (seed.size() == 0) throw NumericalError("no bubble seed lies in Y");
    if (rep.lambdas.size() >= 2 &&
        std::all_of(rep.seed_gap.begin(), rep.seed_gap.end(), [](double x) { return x > 0.0; })) {
        rep.gap_slope = loglog_slope(rep.lambdas, rep.seed_gap);
        rep.gap_slope_valid = true;
    }

    ScalarField u_end;
    FlowTrace tr;
    try {
        FlowResult fr = run_flow(seed, K, cfg.flow_i, Which::I);
        u_end = std::move(fr.u);
        tr = std::move(fr.trace);
        rep.i_flow_converged = fr.converged;
    } catch (const StiffStepError& e) {
        u_end = e.last_state();
        tr = e.partial_trace();
    }
    if (cert_in) rep.certificate = *cert_in;
    ABCertificate cert = rep.certificate;
    if (!(cert.B > 0.0)) cert.B = 1.0;
    CompactnessOptions co;
    co.sup_abs_K = std::max(std::abs(K.min()), std::abs(K.max()));
    co.max_K = rep.max_K;
    rep.compactness = compactness_monitor(tr, cert, Which::I, g, co);
    if (trace_i) *trace_i = tr;

    SolvedBranch b1;
    try {
        b1 = polish_branch(u_end, K, cfg.polish);
    } catch (const std::domain_error&) {
        throw NumericalError("I-flow endpoint left Y");
    }
    const EnergyReport e1 = i_energy(b1.u, K);
    rep.r1 = e1.r;
    rep.k1 = e1.k;
    rep.I1 = e1.I.value_or(std::numeric_limits<double>::quiet_NaN());
    rep.beta1 = b1.beta;
    rep.residual1 = b1.residual;
    rep.u1_signs = e1.r > 0.0 && e1.k > 0.0;
    rep.residuals_ok = rep.residual0 < 1e-6 && rep.residual1 < 1e-6;
    rep.below_threshold = rep.I1 < rep.I_inf;
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < K.size(); ++i) {
        diff = std::max(diff, std::abs(b1.w[i] - b0.w[i]));
        scale = std::max(scale, std::abs(b0.w[i]));
    }
    rep.separation = diff / std::max(scale, 1e-300);
    rep.distinct = rep.separation > 1e-3;
    rep.verdict = rep.u0_signs && rep.u1_signs && rep.residuals_ok && rep.below_threshold && rep.distinct;
    if (u0_out) *u0_out = b0.w;
    if (u1_out) *u1_out = b1.w;
    return rep;
}

// ---------------------------------------------------------------- commands

namespace {

void ensure_out(const fs::path& out)
{
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + out.string());
}

void write_text(const fs::path& p, const std::string& s)
{
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os << s;
}

void write_trace(const fs::path& p, const FlowTrace& t)
{
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    t.write_csv(os);
}

template <class F>
int guarded(std::ostream& log, F body)
{
    try {
        return body();
    } catch (const ConfigError& e) {
        log << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NoCertificateError& e) {
        log << "error: " << e.what() << "\n";
        return kExitNoCertificate;
    } catch (const NumericalError& e) {
        log << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        log << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::domain_error& e) {
        log << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

}  // namespace

int cmd_constants(int n, const fs::path& out, std::ostream& log)
{
    if (n < 3 || n > 5) {
        log << "usage: constants --n {3,4,5}\n";
        return kExitUsage;
    }
    return guarded(log, [&] {
        ensure_out(out);
        const BubbleConstants q = bubble_constants(n);
        const BubbleConstants c = bubble_constants_closed(n);
        std::ofstream os(out / "constants.csv");
        if (!os) throw std::runtime_error("cannot write constants.csv");
        write_constants_csv(os, {{q, c}});
        const double diff = constants_max_rel_diff(q, c);
        log << std::setprecision(12) << "n=" << n << " c1=" << q.c1 << " c0/c1=" << q.c0 / q.c1
            << " max_rel_diff=" << diff << "\n";
        if (!(diff < 1e-8)) {
            std::ostringstream tab;
            write_constants_csv(tab, {{q, c}});
            log << "constants mismatch\n" << tab.str();
            return static_cast<int>(kExitConstants);
        }
        return static_cast<int>(kExitOk);
    });
}

int cmd_necessary(const ExperimentConfig& cfg, std::ostream& log)
{
    return guarded(log, [&] {
        ensure_out(cfg.out);
        const ScalarField K = build_K(cfg.grid_spec(), cfg.K);
        const KWReport kw = kazdan_warner(K);
        std::ostringstream os;
        os << kw.text();
        std::vector<std::string> fails;
        if (!kw.integral_negative) fails.push_back("integral_K_negative");
        if (!kw.w_positive) fails.push_back("w_bar_positive");
        if (!kw.nu1_positive) fails.push_back("nu1_omega_K_positive");
        for (const auto& f : fails) os << "failed=" << f << "\n";
        write_text(cfg.out / "report.txt", os.str());
        save_snapshot((cfg.out / "w_bar.cscf").string(), kw.w_bar);
        log << os.str();
        return static_cast<int>(fails.empty() ? kExitOk : kExitNecessary);
    });
}

namespace {

ScalarField default_start(const ScalarField& K, const ExperimentConfig& cfg)
{
    const GridSpec& g = K.grid;
    auto rng = stream_rng(cfg.seed, 0);
    const ScalarField f = random_smooth_field(g, rng, 2, 2.0);
    // Shrink the amplitude until the start lies in the chosen space.
    double amp = cfg.perturbation;
    for (int it = 0; it < 40; ++it, amp *= 0.5) {
        ScalarField u = f;
        for (double& v : u.values) v = std::exp(amp * v);
        u = normalize_critical(u);
        const EnergyReport e = j_energy(u, K);
        if (cfg.which == Which::J ? e.in_X : e.in_Y) return u;
    }
    throw NumericalError("start is outside the variational space");
}

}  // namespace

int cmd_flow(const ExperimentConfig& cfg, std::ostream& log)
{
    return guarded(log, [&] {
        ensure_out(cfg.out);
        const ScalarField K = build_K(cfg.grid_spec(), cfg.K);
        const FlowConfig& fc = cfg.which == Which::J ? cfg.flow_j : cfg.flow_i;
        ScalarField u0 = default_start(K, cfg);
        const EnergyReport e = j_energy(u0, K);
        if (cfg.which == Which::J ? !e.in_X : !e.in_Y)
            throw NumericalError("start is outside the variational space");
        FlowResult fr;
        try {
            fr = run_flow(u0, K, fc, cfg.which);
        } catch (const StiffStepError& err) {
            write_trace(cfg.out / "trace.csv", err.partial_trace());
            save_snapshot((cfg.out / "u.cscf").string(), err.last_state());
            throw;
        }
        write_trace(cfg.out / "trace.csv", fr.trace);
        save_snapshot((cfg.out / "u.cscf").string(), fr.u);
        std::ostringstream os;
        os << std::setprecision(12) << "stop_reason=" << fr.stop_reason << "\nconverged=" << fr.converged
           << "\naccepted=" << fr.accepted << "\nrejected=" << fr.rejected << "\nt=" << fr.t << "\nenergy=" << fr.energy
           << "\ndelta_sq=" << fr.delta_sq << "\n";
        write_text(cfg.out / "report.txt", os.str());
        log << os.str();
        return static_cast<int>(kExitOk);
    });
}

int cmd_minimize(const ExperimentConfig& cfg, std::ostream& log)
{
    return guarded(log, [&] {
        ensure_out(cfg.out);
        const ScalarField K = build_K(cfg.grid_spec(), cfg.K);
        MinimizeOptions mo;
        mo.restarts = std::max(cfg.restarts, 1);
        mo.seed = cfg.seed;
        mo.perturbation = cfg.perturbation;
        if (cfg.which == Which::I) {
            if (!(K.max() > 0.0)) throw std::domain_error("Y is empty for K <= 0");
            BubbleParams bp;
            bp.a = lattice_point(K.grid, K.argmax());
            bp.lambda = cfg.lambdas.front();
            bp.cutoff = cfg.bubble_cutoff > 0.0 ? cfg.bubble_cutoff : K.grid.side / 8.0;
            bp.shape = cfg.bubble_shape;
            mo.seeds.push_back(normalize_critical(bubble_field(K.grid, bp)));
        }
        const MinimizeResult mr = minimize(K, cfg.which == Which::J ? cfg.flow_j : cfg.flow_i, cfg.which, mo);
        write_trace(cfg.out / "trace.csv", mr.traces[mr.best]);
        save_snapshot((cfg.out / "u.cscf").string(), mr.u);
        std::ostringstream os;
        os << std::setprecision(12) << "r=" << mr.report.r << "\nk=" << mr.report.k << "\n";
        if (mr.report.J) os << "J=" << *mr.report.J << "\n";
        if (mr.report.I) os << "I=" << *mr.report.I << "\n";
        for (std::size_t i = 0; i < mr.energies.size(); ++i)
            os << "start" << i << ".energy=" << mr.energies[i] << " converged=" << (mr.converged[i] ? "true" : "false")
               << "\n";
        write_text(cfg.out / "report.txt", os.str());
        log << os.str();
        return static_cast<int>(kExitOk);
    });
}

int cmd_certify(const ExperimentConfig& cfg, std::ostream& log)
{
    return guarded(log, [&] {
        ensure_out(cfg.out);
        const GridSpec g = cfg.grid_spec();
        const ScalarField K = build_K(g, cfg.K);
        SamplerConfig sc = cfg.sampler;
        sc.sobolev = sobolev_constant_estimate(g, cfg.sobolev_samples, sc.seed).value;
        const ABCertificate cert = certify_ab(K, sc, cfg.target_eps0);
        std::ofstream os(cfg.out / "certificate.txt");
        if (!os) throw std::runtime_error("cannot write certificate.txt");
        write_certificate(os, cert);
        write_certificate(log, cert);
        log << "note=empirical certificate on a finite sample family, evidence only\n";
        return static_cast<int>(kExitOk);
    });
}

int cmd_decompose(const ExperimentConfig& cfg, std::ostream& log)
{
    return guarded(log, [&] {
        ensure_out(cfg.out);
        const GridSpec g = cfg.grid_spec();
        Point a{};
        for (int d = 0; d < g.n; ++d) a[d] = 0.5 * g.side;
        if (cfg.K.center) a = *cfg.K.center;
        BubbleParams bp;
        bp.a = a;
        bp.lambda = cfg.lambdas.front();
        bp.cutoff = cfg.bubble_cutoff > 0.0 ? cfg.bubble_cutoff : g.side / 8.0;
        bp.shape = cfg.bubble_shape;
        ScalarField u, u_inf;
        if (cfg.decompose_u.empty()) {
            u_inf = ScalarField(g, 1.0);
            u = linear_combination(1.0, u_inf, 1.0, bubble_field(g, bp));
            save_snapshot((cfg.out / "u.cscf").string(), u);
            save_snapshot((cfg.out / "u_inf.cscf").string(), u_inf);
        } else {
            u = load_snapshot(cfg.decompose_u.string());
            u_inf = cfg.decompose_u_inf.empty() ? ScalarField(u.grid, 1.0) : load_snapshot(cfg.decompose_u_inf.string());
        }
        const Decomposition d = decompose(u, u_inf, {bp});
        write_text(cfg.out / "report.txt", d.text());
        save_snapshot((cfg.out / "v.cscf").string(), d.v);
        log << d.text();
        return static_cast<int>(kExitOk);
    });
}

int cmd_two_solutions(const ExperimentConfig& cfg, std::ostream& log, TwoSolutionsReport* out_report)
{
    return guarded(log, [&]() -> int {
        ensure_out(cfg.out);
        const GridSpec g = cfg.grid_spec();
        const ScalarField K = build_K(g, cfg.K);
        if (!(K.max() > 0.0)) {
            log << "Y is empty: K <= 0 admits no solution with r, k > 0, no second solution expected\n";
            return kExitUsage;
        }
        if (!(K.min() < 0.0)) {
            log << "X is empty: K >= 0 admits no solution with r, k < 0, K must change sign\n";
            return kExitUsage;
        }
        save_snapshot((cfg.out / "K.cscf").string(), K);
        SamplerConfig sc = cfg.sampler;
        sc.sobolev = sobolev_constant_estimate(g, cfg.sobolev_samples, sc.seed).value;
        ABCertificate cert;
        try {
            cert = certify_ab(K, sc, cfg.target_eps0);
        } catch (const NoCertificateError& e) {
            log << "error: K too positive, smallness of sup K violated (" << e.what() << ")\n";
            return kExitNoCertificate;
        }
        {
            std::ofstream os(cfg.out / "certificate.txt");
            write_certificate(os, cert);
        }
        ScalarField u0, u1;
        FlowTrace tj, ti;
        TwoSolutionsReport rep;
        try {
            rep = two_solutions_core(K, cfg, &cert, &u0, &u1, &tj, &ti);
        } catch (const NumericalError& e) {
            log << "error: " << e.what() << "\n";
            return kExitNonCompact;
        }
        rep.u0_path = (cfg.out / "u0.cscf").string();
        rep.u1_path = (cfg.out / "u1.cscf").string();
        save_snapshot(rep.u0_path, u0);
        save_snapshot(rep.u1_path, u1);
        write_trace(cfg.out / "trace_j.csv", tj);
        write_trace(cfg.out / "trace.csv", ti);

        if (!cfg.eps_sweep.empty()) {
            for (double eps : cfg.eps_sweep) {
                ExperimentConfig sub = cfg;
                sub.K.max = eps;
                sub.eps_sweep.clear();
                const ScalarField Ke = build_K(g, sub.K);
                const TwoSolutionsReport r = two_solutions_core(Ke, sub);
                rep.sweep_eps.push_back(eps);
                rep.sweep_I.push_back(r.u1_signs ? r.I1 : std::numeric_limits<double>::quiet_NaN());
            }
            // Sorted by decreasing maximum, I must increase.
            std::vector<std::size_t> idx(rep.sweep_eps.size());
            for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            std::sort(idx.begin(), idx.end(), [&](auto x, auto y) { return rep.sweep_eps[x] > rep.sweep_eps[y]; });
            rep.sweep_monotone = true;
            for (std::size_t i = 1; i < idx.size(); ++i)
                rep.sweep_monotone = rep.sweep_monotone && rep.sweep_I[idx[i]] > rep.sweep_I[idx[i - 1]];
        }
        write_text(cfg.out / "report.txt", rep.text());
        log << rep.text();
        if (out_report) *out_report = rep;
        if (!rep.verdict && rep.compactness.concentration_flag && !rep.i_flow_converged) return kExitNonCompact;
        return static_cast<int>(rep.verdict ? kExitOk : kExitNumerical);
    });
}

}  // namespace confcurv
