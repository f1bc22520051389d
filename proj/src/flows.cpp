#include "confcurv/flows.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "confcurv/operators.hpp"
#include "confcurv/sampling.hpp"
#include "confcurv/spectral.hpp"

namespace confcurv {

void FlowConfig::validate() const
{
    if (!(dt_min > 0.0 && dt_initial > 0.0 && dt_max > 0.0)) throw std::invalid_argument("time steps must be positive");
    if (!(dt_min <= dt_initial && dt_initial <= dt_max)) throw std::invalid_argument("need dt_min <= dt_initial <= dt_max");
    if (!(tol_delta_sq > 0.0 && t_max > 0.0 && safeguard_min_u > 0.0)) throw std::invalid_argument("tolerances must be positive");
    if (sustain < 1 || trace_stride < 1) throw std::invalid_argument("sustain and trace_stride must be at least 1");
}

void FlowTrace::write_csv(std::ostream& os) const
{
    os << "t,r,k,energy,volume,min_u,max_u,delta_sq,lp_defect\n";
    os << std::setprecision(17);
    for (const auto& r : rows)
        os << r.t << ',' << r.r << ',' << r.k << ',' << r.energy << ',' << r.volume << ',' << r.min_u << ','
           << r.max_u << ',' << r.delta_sq << ',' << r.lp_defect << '\n';
}

namespace {

struct State {
    ScalarField u;
    double r = 0.0, k = 0.0, energy = 0.0, volume = 0.0, min_u = 0.0, max_u = 0.0;
    ScalarField phi;
    double delta_sq = 0.0, monitor_p = 2.0;
    bool in_cone = false;
};

// Integral of |Phi|^q u^(2n/(n-2)), only evaluated for recorded rows.
double lp_defect_of(const State& s)
{
    if (!s.in_cone) return std::numeric_limits<double>::quiet_NaN();
    const CriticalExponents ce(s.u.grid.n);
    double lp = 0.0;
    for (std::size_t i = 0; i < s.u.size(); ++i)
        lp += power(std::abs(s.phi[i]), s.monitor_p) * power(s.u[i], ce.two_star);
    return lp * s.u.grid.cell_volume();
}

State evaluate(ScalarField u, const ScalarField& K, Which which, double floor, double monitor_p)
{
    const GridSpec& g = u.grid;
    const CriticalExponents ce(g.n);
    State s;
    s.min_u = u.min();
    s.max_u = u.max();
    if (!(s.min_u >= floor) || !std::isfinite(s.max_u)) {
        s.u = std::move(u);
        return s;
    }
    Spectrum uh = forward(u);
    s.r = r_of(g, uh);
    const auto& xi2 = layout_for(g).xi2();
    for (std::size_t m = 0; m < uh.size(); ++m) uh[m] *= ce.c_n * xi2[m] - 1.0;
    ScalarField Lu = inverse(g, uh);
    double ksum = 0.0, vsum = 0.0;
    std::vector<double> u2s(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        u2s[i] = power(u[i], ce.two_star);
        vsum += u2s[i];
        ksum += K[i] * u2s[i];
    }
    const double dv = g.cell_volume();
    s.k = ksum * dv;
    s.volume = vsum * dv;
    if (which == Which::J) {
        s.in_cone = s.r < 0.0 && s.k < 0.0;
        s.energy = s.in_cone ? j_value(g.n, s.r, s.k) : std::numeric_limits<double>::quiet_NaN();
    } else {
        s.in_cone = s.r > 0.0 && s.k > 0.0;
        s.energy = s.in_cone ? i_value(g.n, s.r, s.k) : std::numeric_limits<double>::quiet_NaN();
    }
    if (s.in_cone) {
        s.phi = ScalarField(g);
        const double a = which == Which::J ? s.k / s.r : 1.0;
        const double b = which == Which::J ? 1.0 : s.r / s.k;
        double dsq = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double R = Lu[i] / power(u[i], ce.p);
            const double phi = a * R - b * K[i];
            s.phi[i] = phi;
            dsq += phi * phi * u2s[i];
        }
        s.delta_sq = dsq * dv;
        s.monitor_p = monitor_p;
    }
    s.u = std::move(u);
    return s;
}

// u + dt V with V = -Phi u, stiff part damped by (1 + dt sigma |xi|^2)^-1.
ScalarField stabilized_step(const ScalarField& u, const ScalarField& phi, double dt, double sigma, bool renormalize)
{
    const GridSpec& g = u.grid;
    ScalarField V(g);
    for (std::size_t i = 0; i < u.size(); ++i) V[i] = -phi[i] * u[i];
    Spectrum vh = forward(V);
    const auto& xi2 = layout_for(g).xi2();
    for (std::size_t m = 0; m < vh.size(); ++m) vh[m] *= dt / (1.0 + dt * sigma * xi2[m]);
    ScalarField v = inverse(g, vh);
    for (std::size_t i = 0; i < u.size(); ++i) v[i] += u[i];
    if (!(v.min() > 0.0)) return v;
    return renormalize ? normalize_critical(v) : v;
}

ScalarField exp_step(const ScalarField& u, const ScalarField& phi, double dt, bool renormalize)
{
    ScalarField v(u.grid);
    for (std::size_t i = 0; i < u.size(); ++i) v[i] = u[i] * std::exp(-dt * phi[i]);
    return renormalize ? normalize_critical(v) : v;
}

TraceRow row_of(const State& s, double t)
{
    return {t, s.r, s.k, s.energy, s.volume, s.min_u, s.max_u, s.delta_sq, lp_defect_of(s)};
}

}  // namespace

ScalarField flow_defect(const ScalarField& u, const ScalarField& K, Which which)
{
    return which == Which::J ? defect_j(u, K) : defect_i(u, K);
}

ScalarField step_flow(const ScalarField& u, const ScalarField& K, double dt, Which which, bool renormalize)
{
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    const EnergyReport rep = j_energy(u, K);
    const bool cone = which == Which::J ? (rep.r < 0.0 && rep.k < 0.0) : (rep.r > 0.0 && rep.k > 0.0);
    if (!cone || u.min() <= 0.0) throw std::domain_error("state outside the variational cone");
    return exp_step(u, flow_defect(u, K, which), dt, renormalize);
}

ScalarField step_j(const ScalarField& u, const ScalarField& K, double dt, bool renormalize)
{
    return step_flow(u, K, dt, Which::J, renormalize);
}

ScalarField step_i(const ScalarField& u, const ScalarField& K, double dt, bool renormalize)
{
    return step_flow(u, K, dt, Which::I, renormalize);
}

FlowResult run_flow(const ScalarField& u0, const ScalarField& K, const FlowConfig& cfg, Which which)
{
    cfg.validate();
    require_same_grid(u0, K);
    const GridSpec& g = u0.grid;
    const CriticalExponents ce(g.n);
    const double mp = cfg.monitor_p > 0.0 ? cfg.monitor_p : 0.5 * g.n;
    const double xi2max = layout_for(g).xi2_max();

    FlowResult res;
    State cur = evaluate(cfg.renormalize_each_step ? normalize_critical(u0) : u0, K, which, cfg.safeguard_min_u, mp);
    if (!cur.in_cone) throw std::domain_error("initial datum outside the variational cone");
    double t = 0.0;
    double dt = cfg.dt_initial;
    int streak = 0;
    int below = cur.delta_sq < cfg.tol_delta_sq ? 1 : 0;
    res.trace.rows.push_back(row_of(cur, t));
    std::size_t steps = 0;

    while (true) {
        if (below >= cfg.sustain) {
            res.converged = true;
            res.stop_reason = "converged";
            break;
        }
        if (t >= cfg.t_max) {
            res.stop_reason = "t_max";
            break;
        }
        if (steps >= cfg.max_steps) {
            res.stop_reason = "max_steps";
            break;
        }
        double dt_eff = std::min(dt, cfg.t_max - t);
        const double coef = which == Which::J ? std::abs(cur.k / cur.r) : 1.0;
        const double sigma = coef * ce.c_n * power(1.0 / cur.min_u, ce.conf);
        if (cfg.stability_cap && cfg.scheme == FlowScheme::ExpEuler) {
            const double rate = sigma * xi2max;
            if (rate > 0.0) dt_eff = std::min(dt_eff, cfg.stability_factor / rate);
        }
        ScalarField trial = cfg.scheme == FlowScheme::ExpEuler
                                ? exp_step(cur.u, cur.phi, dt_eff, cfg.renormalize_each_step)
                                : stabilized_step(cur.u, cur.phi, dt_eff, sigma, cfg.renormalize_each_step);
        State next = evaluate(std::move(trial), K, which, cfg.safeguard_min_u, mp);
        const bool ok = next.in_cone && next.energy <= cur.energy + 1e-10 * (1.0 + std::abs(cur.energy));
        ++steps;
        if (!ok) {
            ++res.rejected;
            streak = 0;
            dt = 0.5 * dt_eff;
            if (dt < cfg.dt_min) {
                std::ostringstream os;
                os << "stiff step: flow left the cone (dt " << dt << " below dt_min at t = " << t << ")";
                throw StiffStepError(os.str(), cur.u, res.trace);
            }
            continue;
        }
        t += dt_eff;
        cur = std::move(next);
        ++res.accepted;
        below = cur.delta_sq < cfg.tol_delta_sq ? below + 1 : 0;
        if (res.accepted % cfg.trace_stride == 0 || below >= cfg.sustain) res.trace.rows.push_back(row_of(cur, t));
        if (++streak >= 10) {
            dt = std::min(2.0 * dt_eff, cfg.dt_max);
            streak = 0;
        } else {
            dt = std::max(dt, dt_eff);
        }
    }
    if (res.trace.rows.back().t != t) res.trace.rows.push_back(row_of(cur, t));
    res.t = t;
    res.delta_sq = cur.delta_sq;
    res.energy = cur.energy;
    res.u = std::move(cur.u);
    return res;
}

MinimizeResult minimize(const ScalarField& K, const FlowConfig& cfg, Which which, const MinimizeOptions& opt)
{
    const GridSpec& g = K.grid;
    std::vector<ScalarField> starts(opt.seeds);
    if (which == Which::J) {
        for (int i = 0; i < opt.restarts; ++i) {
            if (i == 0) {
                starts.push_back(normalize_critical(ScalarField(g, 1.0)));
                continue;
            }
            auto rng = stream_rng(opt.seed, static_cast<std::uint64_t>(i));
            ScalarField f = random_smooth_field(g, rng, opt.kmax, 2.0);
            for (double& v : f.values) v = std::exp(opt.perturbation * v);
            starts.push_back(normalize_critical(f));
        }
    } else {
        const std::size_t base = opt.seeds.size();
        for (int i = 0; base > 0 && i + static_cast<int>(base) < opt.restarts; ++i) {
            auto rng = stream_rng(opt.seed, static_cast<std::uint64_t>(i + 1));
            ScalarField f = random_smooth_field(g, rng, opt.kmax, 2.0);
            ScalarField s(opt.seeds[static_cast<std::size_t>(i) % base]);
            for (std::size_t j = 0; j < s.size(); ++j) s[j] *= std::exp(opt.perturbation * f[j]);
            starts.push_back(normalize_critical(s));
        }
    }

    MinimizeResult out;
    bool any = false;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s0 : starts) {
        const EnergyReport rep = j_energy(s0, K);
        const bool cone = which == Which::J ? rep.in_X : rep.in_Y;
        if (!cone) continue;
        ScalarField u;
        FlowTrace tr;
        bool conv = false;
        try {
            FlowResult fr = run_flow(s0, K, cfg, which);
            u = std::move(fr.u);
            tr = std::move(fr.trace);
            conv = fr.converged;
        } catch (const StiffStepError& e) {
            u = e.last_state();
            tr = e.partial_trace();
        }
        const EnergyReport fin = j_energy(u, K);
        const double e = which == Which::J ? fin.J.value_or(std::numeric_limits<double>::infinity())
                                           : fin.I.value_or(std::numeric_limits<double>::infinity());
        out.traces.push_back(std::move(tr));
        out.energies.push_back(e);
        out.converged.push_back(conv);
        if (!any || e < best) {
            best = e;
            out.best = out.traces.size() - 1;
            out.u = std::move(u);
            out.report = fin;
            any = true;
        }
    }
    if (!any) throw NumericalError("empty variational space at this resolution");
    return out;
}

CompactnessReport compactness_monitor(const FlowTrace& trace, const ABCertificate& cert, Which which, const GridSpec& g,
                                      const CompactnessOptions& opt)
{
    CompactnessReport rep;
    if (trace.rows.empty()) {
        rep.notes.push_back("empty trace");
        return rep;
    }
    const int n = g.n;
    const double e_n = static_cast<double>(n) / (n - 2);
    double level = 0.0;
    rep.min_abs_k = rep.min_abs_r = std::numeric_limits<double>::infinity();
    for (const auto& r : trace.rows) {
        level = std::max(level, r.energy);
        rep.min_abs_k = std::min(rep.min_abs_k, std::abs(r.k));
        rep.max_abs_k = std::max(rep.max_abs_k, std::abs(r.k));
        rep.min_abs_r = std::min(rep.min_abs_r, std::abs(r.r));
        rep.max_abs_r = std::max(rep.max_abs_r, std::abs(r.r));
    }
    rep.energy_level = level;
    const double S2 = opt.sobolev * opt.sobolev;
    const double tol = 1e-8;
    if (which == Which::J) {
        rep.c0 = cert.B > 0.0 ? std::pow(1.0 / (S2 * cert.B), e_n) : 0.0;
        rep.k_lower = rep.c0;
        rep.k_upper = opt.sup_abs_K;
        rep.r_lower = level > 0.0 ? std::pow(rep.c0 / level, 1.0 / e_n) : 0.0;
        rep.r_upper = std::pow(g.volume(), 2.0 / n);
        for (const auto& r : trace.rows) {
            if (-r.k < rep.k_lower - tol) rep.bounds_hold = false;
            if (-r.k > rep.k_upper + tol) rep.bounds_hold = false;
            if (-r.r < rep.r_lower - tol) rep.bounds_hold = false;
            if (-r.r > rep.r_upper + tol) rep.bounds_hold = false;
        }
    } else {
        const double kp = std::pow(std::max(opt.max_K, 0.0), (n - 2.0) / n);
        rep.k_upper = std::max(opt.max_K, 0.0);
        rep.r_upper = level * kp;
        const double cr = cert.A > 0.0 ? (1.0 / S2 - cert.B * kp) / cert.A : -1.0;
        if (cr > 0.0) {
            rep.r_lower = cr;
            rep.k_lower = std::pow(cr / level, e_n);
        } else {
            rep.notes.push_back("lower bounds vacuous: B * (max K)^((n-2)/n) >= 1/S^2");
        }
        for (const auto& r : trace.rows) {
            if (r.k > rep.k_upper + tol || r.r > rep.r_upper * (1.0 + 1e-12) + tol) rep.bounds_hold = false;
            if (cr > 0.0 && (r.r < rep.r_lower - tol || r.k < rep.k_lower - tol)) rep.bounds_hold = false;
        }
    }
    const double m0 = trace.rows.front().max_u;
    double mx = m0;
    for (const auto& r : trace.rows) mx = std::max(mx, r.max_u);
    rep.max_u_growth = mx / m0;
    // Monotone growth over the second half of the trace.
    const std::size_t h = trace.rows.size() / 2;
    bool mono = trace.rows.size() >= 4;
    for (std::size_t i = h + 1; i < trace.rows.size(); ++i)
        if (trace.rows[i].max_u < trace.rows[i - 1].max_u) mono = false;
    rep.monotone_max_u = mono;
    rep.concentration_flag = rep.max_u_growth > opt.growth_factor;
    if (rep.concentration_flag) rep.notes.push_back("max_u growth beyond configured factor: concentration suspected");
    return rep;
}

}  // namespace confcurv
