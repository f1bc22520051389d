#include "confcurv/operators.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "confcurv/sampling.hpp"

namespace confcurv {

SpectralOperator::SpectralOperator(const GridSpec& g, OperatorKind kind) : grid_(g), kind_(kind)
{
    const auto& xi2 = layout_for(g).xi2();
    symbol_.resize(xi2.size());
    for (std::size_t m = 0; m < xi2.size(); ++m) symbol_[m] = symbol_at(xi2[m]);
}

double SpectralOperator::symbol_at(double xi2) const
{
    const CriticalExponents ce(grid_.n);
    switch (kind_) {
    case OperatorKind::Laplacian: return -xi2;
    case OperatorKind::ConformalL: return ce.c_n * xi2 - 1.0;
    case OperatorKind::ScreenedL: return (grid_.n - 1) * xi2 + 1.0;
    }
    return 0.0;
}

Spectrum SpectralOperator::apply_spectrum(const Spectrum& s) const
{
    Spectrum out(s);
    for (std::size_t m = 0; m < out.size(); ++m) out[m] *= symbol_[m];
    return out;
}

ScalarField SpectralOperator::apply(const ScalarField& f) const
{
    if (f.grid != grid_) throw std::invalid_argument("grid mismatch");
    return inverse(grid_, apply_spectrum(forward(f)));
}

ScalarField SpectralOperator::solve(const ScalarField& rhs) const
{
    if (rhs.grid != grid_) throw std::invalid_argument("grid mismatch");
    for (std::size_t m = 0; m < symbol_.size(); ++m) {
        if (std::abs(symbol_[m]) < invertibility_tol) {
            const auto k = layout_for(grid_).wavevector(m);
            std::ostringstream os;
            os << "operator not invertible on this grid (mode k = (";
            for (int d = 0; d < grid_.n; ++d) os << (d ? "," : "") << k[d];
            os << "), symbol " << symbol_[m] << ")";
            throw NotInvertibleError(os.str(), m);
        }
    }
    Spectrum s = forward(rhs);
    for (std::size_t m = 0; m < s.size(); ++m) s[m] /= symbol_[m];
    return inverse(grid_, s);
}

ScalarField apply_L(const ScalarField& u)
{
    const CriticalExponents ce(u.grid.n);
    Spectrum s = forward(u);
    const auto& xi2 = layout_for(u.grid).xi2();
    for (std::size_t m = 0; m < s.size(); ++m) s[m] *= ce.c_n * xi2[m] - 1.0;
    return inverse(u.grid, s);
}

ScalarField apply_screened(const ScalarField& u)
{
    return SpectralOperator(u.grid, OperatorKind::ScreenedL).apply(u);
}

GreensSample greens_function(const GridSpec& g, std::size_t pole)
{
    if (pole >= g.total()) throw std::invalid_argument("pole outside lattice");
    ScalarField delta(g);
    delta[pole] = 1.0 / g.cell_volume();
    GreensSample gs;
    gs.pole = pole;
    gs.values = SpectralOperator(g, OperatorKind::ConformalL).solve(delta);
    return gs;
}

DirichletMask::DirichletMask(const GridSpec& g, std::vector<std::uint8_t> in) : grid(g), inside(std::move(in))
{
    if (inside.size() != g.total()) throw std::invalid_argument("mask size does not match grid");
}

std::size_t DirichletMask::count() const
{
    return static_cast<std::size_t>(std::count(inside.begin(), inside.end(), std::uint8_t{1}));
}

DirichletMask cube_mask(const GridSpec& g, const Point& center, double side)
{
    std::vector<std::uint8_t> in(g.total(), 0);
    for (std::size_t i = 0; i < in.size(); ++i) {
        const Point dx = torus_delta(g, lattice_point(g, i), center);
        bool ok = true;
        for (int d = 0; d < g.n; ++d) ok = ok && std::abs(dx[d]) < 0.5 * side - 1e-12 * g.side;
        in[i] = ok ? 1 : 0;
    }
    return DirichletMask(g, std::move(in));
}

DirichletMask ball_mask(const GridSpec& g, const Point& center, double radius)
{
    std::vector<std::uint8_t> in(g.total(), 0);
    for (std::size_t i = 0; i < in.size(); ++i) in[i] = torus_distance(g, lattice_point(g, i), center) < radius ? 1 : 0;
    return DirichletMask(g, std::move(in));
}

namespace {

std::array<std::size_t, kMaxDim> unravel(const GridSpec& g, std::size_t idx)
{
    std::array<std::size_t, kMaxDim> ijk{};
    for (int d = g.n - 1; d >= 0; --d) {
        ijk[d] = idx % g.points;
        idx /= g.points;
    }
    return ijk;
}

}  // namespace

DirichletMask dilate(const DirichletMask& m, int cells)
{
    const GridSpec& g = m.grid;
    if (cells <= 0) return m;
    // Offsets inside the Euclidean ball of radius `cells`.
    std::vector<std::array<long, kMaxDim>> offs;
    std::array<long, kMaxDim> o{};
    const long r = cells;
    std::size_t span = 1;
    for (int d = 0; d < g.n; ++d) span *= static_cast<std::size_t>(2 * r + 1);
    for (std::size_t t = 0; t < span; ++t) {
        std::size_t rest = t;
        long s2 = 0;
        for (int d = 0; d < g.n; ++d) {
            o[d] = static_cast<long>(rest % static_cast<std::size_t>(2 * r + 1)) - r;
            rest /= static_cast<std::size_t>(2 * r + 1);
            s2 += o[d] * o[d];
        }
        if (s2 <= r * r) offs.push_back(o);
    }
    std::vector<std::uint8_t> out(m.inside);
    const long N = static_cast<long>(g.points);
    for (std::size_t i = 0; i < m.inside.size(); ++i) {
        if (!m.inside[i]) continue;
        const auto ijk = unravel(g, i);
        for (const auto& off : offs) {
            std::array<std::size_t, kMaxDim> q{};
            for (int d = 0; d < g.n; ++d) q[d] = static_cast<std::size_t>(((static_cast<long>(ijk[d]) + off[d]) % N + N) % N);
            out[lattice_index(g, q)] = 1;
        }
    }
    return DirichletMask(g, std::move(out));
}

DirichletMask superlevel_mask(const ScalarField& f, double level)
{
    std::vector<std::uint8_t> in(f.size(), 0);
    for (std::size_t i = 0; i < f.size(); ++i) in[i] = f[i] >= level ? 1 : 0;
    return DirichletMask(f.grid, std::move(in));
}

namespace {

// Ground state of one connected block by shifted inverse iteration; small blocks go dense.
EigenResult block_nu1(const Eigen::SparseMatrix<double>& A, double shift, const EigenOptions& opt)
{
    const int M = static_cast<int>(A.rows());
    EigenResult res;
    if (M <= 400) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(A), Eigen::ComputeEigenvectors);
        res.value = es.eigenvalues()(0);
        const Eigen::VectorXd v = es.eigenvectors().col(0);
        res.vector.assign(v.data(), v.data() + M);
        res.converged = es.info() == Eigen::Success;
        return res;
    }
    Eigen::SparseMatrix<double> S = A;
    for (int r = 0; r < M; ++r) S.coeffRef(r, r) -= shift;
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(opt.cg_tol);
    cg.setMaxIterations(10 * M + 100);
    cg.compute(S);

    Eigen::VectorXd x = Eigen::VectorXd::Ones(M);
    x.normalize();
    double prev = x.dot(A * x);
    for (int it = 1; it <= opt.max_iterations; ++it) {
        Eigen::VectorXd y = cg.solveWithGuess(x, x);
        x = y.normalized();
        const double mu = x.dot(A * x);
        res.iterations = it;
        res.value = mu;
        if (std::abs(mu - prev) < opt.rel_tol * std::max(std::abs(mu), 1e-300)) {
            res.converged = true;
            break;
        }
        prev = mu;
    }
    res.vector.assign(x.data(), x.data() + M);
    return res;
}

}  // namespace

EigenResult dirichlet_nu1(const DirichletMask& mask, const EigenOptions& opt)
{
    const GridSpec& g = mask.grid;
    const std::size_t total = g.total();
    std::vector<long> local(total, -1);
    std::vector<std::size_t> global;
    for (std::size_t i = 0; i < total; ++i)
        if (mask.inside[i]) {
            local[i] = static_cast<long>(global.size());
            global.push_back(i);
        }
    if (global.empty()) throw std::invalid_argument("mask has no inside points");
    if (global.size() == total) throw std::invalid_argument("mask complement is empty");

    const CriticalExponents ce(g.n);
    const double h = g.spacing();
    const double off = -ce.c_n / (h * h);
    const double diag = 2.0 * g.n * ce.c_n / (h * h) - 1.0;
    const long N = static_cast<long>(g.points);
    const int M = static_cast<int>(global.size());

    std::vector<std::vector<int>> nbr(M);
    for (int r = 0; r < M; ++r) {
        const auto ijk = unravel(g, global[r]);
        for (int d = 0; d < g.n; ++d)
            for (long s : {-1L, 1L}) {
                auto q = ijk;
                q[d] = static_cast<std::size_t>(((static_cast<long>(ijk[d]) + s) % N + N) % N);
                const long c = local[lattice_index(g, q)];
                if (c >= 0) nbr[r].push_back(static_cast<int>(c));
            }
    }

    // The spectrum of a disconnected mask is the union over its components.
    std::vector<int> comp(M, -1);
    std::vector<std::vector<int>> members;
    for (int seed = 0; seed < M; ++seed) {
        if (comp[seed] >= 0) continue;
        const int id = static_cast<int>(members.size());
        members.emplace_back();
        std::vector<int> stack{seed};
        comp[seed] = id;
        while (!stack.empty()) {
            const int r = stack.back();
            stack.pop_back();
            members[id].push_back(r);
            for (int c : nbr[r])
                if (comp[c] < 0) {
                    comp[c] = id;
                    stack.push_back(c);
                }
        }
    }

    EigenResult best;
    best.value = std::numeric_limits<double>::infinity();
    best.converged = true;
    int best_id = -1;
    std::vector<double> best_vec;
    std::vector<int> pos(M, -1);
    for (std::size_t id = 0; id < members.size(); ++id) {
        auto& mem = members[id];
        std::sort(mem.begin(), mem.end());
        const int m = static_cast<int>(mem.size());
        for (int a = 0; a < m; ++a) pos[mem[a]] = a;
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(m) * (2 * g.n + 1));
        double lower = diag;
        for (int a = 0; a < m; ++a) {
            trip.emplace_back(a, a, diag);
            for (int c : nbr[mem[a]]) trip.emplace_back(a, pos[c], off);
            lower = std::min(lower, diag - std::abs(off) * static_cast<double>(nbr[mem[a]].size()));
        }
        Eigen::SparseMatrix<double> A(m, m);
        A.setFromTriplets(trip.begin(), trip.end());
        const EigenResult r = block_nu1(A, lower - 1.0, opt);
        best.iterations += r.iterations;
        if (!r.converged) {
            best.converged = false;
            best.value = r.value;
            break;
        }
        if (r.value < best.value) {
            best.value = r.value;
            best_id = static_cast<int>(id);
            best_vec = r.vector;
        }
    }
    if (!best.converged) {
        std::ostringstream os;
        os << "dirichlet_nu1 did not converge after " << best.iterations << " iterations (last estimate " << best.value << ")";
        throw NumericalError(os.str());
    }
    best.vector.assign(M, 0.0);
    double sign = 0.0;
    for (std::size_t a = 0; a < best_vec.size(); ++a) sign += best_vec[a];
    sign = sign < 0.0 ? -1.0 : 1.0;
    for (std::size_t a = 0; a < members[best_id].size(); ++a) best.vector[members[best_id][a]] = sign * best_vec[a];
    return best;
}

SobolevEstimate sobolev_constant_estimate(const GridSpec& g, std::size_t samples, std::uint64_t seed)
{
    const CriticalExponents ce(g.n);
    SobolevEstimate est;
    est.running_max.reserve(samples);
    const double lam_max = 0.25 * static_cast<double>(g.points) / g.side;
    const double lam_min = 2.0 / g.side;
    for (std::size_t i = 0; i < samples; ++i) {
        ScalarField f(g, 1.0);
        if (i > 0) {
            auto rng = stream_rng(seed, i);
            std::uniform_real_distribution<double> uni(0.0, 1.0);
            const int family = static_cast<int>(i % 3);
            if (family == 0) {
                const double kappa = 1.0 + 3.0 * uni(rng);
                f = random_smooth_field(g, rng, 4, kappa);
                const double c = 2.0 * uni(rng) - 1.0;
                for (double& v : f.values) v += c;
            } else {
                const Point a = random_point(g, rng);
                const double lam = lam_min * std::pow(lam_max / lam_min, uni(rng));
                const double c = family == 1 ? 0.0 : uni(rng);
                for (std::size_t j = 0; j < f.size(); ++j) {
                    const double d = torus_distance(g, lattice_point(g, j), a);
                    f[j] = c + power(lam / (1.0 + lam * lam * d * d), 0.5 * (g.n - 2));
                }
            }
        }
        const double ratio = lp_norm(f, ce.two_star) / std::sqrt(h1_norm_sq(f));
        est.value = std::max(est.value, ratio);
        est.running_max.push_back(est.value);
    }
    est.samples = samples;
    return est;
}

}  // namespace confcurv
