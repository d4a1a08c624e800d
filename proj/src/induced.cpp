#include "martin/induced.hpp"

#include "martin/absorbing.hpp"
#include "martin/montecarlo.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>

namespace martin {

namespace {

constexpr std::int64_t kMaxTable = std::int64_t{1} << 22;

void require_zero_mean_1d(const JumpMeasure& nu, double tol = 1e-12) {
    if (nu.dim() != 1) throw DomainError("one-dimensional law expected, got dimension " + std::to_string(nu.dim()));
    if (std::abs(nu.mean()[0]) > tol) {
        throw ValidationError("overshoot formula needs a zero-mean law; mean is " + std::to_string(nu.mean()[0]));
    }
}

}  // namespace

InducedChain induced_chain(const JumpMeasure& measure, const CoordSet& lambda) {
    InducedChain c;
    c.lambda = lambda;
    if (lambda.empty()) {
        c.sentinel = true;
        return c;
    }
    c.base = marginal_measure(measure, lambda);
    return c;
}

std::vector<double> overshoot_table(const JumpMeasure& nu, std::int64_t n) {
    require_zero_mean_1d(nu, 1e-6);
    if (n < 1) throw DomainError("overshoot_table: size must be positive");
    using SpMat = Eigen::SparseMatrix<double>;
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    for (std::int64_t k = 1; k <= n; ++k) {
        const int row = static_cast<int>(k - 1);
        trip.emplace_back(row, row, 1.0);
        for (const auto& a : nu.atoms()) {
            const std::int64_t to = k + a.z[0];
            if (to <= 0) {
                b[row] += a.p * static_cast<double>(to);
            } else {
                trip.emplace_back(row, static_cast<int>(std::min(to, n) - 1), -a.p);
            }
        }
    }
    SpMat A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    Eigen::SparseLU<SpMat> lu(A);
    if (lu.info() != Eigen::Success) throw SolverError("overshoot_table: singular system");
    const Eigen::VectorXd u = lu.solve(b);
    return std::vector<double>(u.data(), u.data() + u.size());
}

double overshoot_mean_1d(const JumpMeasure& nu, std::int64_t k) {
    require_zero_mean_1d(nu);
    if (k <= 0) return static_cast<double>(k);
    std::int64_t n = 256;
    while (n < 2 * k) n *= 2;
    double prev = overshoot_table(nu, n)[static_cast<std::size_t>(k - 1)];
    while (n < kMaxTable) {
        n *= 2;
        const double cur = overshoot_table(nu, n)[static_cast<std::size_t>(k - 1)];
        if (std::abs(cur - prev) < 1e-9) return cur;
        prev = cur;
    }
    throw SolverError("overshoot_mean_1d: no convergence under table doubling");
}

double OneDimHarmonic::overshoot_mean(std::int64_t k) const {
    if (k <= 0) return static_cast<double>(k);
    if (k > plateau_cut) return plateau;
    return table[static_cast<std::size_t>(k - 1)];
}

double OneDimHarmonic::operator()(std::int64_t k) const {
    if (k <= 0) return 0.0;
    return static_cast<double>(k) - overshoot_mean(k);
}

OneDimHarmonic harmonic_1d(const JumpMeasure& nu, std::int64_t min_size, double mean_tol) {
    require_zero_mean_1d(nu, mean_tol);
    OneDimHarmonic h;
    h.nu = nu;
    for (const auto& a : nu.atoms()) {
        h.max_down = std::max(h.max_down, -a.z[0]);
        h.max_up = std::max(h.max_up, a.z[0]);
    }
    std::int64_t n = std::max<std::int64_t>(256, min_size);
    std::vector<double> prev = overshoot_table(nu, n);
    while (true) {
        if (2 * n > kMaxTable) throw SolverError("harmonic_1d: no convergence under table doubling");
        std::vector<double> cur = overshoot_table(nu, 2 * n);
        double change = 0.0;
        for (std::size_t k = 0; k < 128; ++k) change = std::max(change, std::abs(cur[k] - prev[k]));
        n *= 2;
        prev = std::move(cur);
        if (change < 1e-10) break;
    }
    h.table = std::move(prev);
    h.plateau_cut = n;
    h.plateau = h.table.back();
    return h;
}

double harmonic_residual_1d(const OneDimHarmonic& f, std::int64_t k) {
    double s = 0.0;
    for (const auto& a : f.nu.atoms()) s += a.p * f(k + a.z[0]);
    const double fk = f(k);
    return std::abs(s - fk) / (1.0 + std::abs(fk));
}

double ProductHarmonic::operator()(const Point& u) const {
    double v = 1.0;
    for (std::size_t i = 0; i < factors.size(); ++i) v *= factors[i](u[i]);
    return v;
}

ProductHarmonic product_harmonic(const InducedChain& chain, std::int64_t min_size, double mean_tol) {
    if (chain.sentinel) return {};  // the constant chain: every function is harmonic, take 1
    const JumpMeasure& nu = chain.base;
    const int m = nu.dim();
    for (const auto& a : nu.atoms()) {
        const auto moved = std::count_if(a.z.begin(), a.z.end(), [](std::int64_t c) { return c != 0; });
        if (moved > 1) {
            throw UnsupportedError("product_harmonic: jump " + to_string(a.z) +
                                   " moves several coordinates; product form needs one coordinate per step");
        }
    }
    for (int i = 0; i < m; ++i) {
        if (std::abs(nu.mean()[i]) > mean_tol) throw ValidationError("product_harmonic: the induced law must have zero mean");
    }
    ProductHarmonic out;
    for (int i = 0; i < m; ++i) {
        std::vector<Atom> atoms;
        double ai = 0.0;
        for (const auto& a : nu.atoms()) {
            const auto k = a.z[static_cast<std::size_t>(i)];
            if (k == 0) continue;
            atoms.push_back({Point{k}, a.p});
            ai += a.p;
        }
        if (ai <= 0.0) throw ValidationError("product_harmonic: coordinate " + std::to_string(i + 1) + " never moves");
        for (auto& a : atoms) a.p /= ai;
        out.weights.push_back(ai);
        out.factors.push_back(harmonic_1d(JumpMeasure(1, std::move(atoms)), min_size, mean_tol));
    }
    return out;
}

double product_residual(const InducedChain& chain, const ProductHarmonic& f, const Point& u) {
    double s = 0.0;
    Point v(u.size());
    for (const auto& a : chain.base.atoms()) {
        bool alive = true;
        for (std::size_t i = 0; i < u.size(); ++i) {
            v[i] = u[i] + a.z[i];
            alive = alive && v[i] > 0;
        }
        if (alive) s += a.p * f(v);
    }
    const double fu = f(u);
    return std::abs(s - fu) / (1.0 + std::abs(fu));
}

std::vector<ConvergenceNormRow> convergence_norm(const InducedChain& chain, const std::vector<std::int64_t>& sizes,
                                                 double tol, std::int64_t max_iter) {
    if (chain.sentinel) {
        std::vector<ConvergenceNormRow> rows;
        for (const auto n : sizes) rows.push_back({n, 1.0, 1.0, 1.0, 0});
        return rows;
    }
    const int m = chain.dim();
    std::vector<ConvergenceNormRow> rows;
    for (const auto n : sizes) {
        if (n < 1) throw DomainError("convergence_norm: box size must be positive");
        const Box box = Box::cube(m, 1, n);
        using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
        std::vector<Eigen::Triplet<double>> trip;
        const auto vol = box.volume();
        for (std::int64_t k = 0; k < vol; ++k) {
            const Point x = box.point(k);
            Point y(x.size());
            trip.emplace_back(static_cast<int>(k), static_cast<int>(k), 0.5);
            for (const auto& a : chain.base.atoms()) {
                for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + a.z[i];
                if (!box.contains(y)) continue;
                trip.emplace_back(static_cast<int>(k), static_cast<int>(box.index(y)), 0.5 * a.p);
            }
        }
        SpMat lazy(vol, vol);
        lazy.setFromTriplets(trip.begin(), trip.end());

        Eigen::VectorXd v = Eigen::VectorXd::Ones(vol);
        ConvergenceNormRow row;
        row.n = n;
        bool done = false;
        for (std::int64_t it = 1; it <= max_iter; ++it) {
            Eigen::VectorXd w = lazy * v;
            const Eigen::ArrayXd ratio = w.array() / v.array();
            const double lo = ratio.minCoeff(), hi = ratio.maxCoeff();
            v = w / w.lpNorm<Eigen::Infinity>();
            if (hi - lo < tol) {
                row.lower = 2.0 * lo - 1.0;
                row.upper = 2.0 * hi - 1.0;
                row.rho = 0.5 * (row.lower + row.upper);
                row.iterations = it;
                done = true;
                break;
            }
        }
        if (!done) throw SolverError("convergence_norm: power iteration did not converge for n = " + std::to_string(n));
        rows.push_back(row);
    }
    return rows;
}

HitResult hitting_prob(const InducedChain& chain, const Point& u_hat, const Point& u, HitMethod method,
                       std::int64_t n_paths, std::uint64_t seed) {
    if (chain.sentinel) return {1.0, 0.0, 0.0, 0};  // one state, never left
    const int m = chain.dim();
    const WalkSpec spec = WalkSpec::killed(chain.base);
    if (!spec.in_state_space(u_hat) || !spec.in_state_space(u)) throw DomainError("hitting_prob: points must lie in the orthant");
    HitResult out;
    if (u_hat == u) {
        out.probability = 1.0;
        return out;
    }
    if (method == HitMethod::MonteCarlo) {
        double dist2 = 0.0;
        for (int i = 0; i < m; ++i) {
            const double d = static_cast<double>(u[static_cast<std::size_t>(i)] - u_hat[static_cast<std::size_t>(i)]);
            dist2 += d * d;
        }
        McOptions opt;
        opt.n = n_paths;
        opt.horizon = static_cast<std::int64_t>(200.0 * dist2);
        opt.seed = seed;
        const auto e = estimate_hitting(spec, u_hat, u, opt);
        out.probability = e.mean;
        out.std_error = e.std_error;
        out.censored_fraction = e.censored_fraction;
        return out;
    }
    std::int64_t side = 16;
    for (int i = 0; i < m; ++i) {
        side = std::max({side, 2 * u[static_cast<std::size_t>(i)], 2 * u_hat[static_cast<std::size_t>(i)]});
    }
    double prev = -1.0;
    while (true) {
        const AbsorbingSystem sys(spec, Box::cube(m, 1, side));
        const Eigen::VectorXd col = sys.green_column(u);
        const double p = col[sys.state_index(u_hat)] / col[sys.state_index(u)];
        out.probability = std::clamp(p, 0.0, 1.0);
        out.box_side = side;
        if (prev >= 0.0 && std::abs(p - prev) < 1e-8) break;
        prev = p;
        const double next_volume = std::pow(static_cast<double>(2 * side), m);
        if (next_volume > 2e6) break;  // report the largest affordable box
        side *= 2;
    }
    return out;
}

}  // namespace martin
