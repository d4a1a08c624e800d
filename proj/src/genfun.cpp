#include "martin/genfun.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace martin {

namespace {

// |a| beyond which the conjugate optimiser is considered to run off to infinity.
constexpr double kLegendreCap = 500.0;
// Optimisers with |a| beyond this are reported as sitting on the hull boundary.
constexpr double kBoundaryRadius = 25.0;

struct InnerFailure {};

// argmin_a phi(a) - t q.a by Newton with backtracking, warm-started at a.
Vector inner_argmin(const GenFun& gf, const Vector& q, double t, Vector a) {
    const int d = gf.dim();
    for (int it = 0; it < 200; ++it) {
        const Vector g = gf.grad(a) - t * q;
        if (g.norm() <= 1e-15 * (1.0 + t) * std::sqrt(static_cast<double>(d))) return a;
        const Eigen::MatrixXd H = gf.hessian(a);
        Eigen::LLT<Eigen::MatrixXd> llt(H);
        if (llt.info() != Eigen::Success) throw InnerFailure{};
        const Vector step = -llt.solve(g);
        const double f0 = gf.phi(a) - t * q.dot(a);
        const double slope = g.dot(step);
        double lambda = 1.0;
        Vector next = a + step;
        while (gf.phi(next) - t * q.dot(next) > f0 + 1e-4 * lambda * slope) {
            lambda *= 0.5;
            if (lambda < 1e-12) break;
            next = a + lambda * step;
        }
        if (lambda < 1e-12) return a;  // no further progress at machine precision
        if (!next.allFinite() || next.norm() > 1e6) throw InnerFailure{};
        a = next;
    }
    return a;
}

double direction_residual(const Vector& g, const Vector& q) {
    const double along = g.dot(q);
    const double across = (g - along * q).norm();
    return std::atan2(across, along);
}

// Newton on [grad phi(a) - s q; phi(a) - 1] = 0.
void polish(const GenFun& gf, const Vector& q, Vector& a, double& s) {
    const int d = gf.dim();
    for (int it = 0; it < 8; ++it) {
        Vector F(d + 1);
        F.head(d) = gf.grad(a) - s * q;
        F[d] = gf.phi(a) - 1.0;
        if (F.lpNorm<Eigen::Infinity>() < 1e-15) return;
        Eigen::MatrixXd J(d + 1, d + 1);
        J.topLeftCorner(d, d) = gf.hessian(a);
        J.topRightCorner(d, 1) = -q;
        J.bottomLeftCorner(1, d) = gf.grad(a).transpose();
        J(d, d) = 0.0;
        const Vector step = J.fullPivLu().solve(-F);
        if (!step.allFinite()) return;
        Vector na = a + step.head(d);
        const double ns = s + step[d];
        Vector nF(d + 1);
        nF.head(d) = gf.grad(na) - ns * q;
        nF[d] = gf.phi(na) - 1.0;
        if (nF.norm() >= F.norm()) return;
        a = na;
        s = ns;
    }
}

struct LogSumExp {
    double value;
    Vector grad;
    Eigen::MatrixXd hess;
};

// f(a) = log sum_k p_k exp(a.(z_k - v)) with gradient and Hessian.
LogSumExp log_mgf_shifted(const JumpMeasure& m, const Vector& a, const Vector& v) {
    const int d = m.dim();
    const auto& atoms = m.atoms();
    std::vector<double> w(atoms.size());
    double top = -kInfinity;
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        w[k] = dot(a, atoms[k].z) - a.dot(v) + std::log(atoms[k].p);
        top = std::max(top, w[k]);
    }
    double sum = 0.0;
    for (double x : w) sum += std::exp(x - top);
    LogSumExp out{top + std::log(sum), Vector::Zero(d), Eigen::MatrixXd::Zero(d, d)};
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        const double pi = std::exp(w[k] - out.value);
        const Vector y = to_vector(atoms[k].z) - v;
        out.grad += pi * y;
        out.hess += pi * y * y.transpose();
    }
    out.hess -= out.grad * out.grad.transpose();
    return out;
}

}  // namespace

GenFun::GenFun(JumpMeasure measure) : measure_(std::move(measure)) {
    const auto& atoms = measure_.atoms();
    jumps_.resize(measure_.dim(), static_cast<Eigen::Index>(atoms.size()));
    probs_.resize(static_cast<Eigen::Index>(atoms.size()));
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        jumps_.col(static_cast<Eigen::Index>(k)) = to_vector(atoms[k].z);
        probs_[static_cast<Eigen::Index>(k)] = atoms[k].p;
    }
}

double GenFun::phi(const Vector& a) const {
    return probs_.dot((jumps_.transpose() * a).array().exp().matrix());
}

Vector GenFun::grad(const Vector& a) const {
    const Vector w = probs_.array() * (jumps_.transpose() * a).array().exp();
    return jumps_ * w;
}

Eigen::MatrixXd GenFun::hessian(const Vector& a) const {
    const Vector w = probs_.array() * (jumps_.transpose() * a).array().exp();
    return jumps_ * w.asDiagonal() * jumps_.transpose();
}

DirectionSolve solve_direction(const GenFun& gf, const Vector& q, const GenFunOptions& opt) {
    const int d = gf.dim();
    if (q.size() != d) throw DomainError("solve_direction: direction has wrong dimension");
    if (std::abs(q.norm() - 1.0) > 1e-12) throw DomainError("solve_direction: direction must be a unit vector");

    DirectionSolve out;
    out.q = q;

    Vector a0;
    try {
        a0 = inner_argmin(gf, q, 0.0, Vector::Zero(d));
    } catch (const InnerFailure&) {
        throw ValidationError("solve_direction: phi is not coercive; the support must positively span R^d");
    }
    if (gf.phi(a0) >= 1.0 - 1e-14) {
        // Zero mean: D reduces to the single point 0.
        out.a = Vector::Zero(d);
        out.scale = 0.0;
        out.residual_phi = std::abs(gf.phi(out.a) - 1.0);
        out.residual_dir = 0.0;
        return out;
    }

    Vector warm = a0;
    auto g = [&](double t) {
        try {
            warm = inner_argmin(gf, q, t, warm);
        } catch (const InnerFailure&) {
            throw SolverError("solve_direction: inner minimisation diverged");
        }
        return gf.phi(warm) - 1.0;
    };

    double lo = 0.0, hi = std::max(1e-3, gf.measure().mean().norm());
    double g_lo = gf.phi(a0) - 1.0, g_hi = g(hi);
    int expansions = 0;
    while (g_hi < 0.0) {
        lo = hi;
        g_lo = g_hi;
        hi *= 2.0;
        g_hi = g(hi);
        if (++expansions > 200) throw SolverError("solve_direction: could not bracket the boundary of D");
    }
    std::uintmax_t iters = static_cast<std::uintmax_t>(opt.max_iter);
    const auto root = boost::math::tools::toms748_solve(g, lo, hi, g_lo, g_hi,
                                                        boost::math::tools::eps_tolerance<double>(50), iters);
    double s = 0.5 * (root.first + root.second);
    Vector a = inner_argmin(gf, q, s, warm);
    polish(gf, q, a, s);

    out.a = a;
    out.scale = s;
    out.residual_phi = std::abs(gf.phi(a) - 1.0);
    out.residual_dir = direction_residual(gf.grad(a), q);
    if (!(out.residual_phi <= opt.phi_tol) || !(out.residual_dir <= opt.dir_tol)) {
        std::ostringstream os;
        os << "solve_direction: residuals phi=" << out.residual_phi << " dir=" << out.residual_dir
           << " above tolerance; best a = " << a.transpose();
        throw SolverError(os.str());
    }
    return out;
}

LegendreResult legendre(const GenFun& gf, const Vector& v) {
    const int d = gf.dim();
    if (v.size() != d) throw DomainError("legendre: vector has wrong dimension");
    const auto& m = gf.measure();

    Vector a = Vector::Zero(d);
    LogSumExp cur = log_mgf_shifted(m, a, v);
    LegendreResult out;
    for (int it = 0; it < 2000; ++it) {
        if (cur.grad.norm() <= 1e-13) break;
        const double mu = 1e-12 * (1.0 + cur.hess.trace());
        const Eigen::MatrixXd H = cur.hess + mu * Eigen::MatrixXd::Identity(d, d);
        Vector step = H.ldlt().solve(-cur.grad);
        if (!step.allFinite() || step.dot(cur.grad) >= 0.0) step = -cur.grad;
        // Keep single steps bounded so the cap test below sees the trajectory.
        const double sn = step.norm();
        if (sn > 50.0) step *= 50.0 / sn;
        const double slope = cur.grad.dot(step);
        double lambda = 1.0;
        LogSumExp next = log_mgf_shifted(m, a + step, v);
        while (next.value > cur.value + 1e-4 * lambda * slope) {
            lambda *= 0.5;
            if (lambda < 1e-14) break;
            next = log_mgf_shifted(m, a + lambda * step, v);
        }
        if (lambda < 1e-14) break;
        a += lambda * step;
        cur = std::move(next);
        if (a.norm() > kLegendreCap) {
            const Vector w = a / a.norm();
            double s = -kInfinity;
            for (const auto& atom : m.atoms()) s = std::max(s, w.dot(to_vector(atom.z) - v));
            if (s < -1e-7) {
                out.value = kInfinity;
                out.outside = true;
                out.argmax = a;
                return out;
            }
            out.boundary = true;
            break;
        }
    }
    if (a.norm() > kBoundaryRadius) out.boundary = true;
    out.value = std::max(0.0, -cur.value);
    out.argmax = a;
    return out;
}

double quasipotential(const GenFun& gf, const Vector& q, const Vector& qp, const GenFunOptions& opt) {
    const Vector p = q - qp;
    const double n = p.norm();
    if (n == 0.0) return 0.0;
    const auto sol = solve_direction(gf, p / n, opt);
    return sol.a.dot(p);
}

double rate_functional(const GenFun& gf, const std::vector<Breakpoint>& path, const CoordSet& lambda) {
    if (path.empty()) throw DomainError("rate_functional: empty path");
    for (std::size_t j = 1; j < path.size(); ++j) {
        if (!(path[j].t > path[j - 1].t)) throw DomainError("rate_functional: breakpoint times must increase strictly");
    }
    // Convexity of the orthant: checking breakpoints covers the segments.
    for (const auto& b : path) {
        if (b.x.size() != gf.dim()) throw DomainError("rate_functional: breakpoint has wrong dimension");
        for (int i : lambda.elements()) {
            if (b.x[i] < -1e-12) return kInfinity;
        }
    }
    double total = 0.0;
    for (std::size_t j = 0; j + 1 < path.size(); ++j) {
        const double dt = path[j + 1].t - path[j].t;
        const Vector slope = (path[j + 1].x - path[j].x) / dt;
        const auto l = legendre(gf, slope);
        if (l.outside) return kInfinity;
        total += dt * l.value;
    }
    return total;
}

std::pair<double, double> lambda_pair(const GenFun& gf, const Vector& q, const GenFunOptions& opt) {
    const Vector zero = Vector::Zero(gf.dim());
    const double lam = quasipotential(gf, q, zero, opt) + quasipotential(gf, -q, zero, opt);
    const Vector& M = gf.measure().mean();
    if (M.norm() == 0.0) throw DomainError("lambda_pair: lambda_M needs a nonzero mean");
    const double lam_m = quasipotential(gf, q, zero, opt) + quasipotential(gf, M / M.norm() - q, zero, opt);
    return {lam, lam_m};
}

double boundary_ray(const GenFun& gf, const Vector& u) {
    bool rises = false;
    for (const auto& a : gf.measure().atoms()) rises = rises || dot(u, a.z) > 0.0;
    if (!rises) return kInfinity;
    auto g = [&](double t) { return gf.phi(t * u) - 1.0; };
    // phi(t u) is convex in t with phi(0) = 1, so the positive root is unique when the slope at 0 is negative
    double hi = 1e-3;
    while (g(hi) <= 0.0) hi *= 2.0;
    double lo = hi / 2.0;
    while (lo > 1e-300 && g(lo) > 0.0) lo /= 2.0;
    if (!(lo > 1e-300)) return 0.0;
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(g, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
    return r.first;
}

double TailBound::bound(double r) const {
    return 2.0 * dim * constant * std::exp(-theta * r);
}

TailBound tail_decay_rate(const GenFun& gf) {
    TailBound tb;
    tb.dim = gf.dim();
    tb.theta = 1.0;
    tb.radius = gf.measure().max_jump_norm();
    tb.constant = std::exp(tb.theta * tb.radius) / (2.0 * tb.dim);
    return tb;
}

double exact_tail(const JumpMeasure& measure, double r) {
    double s = 0.0;
    for (const auto& a : measure.atoms()) {
        if (euclidean_norm(a.z) >= r) s += a.p;
    }
    return s;
}

double ExitMomentThreshold::moment_bound(const Point& x) const {
    double s = 0.0;
    for (const auto& [lp, a] : hat_points) s += std::exp(dot(a, x));
    return s;
}

ExitMomentThreshold exit_moment_threshold(const GenFun& gf) {
    const int d = gf.dim();
    const Vector& M = gf.measure().mean();
    for (int i = 0; i < d; ++i) {
        if (M[i] < -1e-12) throw DomainError("exit_moment_threshold: mean must have nonnegative coordinates");
    }
    ExitMomentThreshold out;
    out.lambda = zero_coordinates(M);
    if (out.lambda.is_full()) throw DomainError("exit_moment_threshold: zero mean");

    std::vector<CoordSet> sets;
    for (const auto& s : CoordSet::all_subsets(d)) {
        if (out.lambda.subset_of(s) && !s.is_full()) sets.push_back(s);
    }
    double min_m = kInfinity;
    for (int i : out.lambda.complement().elements()) min_m = std::min(min_m, M[i]);

    auto base = [&](const CoordSet& s, double delta) {
        Vector a = Vector::Zero(d);
        for (int i : s.complement().elements()) a[i] = -delta * M[i];
        return a;
    };
    auto inside = [&](const Vector& a) { return gf.phi(a) < 1.0; };
    auto pair_inside = [&](const CoordSet& s, double delta, double sigma) {
        Vector hat = base(s, delta), til = base(s, delta);
        for (int i : s.elements()) hat[i] += sigma;
        for (int i : out.lambda.elements()) til[i] += sigma;
        return inside(hat) && inside(til);
    };

    // Scan delta on a dyadic grid; for each, take the largest dyadic-refined sigma.
    for (int k = 0; k < 40; ++k) {
        const double delta = std::ldexp(1.0, -k);
        bool ok = true;
        for (const auto& s : sets) ok = ok && inside(base(s, delta));
        if (!ok) continue;
        double sigma_lo = 0.0, sigma_hi = 1.0;
        auto all_inside = [&](double sigma) {
            return std::all_of(sets.begin(), sets.end(), [&](const CoordSet& s) { return pair_inside(s, delta, sigma); });
        };
        while (all_inside(sigma_hi)) {
            sigma_lo = sigma_hi;
            sigma_hi *= 2.0;
            if (sigma_hi > 1e6) break;
        }
        for (int b = 0; b < 60; ++b) {
            const double mid = 0.5 * (sigma_lo + sigma_hi);
            (all_inside(mid) ? sigma_lo : sigma_hi) = mid;
            if (sigma_hi - sigma_lo < 1e-6 * sigma_hi) break;
        }
        if (sigma_lo <= 0.0) continue;
        const double eps = std::min(sigma_lo, delta * min_m);
        if (eps > out.epsilon) {
            out.epsilon = eps;
            out.delta = delta;
            out.sigma = sigma_lo;
        }
    }
    if (out.epsilon <= 0.0) throw SolverError("exit_moment_threshold: no interior points of D found");
    for (const auto& s : sets) {
        Vector hat = base(s, out.delta);
        for (int i : s.elements()) hat[i] += out.sigma;
        out.hat_points.emplace_back(s, hat);
    }
    return out;
}

}  // namespace martin
