#include "martin/green.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace martin {

double free_green_bound(const JumpMeasure& measure) {
    const GenFun gf(measure);
    const int d = measure.dim();
    // Newton for argmin phi; the Hessian is positive definite for irreducible walks.
    Vector a = Vector::Zero(d);
    for (int it = 0; it < 200; ++it) {
        const Vector g = gf.grad(a);
        if (g.norm() < 1e-15) break;
        Eigen::LLT<Eigen::MatrixXd> llt(gf.hessian(a));
        if (llt.info() != Eigen::Success) break;
        const Vector step = -llt.solve(g);
        double lambda = 1.0;
        const double f0 = gf.phi(a);
        while (gf.phi(a + lambda * step) > f0 + 1e-4 * lambda * g.dot(step) && lambda > 1e-12) lambda *= 0.5;
        if (lambda <= 1e-12) break;
        a += lambda * step;
    }
    const double rho = gf.phi(a);
    if (rho >= 1.0 - 1e-14) return kInfinity;
    return 1.0 / (1.0 - rho);
}

double GreenTable::value(const Point& y) const {
    if (static_cast<int>(y.size()) != box.dim() || !box.contains(y)) return 0.0;
    return values[box.index(y)];
}

Eigen::VectorXd escape_probabilities(const AbsorbingSystem& sys) {
    return sys.solve(sys.exit_rhs([](const Point&, ExitKind k) { return k == ExitKind::Escaped ? 1.0 : 0.0; }));
}

double target_error_bound(const AbsorbingSystem& sys, const Point& x, const Point& y) {
    const auto kx = sys.state_index(x), ky = sys.state_index(y);
    if (kx < 0 || ky < 0) throw DomainError("target_error_bound: points must be states of the box");
    const Eigen::VectorXd esc = escape_probabilities(sys);
    if (esc[kx] == 0.0) return 0.0;
    const double gyy = sys.green_column(y)[ky];
    const double denom = 1.0 - esc[ky];
    double bound = denom <= 0.0 ? kInfinity : esc[kx] * gyy / denom;

    // With drift, G(w, y) <= C e^{a.(w - y)} for every a in D; take the best of a few points of D per exit.
    const JumpMeasure& m = sys.spec().measure;
    const double cap = free_green_bound(m);
    if (!std::isfinite(cap)) return bound;
    const GenFun gf(m);
    const int d = m.dim();
    std::vector<Vector> points{Vector::Zero(d)};
    auto add_ray = [&](const Vector& u) {
        const double t = boundary_ray(gf, u);
        if (std::isfinite(t) && t > 0.0) points.push_back(t * u);
    };
    add_ray(-m.mean() / m.mean().norm());
    for (int i = 0; i < d; ++i) {
        add_ray(-Vector::Unit(d, i));
        add_ray(Vector::Unit(d, i));
    }
    const Vector yv = to_vector(y);
    const Eigen::VectorXd e = sys.solve(sys.exit_rhs([&](const Point& w, ExitKind k) {
        if (k != ExitKind::Escaped) return 0.0;
        const Vector diff = to_vector(w) - yv;
        double best = kInfinity;
        for (const auto& a : points) best = std::min(best, a.dot(diff));
        return cap * std::exp(best);
    }));
    return std::min(bound, std::max(0.0, e[kx]));
}

GreenTable green_table(const WalkSpec& spec, const Point& x, const Box& box, const SolverOptions& opt) {
    if (!box.contains(x) || !spec.in_state_space(x)) {
        throw DomainError("green_table: source " + to_string(x) + " must be a state inside " + box.to_string());
    }
    const AbsorbingSystem sys(spec, box, opt);
    GreenTable t;
    t.spec = spec;
    t.box = box;
    t.source = x;
    const Eigen::VectorXd row = sys.green_row(x);
    t.values = Eigen::VectorXd::Zero(box.volume());
    for (std::int64_t k = 0; k < sys.size(); ++k) t.values[box.index(sys.state(k))] = row[k];

    const Eigen::VectorXd esc = escape_probabilities(sys);
    t.escape_probability = std::clamp(esc[sys.state_index(x)], 0.0, 1.0);
    const double bound = free_green_bound(spec.measure);
    if (std::isfinite(bound)) {
        t.green_cap = bound;
        t.certified = true;
    } else {
        // Zero mean: no uniform bound on G(y, y). Use the deepest state of the box.
        std::int64_t best = 0, best_depth = -1;
        for (std::int64_t k = 0; k < sys.size(); ++k) {
            const Point& y = sys.state(k);
            std::int64_t depth = std::numeric_limits<std::int64_t>::max();
            for (int i = 0; i < box.dim(); ++i) {
                const auto ii = static_cast<std::size_t>(i);
                depth = std::min({depth, y[ii] - box.lo()[ii], box.hi()[ii] - y[ii]});
            }
            if (depth > best_depth) {
                best_depth = depth;
                best = k;
            }
        }
        const double gyy = sys.green_column(sys.state(best))[best];
        t.green_cap = esc[best] < 1.0 ? gyy / (1.0 - esc[best]) : kInfinity;
        t.certified = false;
    }
    t.trunc_error = t.escape_probability == 0.0 ? 0.0 : t.escape_probability * t.green_cap;
    return t;
}

OracleResult green_oracle(const WalkSpec& spec, const Point& x, const Point& xp, std::int64_t horizon,
                          double prune, std::int64_t max_cells) {
    if (horizon < 0) throw DomainError("green_oracle: horizon must be nonnegative");
    OracleResult out;
    if (!spec.in_state_space(x) || !spec.in_state_space(xp)) return out;
    const int d = spec.dim();
    const auto& atoms = spec.measure.atoms();
    Point zlo(static_cast<std::size_t>(d), 0), zhi(static_cast<std::size_t>(d), 0);
    for (const auto& a : atoms) {
        for (std::size_t i = 0; i < zlo.size(); ++i) {
            zlo[i] = std::min(zlo[i], a.z[i]);
            zhi[i] = std::max(zhi[i], a.z[i]);
        }
    }

    Box cur(x, x);
    std::vector<double> mass{1.0};
    out.value = (x == xp) ? 1.0 : 0.0;
    Point y(static_cast<std::size_t>(d));
    for (std::int64_t t = 1; t <= horizon; ++t) {
        Point lo = cur.lo(), hi = cur.hi();
        for (std::size_t i = 0; i < lo.size(); ++i) {
            lo[i] += zlo[i];
            hi[i] += zhi[i];
        }
        Box next(lo, hi);
        if (next.volume() > max_cells) {
            out.partial = true;
            break;
        }
        std::vector<double> nm(static_cast<std::size_t>(next.volume()), 0.0);
        for (std::int64_t k = 0; k < cur.volume(); ++k) {
            const double m = mass[static_cast<std::size_t>(k)];
            if (m == 0.0) continue;
            const Point p = cur.point(k);
            for (const auto& a : atoms) {
                for (std::size_t i = 0; i < y.size(); ++i) y[i] = p[i] + a.z[i];
                if (!spec.in_state_space(y)) continue;
                nm[static_cast<std::size_t>(next.index(y))] += m * a.p;
            }
        }
        // Prune and find the bounding box of the surviving cells.
        Point blo(static_cast<std::size_t>(d), std::numeric_limits<std::int64_t>::max());
        Point bhi(static_cast<std::size_t>(d), std::numeric_limits<std::int64_t>::min());
        bool any = false;
        for (std::int64_t k = 0; k < next.volume(); ++k) {
            double& m = nm[static_cast<std::size_t>(k)];
            if (m == 0.0) continue;
            if (m < prune) {
                out.dropped += m;
                m = 0.0;
                continue;
            }
            any = true;
            const Point p = next.point(k);
            for (std::size_t i = 0; i < p.size(); ++i) {
                blo[i] = std::min(blo[i], p[i]);
                bhi[i] = std::max(bhi[i], p[i]);
            }
        }
        out.steps = t;
        if (!any) break;
        if (next.contains(xp)) out.value += nm[static_cast<std::size_t>(next.index(xp))];
        Box crop(blo, bhi);
        if (crop.volume() == next.volume()) {
            cur = std::move(next);
            mass = std::move(nm);
        } else {
            std::vector<double> cm(static_cast<std::size_t>(crop.volume()));
            for (std::int64_t k = 0; k < crop.volume(); ++k) {
                cm[static_cast<std::size_t>(k)] = nm[static_cast<std::size_t>(next.index(crop.point(k)))];
            }
            cur = std::move(crop);
            mass = std::move(cm);
        }
    }
    if (!out.partial) out.steps = horizon;
    return out;
}

WalkSpec twist(const WalkSpec& spec, const Vector& a) {
    const GenFun gf(spec.measure);
    const double ph = gf.phi(a);
    if (std::abs(ph - 1.0) > 1e-10) throw DomainError("twist: a is not on the boundary of D (phi(a) - 1 = " +
                                                      std::to_string(ph - 1.0) + ")");
    return WalkSpec(JumpMeasure(spec.dim(), tilt_atoms(spec.measure, a)), spec.kill_set);
}

double check_twist_identity(const WalkSpec& spec, const Vector& a, const std::vector<std::pair<Point, Point>>& pairs,
                            const Box& box, const SolverOptions& opt) {
    const WalkSpec tw = twist(spec, a);
    const AbsorbingSystem base(spec, box, opt), twisted(tw, box, opt);
    double worst = 0.0;
    for (const auto& [x, xp] : pairs) {
        const auto kx = base.state_index(x);
        if (kx < 0 || base.state_index(xp) < 0) throw DomainError("check_twist_identity: points must be states of the box");
        const double g = base.green_column(xp)[kx];
        const double ga = twisted.green_column(xp)[kx];
        Vector diff(spec.dim());
        for (int i = 0; i < spec.dim(); ++i) diff[i] = static_cast<double>(xp[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(i)]);
        const double rhs = std::exp(a.dot(diff)) * g;
        const double dev = ga > 0.0 ? std::abs(ga - rhs) / ga : std::abs(ga - rhs);
        worst = std::max(worst, dev);
    }
    return worst;
}

RenewalSplit renewal_split(const WalkSpec& spec_z, const CoordSet& lambda, const Point& x, const Point& xp,
                           double delta, const Box& box, double error_tol, const SolverOptions& opt) {
    const int d = spec_z.dim();
    if (!spec_z.kill_set.is_full()) throw DomainError("renewal_split: the base walk must be killed on all coordinates");
    if (!(delta > 0.0)) throw DomainError("renewal_split: delta must be positive");
    const WalkSpec spec_z_full = WalkSpec::killed(spec_z.measure);
    if (!spec_z_full.in_state_space(x) || !spec_z_full.in_state_space(xp)) {
        throw DomainError("renewal_split: x and x' must lie in the positive orthant");
    }
    const WalkSpec spec_l(spec_z.measure, lambda);

    Point plo = box.lo();
    for (auto& v : plo) v = std::max<std::int64_t>(v, 1);
    const Box box_plus(plo, box.hi());
    if (!box_plus.contains(x) || !box_plus.contains(xp)) throw DomainError("renewal_split: box must contain x and x'");

    const AbsorbingSystem sys_l(spec_l, box, opt);
    const AbsorbingSystem sys_z(spec_z_full, box_plus, opt);
    const Eigen::VectorXd col_l = sys_l.green_column(xp);
    const Eigen::VectorXd col_z = sys_z.green_column(xp);
    const double radius = delta * euclidean_norm(xp);

    auto g_lambda = [&](const Point& w) {
        const auto k = sys_l.state_index(w);
        return k < 0 ? 0.0 : col_l[k];
    };
    // Exits of the fully killed walk with all Lambda coordinates still positive.
    auto lambda_alive = [&](const Point& w) {
        for (int i : lambda.elements()) {
            if (w[static_cast<std::size_t>(i)] <= 0) return false;
        }
        return true;
    };
    const Eigen::VectorXd near = sys_z.solve(sys_z.exit_rhs([&](const Point& w, ExitKind kind) {
        if (kind != ExitKind::Killed || !lambda_alive(w)) return 0.0;
        return euclidean_norm(w) < radius ? g_lambda(w) : 0.0;
    }));
    const Eigen::VectorXd far = sys_z.solve(sys_z.exit_rhs([&](const Point& w, ExitKind kind) {
        if (kind != ExitKind::Killed || !lambda_alive(w)) return 0.0;
        return euclidean_norm(w) >= radius ? g_lambda(w) : 0.0;
    }));
    const Eigen::VectorXd esc = escape_probabilities(sys_z);

    const auto kx = sys_z.state_index(x);
    RenewalSplit out;
    out.delta = delta;
    out.green_lambda = g_lambda(x);
    out.green = col_z[kx];
    out.main = out.green_lambda - near[kx];
    out.remainder = far[kx];
    out.escape_probability = esc[kx];
    out.relative_error = std::max(target_error_bound(sys_z, x, xp) / out.green,
                                  target_error_bound(sys_l, x, xp) / out.green_lambda);
    if (!(out.relative_error <= error_tol)) {
        Point hi = box.hi(), lo = box.lo();
        for (int i = 0; i < d; ++i) {
            const auto ii = static_cast<std::size_t>(i);
            hi[ii] = x[ii] + 2 * (hi[ii] - x[ii]);
            if (!lambda.contains(i)) lo[ii] = std::min<std::int64_t>(lo[ii] * 2, lo[ii]);
        }
        throw DomainError("renewal_split: truncation bound " + std::to_string(out.relative_error) +
                          " exceeds tolerance; try box " + Box(lo, hi).to_string());
    }
    return out;
}

void write_green_csv(std::ostream& out, const GreenTable& table) {
    out << "# spec_hash=" << table.spec.hash() << " box=" << table.box.to_string() << " source="
        << to_string(table.source) << " trunc_error=" << table.trunc_error
        << " certified=" << (table.certified ? 1 : 0) << '\n';
    for (int i = 0; i < table.box.dim(); ++i) out << 'x' << (i + 1) << ',';
    out << "value\n";
    out.precision(17);
    for (std::int64_t k = 0; k < table.box.volume(); ++k) {
        const Point y = table.box.point(k);
        if (!table.spec.in_state_space(y)) continue;
        for (auto c : y) out << c << ',';
        out << table.values[k] << '\n';
    }
}

}  // namespace martin
