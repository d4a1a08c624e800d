#include "martin/harmonic.hpp"

#include "martin/genfun.hpp"
#include "martin/green.hpp"
#include "martin/induced.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace martin {

std::string to_string(Construction p) {
    switch (p) {
        case Construction::Factor: return "factor";
        case Construction::Survival: return "survival";
        case Construction::Exponential: return "exponential";
        case Construction::ExponentialLinear: return "exponential_linear";
        case Construction::ExponentialProduct: return "exponential_product";
        case Construction::Linear: return "linear";
        case Construction::CoordinateProduct: return "coordinate_product";
    }
    return "?";
}

bool HarmonicFunction::evaluable(const Point& x) const {
    return !spec.in_state_space(x) || box.contains(x);
}

double HarmonicFunction::operator()(const Point& x) const {
    if (!spec.in_state_space(x)) return 0.0;
    if (!box.contains(x)) throw DomainError("harmonic function: " + to_string(x) + " lies outside " + box.to_string());
    return values[box.index(x)];
}

double HarmonicFunction::error_bound(const Point& x) const {
    if (!spec.in_state_space(x)) return 0.0;
    if (!box.contains(x)) throw DomainError("harmonic function: " + to_string(x) + " lies outside " + box.to_string());
    return bounds[box.index(x)];
}

namespace {

using PointFn = std::function<double(const Point&)>;

void require_killed_box(const WalkSpec& spec, const Box& box) {
    if (spec.kill_set != CoordSet::all(spec.dim())) throw DomainError("harmonic builder: the walk must be killed on every coordinate");
    if (box.dim() != spec.dim()) throw DomainError("harmonic builder: box dimension mismatch");
    for (auto l : box.lo()) {
        if (l != 1) throw DomainError("harmonic builder: the box must start at 1 in every coordinate");
    }
    if (box.empty()) throw DomainError("harmonic builder: empty box");
}

Point project(const Point& x, const CoordSet& lambda) {
    Point u;
    for (int i : lambda.elements()) u.push_back(x[static_cast<std::size_t>(i)]);
    return u;
}

bool lambda_positive(const Point& w, const CoordSet& lambda) {
    for (int i : lambda.elements()) {
        if (w[static_cast<std::size_t>(i)] <= 0) return false;
    }
    return true;
}

/// values = F - E[R(S(tau)); killed in box], bounds = E[B(S(sigma)); escaped].
HarmonicFunction assemble(const WalkSpec& spec, const Box& box, const PointFn& F, const PointFn& R, const PointFn& B,
                          const SolverOptions& opt) {
    const AbsorbingSystem sys(spec, box, opt);
    const Eigen::VectorXd u = sys.solve(sys.exit_rhs([&](const Point& w, ExitKind k) {
        return k == ExitKind::Killed ? R(w) : 0.0;
    }));
    const Eigen::VectorXd e = sys.solve(sys.exit_rhs([&](const Point& w, ExitKind k) {
        return k == ExitKind::Escaped ? std::abs(B(w)) : 0.0;
    }));
    HarmonicFunction h;
    h.spec = spec;
    h.box = box;
    h.region = box.shrink_high(spec.measure.max_jump_coordinate());
    h.values = Eigen::VectorXd::Zero(box.volume());
    h.bounds = Eigen::VectorXd::Zero(box.volume());
    h.a = Vector::Zero(spec.dim());
    for (std::int64_t k = 0; k < sys.size(); ++k) {
        const Point& x = sys.state(k);
        const auto b = box.index(x);
        h.values[b] = F(x) - u[k];
        h.bounds[b] = std::abs(e[k]);
    }
    return h;
}

void check_factor(const JumpMeasure& marginal, const InducedFactor& f, const Box& box, const CoordSet& lambda) {
    const int m = static_cast<int>(lambda.size());
    if (m == 0) return;
    Point lo(static_cast<std::size_t>(m), 1), hi;
    for (int i : lambda.elements()) hi.push_back(box.hi()[static_cast<std::size_t>(i)]);
    const Box proj(lo, hi);
    double worst = 0.0;
    Point v(static_cast<std::size_t>(m));
    for (std::int64_t k = 0; k < proj.volume(); ++k) {
        const Point u = proj.point(k);
        double s = 0.0;
        for (const auto& a : marginal.atoms()) {
            bool alive = true;
            for (std::size_t i = 0; i < v.size(); ++i) {
                v[i] = u[i] + a.z[i];
                alive = alive && v[i] > 0;
            }
            if (alive) s += a.p * f(v);
        }
        const double fu = f(u);
        worst = std::max(worst, std::abs(s - fu) / (1.0 + std::abs(fu)));
    }
    if (worst > 1e-8) {
        throw ValidationError("build_from_factor: f is not harmonic for the induced chain (residual " + std::to_string(worst) + ")");
    }
}

HarmonicFunction from_factor_with(const WalkSpec& spec, const CoordSet& lambda, const InducedFactor& f, const Box& box,
                               const SolverOptions& opt, const PointFn& growth) {
    const JumpMeasure marginal = lambda.empty() ? JumpMeasure() : marginal_measure(spec.measure, lambda);
    check_factor(marginal, f, box, lambda);
    auto F = [&](const Point& x) { return f(project(x, lambda)); };
    auto R = [&](const Point& w) { return lambda_positive(w, lambda) ? f(project(w, lambda)) : 0.0; };
    auto h = assemble(spec, box, F, R, growth, opt);
    h.construction = Construction::Factor;
    h.lambda = lambda;
    return h;
}

/// prod_{i in lambda} (w^i + down), an upper bound for |f(w^Lambda)| of the product factors.
PointFn shifted_product(const CoordSet& lambda, std::int64_t down) {
    return [lambda, down](const Point& w) {
        double v = 1.0;
        for (int i : lambda.elements()) v *= static_cast<double>(std::max<std::int64_t>(0, w[static_cast<std::size_t>(i)]) + down);
        return v;
    };
}

}  // namespace

InducedFactor zero_mean_factor(const JumpMeasure& measure, std::int64_t min_size) {
    const CoordSet lambda = zero_coordinates(measure.mean());
    if (lambda.empty()) return [](const Point&) { return 1.0; };
    const auto chain = induced_chain(measure, lambda);
    const auto f = product_harmonic(chain, min_size);
    return [f](const Point& u) { return f(u); };
}

HarmonicFunction build_from_factor(const WalkSpec& spec, const InducedFactor& f, const Box& box, const SolverOptions& opt) {
    require_killed_box(spec, box);
    const Vector& m = spec.measure.mean();
    for (int i = 0; i < m.size(); ++i) {
        if (m[i] < -1e-12) throw DomainError("build_from_factor: the mean must have nonnegative coordinates");
    }
    const CoordSet lambda = zero_coordinates(m);
    if (lambda == CoordSet::all(spec.dim())) throw ValidationError("build_from_factor: the mean must be nonzero");
    return from_factor_with(spec, lambda, f, box, opt,
                         [f, lambda, down = spec.measure.max_down_jump()](const Point& w) {
                             // escaped states have w^Lambda inside the orthant; f grows at most like the shifted product
                             return lambda.empty() ? std::abs(f(Point{})) : std::abs(f(project(w, lambda))) +
                                                                                  shifted_product(lambda, down)(w);
                         });
}

HarmonicFunction build_survival(const WalkSpec& spec, const Box& box, const SolverOptions& opt) {
    require_killed_box(spec, box);
    const Vector& m = spec.measure.mean();
    for (int i = 0; i < m.size(); ++i) {
        if (m[i] <= 1e-12) throw DomainError("build_survival: every mean coordinate must be positive");
    }
    const GenFun gf(spec.measure);
    std::vector<double> theta;
    for (int i = 0; i < spec.dim(); ++i) theta.push_back(boundary_ray(gf, -Vector::Unit(spec.dim(), i)));
    // P_w(tau < inf) <= sum_i exp(-theta_i w^i), theta_i > 0 the root of phi(-theta e_i) = 1
    auto B = [theta](const Point& w) {
        double s = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (std::isfinite(theta[i])) s += std::exp(-theta[i] * static_cast<double>(w[i]));
        }
        return std::min(1.0, s);
    };
    auto one = [](const Point&) { return 1.0; };
    auto h = assemble(spec, box, one, one, B, opt);
    h.construction = Construction::Survival;
    h.lambda = CoordSet::none(spec.dim());
    return h;
}

HarmonicFunction build_linear(const WalkSpec& spec, const Box& box, const SolverOptions& opt) {
    require_killed_box(spec, box);
    const CoordSet lambda = zero_coordinates(spec.measure.mean());
    if (lambda.size() != 1) throw DomainError("build_linear: exactly one mean coordinate must vanish");
    const auto i = static_cast<std::size_t>(lambda.elements().front());
    auto F = [i](const Point& x) { return static_cast<double>(x[i]); };
    auto B = [i, down = spec.measure.max_down_jump()](const Point& w) { return static_cast<double>(w[i] + down); };
    auto h = assemble(spec, box, F, F, B, opt);
    h.construction = Construction::Linear;
    h.lambda = lambda;
    return h;
}

HarmonicFunction build_coordinate_product(const WalkSpec& spec, const Box& box, const SolverOptions& opt) {
    require_killed_box(spec, box);
    const CoordSet lambda = zero_coordinates(spec.measure.mean());
    if (lambda.empty()) throw DomainError("build_coordinate_product: some mean coordinate must vanish");
    if (lambda == CoordSet::all(spec.dim())) throw ValidationError("build_coordinate_product: the mean must be nonzero");
    for (const auto& a : spec.measure.atoms()) {
        int moved = 0;
        for (int i : lambda.elements()) moved += a.z[static_cast<std::size_t>(i)] != 0 ? 1 : 0;
        if (moved > 1) throw UnsupportedError("build_coordinate_product: jump " + to_string(a.z) + " moves several zero-mean coordinates");
    }
    auto F = [lambda](const Point& x) {
        double v = 1.0;
        for (int i : lambda.elements()) v *= static_cast<double>(x[static_cast<std::size_t>(i)]);
        return v;
    };
    auto h = assemble(spec, box, F, F, shifted_product(lambda, spec.measure.max_down_jump()), opt);
    h.construction = Construction::CoordinateProduct;
    h.lambda = lambda;
    return h;
}

namespace {

struct DirectionalSetup {
    Vector q;
    Vector a;
    CoordSet lambda;
    Construction construction = Construction::Exponential;
};

DirectionalSetup directional_setup(const WalkSpec& spec, const Vector& q) {
    if (q.size() != spec.dim()) throw DomainError("build_directional: direction dimension mismatch");
    if (std::abs(q.norm() - 1.0) > 1e-9 || q.minCoeff() < -1e-12) {
        throw DomainError("build_directional: q must be a unit vector with nonnegative coordinates");
    }
    DirectionalSetup s;
    s.q = q;
    s.lambda = zero_coordinates(q);
    if (s.lambda.empty()) {
        s.construction = Construction::Exponential;
    } else if (s.lambda.size() == 1) {
        s.construction = Construction::ExponentialLinear;
    } else {
        for (const auto& at : spec.measure.atoms()) {
            const auto moved = std::count_if(at.z.begin(), at.z.end(), [](std::int64_t c) { return c != 0; });
            if (moved > 1) {
                throw UnsupportedError("build_directional: |Lambda(q)| >= 2 needs every jump along one axis; " +
                                       to_string(at.z) + " is not");
            }
        }
        s.construction = Construction::ExponentialProduct;
    }
    s.a = solve_direction(GenFun(spec.measure), q).a;
    return s;
}

}  // namespace

HarmonicFunction build_directional(const WalkSpec& spec, const Vector& q, const Box& box, const SolverOptions& opt) {
    require_killed_box(spec, box);
    const auto s = directional_setup(spec, q);
    const CoordSet lambda = s.lambda;
    const Vector a = s.a;
    auto F = [lambda, a](const Point& x) {
        double v = std::exp(dot(a, x));
        for (int i : lambda.elements()) v *= static_cast<double>(x[static_cast<std::size_t>(i)]);
        return v;
    };
    const auto shifted = shifted_product(lambda, spec.measure.max_down_jump());
    auto B = [a, shifted](const Point& w) { return std::exp(dot(a, w)) * shifted(w); };
    auto h = assemble(spec, box, F, F, B, opt);
    h.construction = s.construction;
    h.lambda = lambda;
    h.q = s.q;
    h.a = s.a;
    return h;
}

HarmonicFunction build_directional_via_twist(const WalkSpec& spec, const Vector& q, const Box& box,
                                           const SolverOptions& opt) {
    require_killed_box(spec, box);
    const auto s = directional_setup(spec, q);
    const WalkSpec tw = twist(spec, s.a);
    InducedFactor f = [](const Point&) { return 1.0; };
    if (!s.lambda.empty()) {
        std::int64_t top = 0;
        for (auto v : box.hi()) top = std::max(top, v);
        const auto chain = induced_chain(tw.measure, s.lambda);
        // twisted zero coordinates carry the direction solver's residual
        const auto pf = product_harmonic(chain, std::max<std::int64_t>(256, 4 * top), 1e-7);
        f = [pf](const Point& u) { return pf(u); };
    }
    auto h = from_factor_with(tw, s.lambda, f, box, opt, shifted_product(s.lambda, spec.measure.max_down_jump()));
    h.spec = spec;
    for (std::int64_t k = 0; k < box.volume(); ++k) {
        const double w = std::exp(dot(s.a, box.point(k)));
        h.values[k] *= w;
        h.bounds[k] *= w;
    }
    h.construction = s.construction;
    h.q = s.q;
    h.a = s.a;
    return h;
}

double verify_harmonic(const std::function<double(const Point&)>& h, const WalkSpec& spec, const Box& region) {
    if (region.empty()) throw DomainError("verify_harmonic: empty region");
    double worst = 0.0;
    Point y(static_cast<std::size_t>(spec.dim()));
    for (std::int64_t k = 0; k < region.volume(); ++k) {
        const Point x = region.point(k);
        if (!spec.in_state_space(x)) continue;
        double s = 0.0;
        for (const auto& a : spec.measure.atoms()) {
            for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] + a.z[i];
            if (spec.in_state_space(y)) s += a.p * h(y);
        }
        const double hx = h(x);
        worst = std::max(worst, std::abs(s - hx) / (1.0 + std::abs(hx)));
    }
    return worst;
}

double verify_harmonic(const HarmonicFunction& h, const WalkSpec& spec, const Box& region) {
    if (region.empty()) throw DomainError("verify_harmonic: empty region");
    const auto c = spec.measure.max_jump_coordinate();
    for (int i = 0; i < region.dim(); ++i) {
        const auto ii = static_cast<std::size_t>(i);
        if (region.hi()[ii] + c > h.box.hi()[ii] || region.lo()[ii] < h.box.lo()[ii]) {
            throw DomainError("verify_harmonic: region " + region.to_string() + " plus collar leaves " + h.box.to_string());
        }
    }
    return verify_harmonic([&h](const Point& x) { return h(x); }, spec, region);
}

double verify_positive(const std::function<double(const Point&)>& h, const Box& region) {
    double lo = kInfinity;
    for (std::int64_t k = 0; k < region.volume(); ++k) lo = std::min(lo, h(region.point(k)));
    return lo;
}

double verify_positive(const HarmonicFunction& h, const Box& region) {
    return verify_positive([&h](const Point& x) { return h(x); }, region);
}

void write_harmonic_csv(std::ostream& out, const HarmonicFunction& h) {
    out << "# construction=" << to_string(h.construction) << " spec_hash=" << h.spec.hash()
        << " box=" << h.box.to_string() << " region=" << h.region.to_string() << '\n';
    for (int i = 0; i < h.spec.dim(); ++i) out << 'x' << (i + 1) << ',';
    out << "h,error_bound\n";
    out.precision(17);
    for (std::int64_t k = 0; k < h.region.volume(); ++k) {
        const Point x = h.region.point(k);
        for (auto c : x) out << c << ',';
        out << h(x) << ',' << h.error_bound(x) << '\n';
    }
}

}  // namespace martin
