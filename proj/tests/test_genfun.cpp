#include "common.hpp"

#include "martin/genfun.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

using namespace martin;
using namespace testing_support;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

/// Root of g on [lo, hi] by plain bisection; g(lo) and g(hi) must differ in sign.
double bisect(const std::function<double(double)>& g, double lo, double hi) {
    const bool lo_neg = g(lo) < 0.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((g(mid) < 0.0) == lo_neg) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// sup_a a.v - log phi(a) over [-3,3]^2 by a grid, refined twice around the best cell.
double legendre_grid_2d(const GenFun& gf, const Vector& v) {
    double cx = 0.0, cy = 0.0, half = 3.0, best = -1e300;
    for (int level = 0; level < 6; ++level) {
        const int n = 120;
        const double h = 2.0 * half / n;
        double bx = cx, by = cy;
        for (int i = 0; i <= n; ++i) {
            for (int j = 0; j <= n; ++j) {
                const Vector a = vec({cx - half + i * h, cy - half + j * h});
                const double f = a.dot(v) - std::log(gf.phi(a));
                if (f > best) {
                    best = f;
                    bx = a[0];
                    by = a[1];
                }
            }
        }
        cx = bx;
        cy = by;
        half = 4.0 * h;
    }
    return best;
}

JumpMeasure random_drifted(std::mt19937_64& rng, int d) {
    std::uniform_real_distribution<double> w(0.05, 1.0);
    std::vector<Atom> atoms;
    double total = 0.0;
    for (int i = 0; i < d; ++i) {
        Point up(static_cast<std::size_t>(d), 0), down(static_cast<std::size_t>(d), 0);
        up[static_cast<std::size_t>(i)] = 1;
        down[static_cast<std::size_t>(i)] = -1;
        const double pu = w(rng), pd = 0.6 * pu * w(rng);
        atoms.push_back({up, pu});
        atoms.push_back({down, pd});
        total += pu + pd;
    }
    Point diag(static_cast<std::size_t>(d), 1);
    atoms.push_back({diag, 0.3 * w(rng)});
    total += atoms.back().p;
    Point back(static_cast<std::size_t>(d), -1);
    atoms.push_back({back, 0.1 * w(rng)});
    total += atoms.back().p;
    for (auto& a : atoms) a.p /= total;
    return JumpMeasure(d, atoms);
}

}  // namespace

TEST(Phi, ClosedForms) {
    const GenFun gf(e1());
    EXPECT_EQ(gf.phi(Vector::Zero(2)), 1.0);
    const double t = 1.0;
    EXPECT_NEAR(gf.phi(vec({t, 0})), 0.3 * std::exp(t) + 0.2 * std::exp(-t) + 0.5, 1e-15);
}

TEST(Phi, GradientMatchesMeanAndFiniteDifferences) {
    const GenFun gf(e1());
    EXPECT_NEAR((gf.grad(Vector::Zero(2)) - e1().mean()).norm(), 0.0, 1e-15);
    const JumpMeasure m(2, {{{2, -1}, 0.2}, {{-1, 0}, 0.3}, {{0, 1}, 0.4}, {{1, 1}, 0.1}});
    const GenFun g2(m);
    const Vector a = vec({0.1, -0.2});
    const Vector g = g2.grad(a);
    const double h = 1e-5;
    for (int i = 0; i < 2; ++i) {
        Vector ap = a, am = a;
        ap[i] += h;
        am[i] -= h;
        EXPECT_NEAR(g[i], (g2.phi(ap) - g2.phi(am)) / (2 * h), 1e-6);
    }
    const JumpMeasure point(2, {{{2, -3}, 1.0}});
    const Vector gp = GenFun(point).grad(Vector::Zero(2));
    EXPECT_EQ(gp[0], 2.0);
    EXPECT_EQ(gp[1], -3.0);
}

TEST(Phi, ConvexityProbe) {
    const GenFun gf(JumpMeasure(2, {{{2, -1}, 0.2}, {{-1, 0}, 0.3}, {{0, 1}, 0.4}, {{1, 1}, 0.1}}));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0), t01(0.0, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
        const Vector a = vec({u(rng), u(rng)}), b = vec({u(rng), u(rng)});
        const double t = t01(rng);
        EXPECT_LE(gf.phi(t * a + (1 - t) * b), t * gf.phi(a) + (1 - t) * gf.phi(b) + 1e-12);
    }
}

TEST(SolveDirection, MeanDirectionGivesZero) {
    const GenFun gf(e1());
    const auto s = solve_direction(gf, vec({1, 1}) / std::sqrt(2.0));
    EXPECT_LE(s.a.norm(), 1e-10);
}

TEST(SolveDirection, E1AlongFirstAxisMatchesReduction) {
    // d phi / d a2 = 0 gives a2 = ln(2/3) / 2; then phi(a1, a2) = 1 on the branch with d phi / d a1 > 0
    const double a2 = 0.5 * std::log(2.0 / 3.0);
    const double rest = 0.3 * std::exp(a2) + 0.2 * std::exp(-a2);
    const double a1 = bisect([&](double x) { return 0.3 * std::exp(x) + 0.2 * std::exp(-x) + rest - 1.0; }, 0.5 * std::log(2.0 / 3.0), 5.0);
    const GenFun gf(e1());
    const auto s = solve_direction(gf, vec({1, 0}));
    EXPECT_NEAR(s.a[0], a1, 1e-9);
    EXPECT_NEAR(s.a[1], a2, 1e-9);
    EXPECT_NEAR(a1, 0.0835, 1e-4);
    EXPECT_NEAR(a2, -0.2027, 1e-4);
    EXPECT_LE(s.residual_phi, 1e-10);
    EXPECT_LE(s.residual_dir, 1e-8);
}

TEST(SolveDirection, E2AlongSecondAxisMatchesReduction) {
    const double a1 = 0.5 * std::log(2.0 / 3.0);
    const double rest = 0.3 * std::exp(a1) + 0.2 * std::exp(-a1);
    const double a2 = bisect([&](double x) { return 0.25 * std::exp(x) + 0.25 * std::exp(-x) + rest - 1.0; }, 0.0, 5.0);
    const GenFun gf(e2());
    const auto s = solve_direction(gf, vec({0, 1}));
    EXPECT_GT(s.a[1], 0.0);
    EXPECT_NEAR(s.a[0], a1, 1e-9);
    EXPECT_NEAR(s.a[1], a2, 1e-9);
    EXPECT_NEAR(gf.phi(s.a), 1.0, 1e-10);
}

TEST(SolveDirection, RoundTripOnRandomDirections) {
    const GenFun gf(JumpMeasure(2, {{{2, -1}, 0.2}, {{-1, 0}, 0.3}, {{0, 1}, 0.4}, {{-1, -1}, 0.1}}));
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n01;
    for (int rep = 0; rep < 100; ++rep) {
        Vector q = vec({n01(rng), n01(rng)});
        q /= q.norm();
        const auto s = solve_direction(gf, q);
        const Vector g = gf.grad(s.a);
        EXPECT_LE((g / g.norm() - q).norm(), 1e-8);
        EXPECT_LE(std::abs(gf.phi(s.a) - 1.0), 1e-10);
    }
}

TEST(SolveDirection, ZeroMeanCollapsesToOrigin) {
    const auto s = solve_direction(GenFun(srw2()), vec({1, 0}));
    EXPECT_EQ(s.a.norm(), 0.0);
}

TEST(SolveDirection, RejectsNonUnitDirection) {
    EXPECT_THROW(solve_direction(GenFun(e1()), vec({1, 1})), DomainError);
}

TEST(Legendre, VanishesAtTheMean) {
    for (const auto& m : {e1(), e2(), drift1()}) {
        const auto l = legendre(GenFun(m), m.mean());
        EXPECT_LE(l.value, 1e-10);
        EXPECT_FALSE(l.boundary);
    }
}

TEST(Legendre, MatchesGridSearch) {
    const GenFun gf(e1());
    const Vector v = vec({0.3, 0.1});
    const auto l = legendre(gf, v);
    EXPECT_NEAR(l.value, legendre_grid_2d(gf, v), 1e-6);
    // duality at the optimiser
    EXPECT_LE((gf.grad(l.argmax) / gf.phi(l.argmax) - v).norm(), 1e-6);
}

TEST(Legendre, HullVertexAndOutside) {
    const GenFun gf(e1());
    const auto vertex = legendre(gf, vec({1, 0}));
    EXPECT_TRUE(vertex.boundary);
    EXPECT_NEAR(vertex.value, -std::log(0.3), 1e-6);
    const auto out = legendre(gf, vec({1, 1}));
    EXPECT_TRUE(out.outside);
    EXPECT_TRUE(std::isinf(out.value));
}

TEST(Quasipotential, Examples) {
    const GenFun gf(e1());
    const Vector zero = Vector::Zero(2);
    EXPECT_LE(std::abs(quasipotential(gf, e1().mean(), zero)), 1e-10);
    EXPECT_EQ(quasipotential(gf, vec({0.3, 0.7}), vec({0.3, 0.7})), 0.0);
    EXPECT_NEAR(quasipotential(gf, vec({1, 0}), zero), solve_direction(gf, vec({1, 0})).a[0], 1e-12);
    EXPECT_NEAR(quasipotential(gf, vec({1, 0}), zero), 0.0835, 1e-4);
}

TEST(Quasipotential, NonnegativeAndZeroOnlyAlongTheMean) {
    const GenFun gf(e1());
    const Vector zero = Vector::Zero(2);
    for (int k = 0; k < 24; ++k) {
        const double ang = 2.0 * M_PI * k / 24.0;
        const Vector p = vec({std::cos(ang), std::sin(ang)});
        const double v = quasipotential(gf, p, zero);
        EXPECT_GE(v, -1e-12);
        if (k == 3) {
            EXPECT_LE(std::abs(v), 1e-10);  // 45 degrees is the mean direction
        } else {
            EXPECT_GT(v, 1e-6);
        }
    }
}

TEST(RateFunctional, Examples) {
    const GenFun gf(e1());
    const CoordSet all = CoordSet::all(2);
    const Vector x = vec({1, 1});
    const double t_end = 5.0;
    EXPECT_LE(rate_functional(gf, {{0.0, x}, {t_end, x + t_end * e1().mean()}}, all), 1e-10);
    EXPECT_TRUE(std::isinf(rate_functional(gf, {{0.0, x}, {1.0, vec({-0.5, 1.0})}}, all)));
    // leaving along a coordinate outside Lambda is allowed
    EXPECT_TRUE(std::isfinite(rate_functional(gf, {{0.0, x}, {2.0, vec({-0.5, 1.0})}}, CoordSet::of(2, {1}))));

    const Vector v = vec({0.3, 0.1});
    const std::vector<Breakpoint> path{{0.0, x}, {2.0, x + 2.0 * v}, {5.0, x + 2.0 * v + 3.0 * e1().mean()}};
    EXPECT_NEAR(rate_functional(gf, path, all), 2.0 * legendre_grid_2d(gf, v), 1e-6);
    EXPECT_THROW(rate_functional(gf, {{1.0, x}, {1.0, x}}, all), DomainError);
}

TEST(RateFunctional, AdditiveOverConcatenation) {
    const GenFun gf(e1());
    const CoordSet all = CoordSet::all(2);
    const Breakpoint a{0.0, vec({1, 1})}, b{1.5, vec({1.2, 1.6})}, c{4.0, vec({2.5, 1.1})};
    EXPECT_EQ(rate_functional(gf, {a, b, c}, all), rate_functional(gf, {a, b}, all) + rate_functional(gf, {b, c}, all));
}

TEST(LambdaPair, Examples) {
    const GenFun gf(e1());
    const Vector m = e1().mean() / e1().mean().norm();
    EXPECT_LE(std::abs(lambda_pair(gf, m).second), 1e-10);
    EXPECT_EQ(quasipotential(gf, Vector::Zero(2), Vector::Zero(2)), 0.0);
    const auto [lam, lam_m] = lambda_pair(gf, vec({1, 0}));
    EXPECT_GT(lam, 0.0);
    EXPECT_GT(lam_m, 0.0);
    const Vector zero = Vector::Zero(2);
    const double l1 = quasipotential(gf, vec({1, 0}), zero) + quasipotential(gf, vec({-1, 0}), zero);
    const double l2 = quasipotential(gf, vec({2, 0}), zero) + quasipotential(gf, vec({-2, 0}), zero);
    EXPECT_NEAR(l2, 2.0 * l1, 1e-9);
    EXPECT_THROW(lambda_pair(GenFun(srw2()), vec({1, 0})), DomainError);
}

TEST(TailBound, DominatesExactTail) {
    const GenFun g1(e1());
    EXPECT_EQ(exact_tail(e1(), 1.5), 0.0);
    const JumpMeasure far(2, {{{3, 0}, 0.2}, {{-1, 0}, 0.5}, {{0, 1}, 0.2}, {{0, -2}, 0.1}});
    EXPECT_EQ(exact_tail(far, 4.0), 0.0);
    for (const auto& m : {e1(), far}) {
        const auto tb = tail_decay_rate(GenFun(m));
        EXPECT_GT(tb.theta, 0.0);
        for (int r = 1; r <= 6; ++r) EXPECT_GE(tb.bound(r), exact_tail(m, r));
    }
}

TEST(BoundaryRay, RootOnTheBoundary) {
    const GenFun gf(e1());
    const double t = boundary_ray(gf, vec({-1, 0}));
    EXPECT_NEAR(t, std::log(1.5), 1e-12);  // 0.3 e^{-t} + 0.2 e^{t} = 0.5
    EXPECT_LE(gf.phi(vec({-t, 0})), 1.0 + 1e-15);
    const JumpMeasure up(1, {{{1}, 0.5}, {{0}, 0.5}});
    EXPECT_TRUE(std::isinf(boundary_ray(GenFun(up), vec({-1}))));
}

TEST(ExitMoments, ThresholdPointsLieInsideD) {
    const GenFun gf(e2());
    const auto th = exit_moment_threshold(gf);
    EXPECT_GT(th.epsilon, 0.0);
    EXPECT_EQ(th.lambda, CoordSet::of(2, {1}));
    for (const auto& [lp, a] : th.hat_points) EXPECT_LT(gf.phi(a), 1.0);
    EXPECT_TRUE(std::isfinite(th.moment_bound({5, 5})));
    const JumpMeasure neg(1, {{{1}, 0.3}, {{-1}, 0.7}});
    EXPECT_THROW(exit_moment_threshold(GenFun(neg)), DomainError);
}

TEST(MeanDirection, RandomDriftedMeasures) {
    std::mt19937_64 rng(2024);
    for (int rep = 0; rep < 10; ++rep) {
        const auto m = random_drifted(rng, 2 + rep % 2);
        const GenFun gf(m);
        const auto s = solve_direction(gf, m.mean() / m.mean().norm());
        EXPECT_LE(s.a.norm(), 1e-10);
        EXPECT_LE(legendre(gf, m.mean()).value, 1e-10);
    }
}
