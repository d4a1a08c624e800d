#include "common.hpp"

#include "martin/genfun.hpp"
#include "martin/green.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace martin;
using namespace testing_support;

namespace {

/// Green function of the +-1 walk on {1..N}, killed at 0 and N+1.
double pm1_box_green(std::int64_t x, std::int64_t y, std::int64_t n) {
    const double l = static_cast<double>(n + 1);
    const double a = static_cast<double>(std::min(x, y)), b = static_cast<double>(std::max(x, y));
    return 2.0 * a * (l - b) / l;
}

/// Green function of the nearest-neighbour walk with P(+1) = p > 1/2 on Z_+, killed at 0.
double drift1_green(std::int64_t x, std::int64_t y, double p) {
    const double q = 1.0 - p, r = q / p;
    auto reach_before_zero = [&](std::int64_t from, std::int64_t to) {  // from < to
        return (1.0 - std::pow(r, static_cast<double>(from))) / (1.0 - std::pow(r, static_cast<double>(to)));
    };
    const double ret = p * r + (y > 1 ? q * reach_before_zero(y - 1, y) : 0.0);
    const double gyy = 1.0 / (1.0 - ret);
    if (x == y) return gyy;
    if (x < y) return reach_before_zero(x, y) * gyy;
    return std::pow(r, static_cast<double>(x - y)) * gyy;
}

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

}  // namespace

TEST(Green, SymmetricWalkOnAnIntervalIsExact) {
    const WalkSpec spec = WalkSpec::killed(pm1());
    const std::int64_t n = 400;
    const auto t = green_table(spec, {3}, Box::cube(1, 1, n));
    for (std::int64_t y : {1, 2, 3, 7, 100, 400}) EXPECT_NEAR(t.value({y}), pm1_box_green(3, y, n), 1e-9);
    EXPECT_EQ(t.value({0}), 0.0);
    EXPECT_NEAR(pm1_box_green(1, 1, 1'000'000), 2.0, 1e-5);
    EXPECT_NEAR(pm1_box_green(2, 3, 1'000'000), 4.0, 2e-5);
    EXPECT_FALSE(t.certified);  // zero mean: no uniform bound on G(y, y)
}

TEST(Green, DriftedWalkMatchesRenewalFormula) {
    const WalkSpec spec = WalkSpec::killed(drift1());
    const AbsorbingSystem sys(spec, Box::cube(1, 1, 300));
    const Eigen::VectorXd row = sys.green_row({4});
    for (std::int64_t y : {1, 2, 4, 5, 9, 50}) {
        const double bound = target_error_bound(sys, {4}, {y});
        EXPECT_LE(bound, 1e-12);
        EXPECT_NEAR(row[sys.state_index({y})], drift1_green(4, y, 0.6), 1e-10 + bound);
    }
    // the walk drifts away from the wall, so the uniform certificate is loose
    const auto t = green_table(spec, {4}, Box::cube(1, 1, 300));
    EXPECT_TRUE(t.certified);
    EXPECT_GT(t.trunc_error, 1.0);
    EXPECT_NEAR(drift1_green(1, 1, 0.6), 1.0 / (1.0 - 0.4), 1e-15);
}

TEST(Green, FreeBoundClosedForm) {
    // min phi for E1 is 2 sqrt(.06) per axis
    EXPECT_NEAR(free_green_bound(e1()), 1.0 / (1.0 - 4.0 * std::sqrt(0.06)), 1e-9);
    EXPECT_TRUE(std::isinf(free_green_bound(srw2())));
    EXPECT_NEAR(free_green_bound(drift1()), 1.0 / (1.0 - 2.0 * std::sqrt(0.24)), 1e-9);
}

TEST(Green, DiagonalAtLeastOneAndBelowTheCap) {
    const WalkSpec spec = WalkSpec::killed(e1());
    const AbsorbingSystem sys(spec, Box::cube(2, 1, 40));
    const double cap = free_green_bound(e1());
    for (const Point& y : std::vector<Point>{{1, 1}, {3, 7}, {10, 10}, {20, 5}}) {
        const double g = sys.green_column(y)[sys.state_index(y)];
        EXPECT_GE(g, 1.0);
        EXPECT_LE(g, cap);
    }
}

TEST(Green, HarnackBoundWithTiltedWeights) {
    const WalkSpec spec = WalkSpec::killed(e1());
    const GenFun gf(e1());
    const double cap = free_green_bound(e1());
    const AbsorbingSystem sys(spec, Box::cube(2, 1, 40));
    const Point x{2, 3};
    const Eigen::VectorXd row = sys.green_row(x);
    for (const Vector& q : {vec({1, 0}), vec({0, 1}), vec({0.6, 0.8})}) {
        const Vector a = solve_direction(gf, q).a;
        for (std::int64_t k = 0; k < sys.size(); ++k) {
            const Point& y = sys.state(k);
            const double w = std::exp(a[0] * static_cast<double>(y[0] - x[0]) + a[1] * static_cast<double>(y[1] - x[1]));
            EXPECT_LE(row[k] * w, cap * (1 + 1e-12));
        }
    }
}

TEST(Green, TruncationErrorShrinksWithTheBox) {
    const WalkSpec spec = WalkSpec::killed(e1());
    double prev = std::numeric_limits<double>::infinity();
    for (std::int64_t side : {10, 20, 40}) {
        const auto t = green_table(spec, {2, 2}, Box::cube(2, 1, side));
        EXPECT_TRUE(t.certified);
        EXPECT_LT(t.trunc_error, prev);
        prev = t.trunc_error;
    }
}

TEST(Green, BoxValuesIncreaseTowardsTheLimit) {
    const WalkSpec spec = WalkSpec::killed(e1());
    const Point x{2, 2}, y{5, 4};
    const auto small = green_table(spec, x, Box::cube(2, 1, 15));
    const auto large = green_table(spec, x, Box::cube(2, 1, 45));
    EXPECT_LE(small.value(y), large.value(y) + 1e-14);
    EXPECT_LE(large.value(y) - small.value(y), small.trunc_error + 1e-14);
}

TEST(Green, OracleIsALowerBoundAndConverges) {
    const WalkSpec spec = WalkSpec::killed(drift1());
    const double exact = drift1_green(2, 3, 0.6);
    const auto short_run = green_oracle(spec, {2}, {3}, 20);
    const auto long_run = green_oracle(spec, {2}, {3}, 2000);
    EXPECT_LE(short_run.value, long_run.value);
    EXPECT_LE(long_run.value, exact + 1e-12);
    EXPECT_NEAR(long_run.value, exact, 1e-9);
    EXPECT_EQ(green_oracle(spec, {2}, {2}, 0).value, 1.0);
    EXPECT_EQ(green_oracle(spec, {2}, {3}, 0).value, 0.0);
    EXPECT_EQ(green_oracle(spec, {2}, {5}, 2).value, 0.0);
}

TEST(Green, OracleAgreesWithTheSolverIn2d) {
    const WalkSpec spec = WalkSpec::killed(e1());
    const auto t = green_table(spec, {2, 3}, Box::cube(2, 1, 60));
    const auto o = green_oracle(spec, {2, 3}, {4, 4}, 3000);
    EXPECT_LE(o.value, t.value({4, 4}) + t.trunc_error + 1e-12);
    EXPECT_NEAR(o.value, t.value({4, 4}), 1e-6 + t.trunc_error);
}

TEST(Green, LargerKillSetMeansSmallerGreen) {
    const JumpMeasure m = e1();
    const Box box({-40, -40}, {60, 60});
    const Point x{2, 3}, y{6, 5};
    auto g = [&](const CoordSet& kill) {
        const AbsorbingSystem sys(WalkSpec(m, kill), box);
        return sys.green_column(y)[sys.state_index(x)];
    };
    const double none = g(CoordSet::none(2)), one = g(CoordSet::of(2, {0})), two = g(CoordSet::of(2, {1})),
                 both = g(CoordSet::all(2));
    EXPECT_LE(both, one);
    EXPECT_LE(both, two);
    EXPECT_LE(one, none);
    EXPECT_LE(two, none);
    EXPECT_GT(both, 0.0);
}

TEST(Twist, IdentityHoldsOnABox) {
    for (const auto& m : {e1(), e2()}) {
        const GenFun gf(m);
        const WalkSpec spec = WalkSpec::killed(m);
        const std::vector<std::pair<Point, Point>> pairs{{{1, 1}, {5, 5}}, {{3, 2}, {1, 9}}, {{7, 7}, {2, 3}}};
        for (const Vector& q : {vec({1, 0}), vec({0, 1}), vec({0.8, 0.6})}) {
            const Vector a = solve_direction(gf, q).a;
            EXPECT_LE(check_twist_identity(spec, a, pairs, Box::cube(2, 1, 30)), 1e-10);
        }
    }
}

TEST(Twist, RejectsPointsOffTheBoundary) {
    EXPECT_THROW(twist(WalkSpec::killed(e1()), vec({0.5, 0.5})), DomainError);
    const WalkSpec t = twist(WalkSpec::killed(e1()), Vector::Zero(2));
    EXPECT_EQ(t.measure.hash(), e1().hash());
}

TEST(Twist, TwistedMeasureIsAProbability) {
    const GenFun gf(e1());
    const Vector a = solve_direction(gf, vec({0, 1})).a;
    const WalkSpec t = twist(WalkSpec::killed(e1()), a);
    double total = 0.0;
    for (const auto& atom : t.measure.atoms()) total += atom.p;
    EXPECT_NEAR(total, 1.0, 1e-12);
    // the twisted mean points along the requested direction
    EXPECT_NEAR(t.measure.mean()[0], 0.0, 1e-9);
    EXPECT_GT(t.measure.mean()[1], 0.0);
}

TEST(Renewal, SplitAddsUpToTheKilledGreen) {
    const WalkSpec spec = WalkSpec::killed(e2());
    const CoordSet lambda = CoordSet::of(2, {1});
    const Box box({-30, 1}, {70, 70});
    // the identity is exact on the box whatever the escape mass
    for (double delta : {0.25, 0.5, 1.0}) {
        const auto r = renewal_split(spec, lambda, {2, 3}, {20, 5}, delta, box, 1.0);
        EXPECT_NEAR(r.main - r.remainder, r.green, 1e-10 * r.green_lambda);
        EXPECT_GE(r.remainder, 0.0);
        EXPECT_LE(r.green, r.green_lambda);
    }
    // a huge cut leaves no far exits
    EXPECT_EQ(renewal_split(spec, lambda, {2, 3}, {20, 5}, 1e6, box, 1.0).remainder, 0.0);
}

TEST(Renewal, RejectsBadInput) {
    const WalkSpec spec = WalkSpec::killed(e2());
    const CoordSet lambda = CoordSet::of(2, {1});
    EXPECT_THROW(renewal_split(spec, lambda, {0, 3}, {5, 5}, 0.5, Box({-10, 1}, {30, 30})), DomainError);
    EXPECT_THROW(renewal_split(spec, lambda, {2, 3}, {5, 5}, 0.0, Box({-10, 1}, {30, 30})), DomainError);
    // a window too small to hold the walk
    EXPECT_THROW(renewal_split(spec, lambda, {2, 3}, {5, 5}, 0.5, Box({-2, 1}, {8, 8})), DomainError);
}

TEST(Green, CsvHeaderRecordsTheCertificate) {
    const auto t = green_table(WalkSpec::killed(drift1()), {2}, Box::cube(1, 1, 50));
    std::ostringstream os;
    write_green_csv(os, t);
    const std::string s = os.str();
    EXPECT_NE(s.find("trunc_error="), std::string::npos);
    EXPECT_NE(s.find("certified=1"), std::string::npos);
    EXPECT_NE(s.find("x1,value\n"), std::string::npos);
}
