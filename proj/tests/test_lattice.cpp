#include "common.hpp"

#include "martin/lattice.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace martin;
using namespace testing_support;

TEST(CoordSet, BasicsAndLabels) {
    const auto s = CoordSet::of(3, {0, 2});
    EXPECT_EQ(s.size(), 2);
    EXPECT_TRUE(s.contains(2));
    EXPECT_FALSE(s.contains(1));
    EXPECT_EQ(s.to_string(), "{1,3}");
    EXPECT_EQ(s.complement(), CoordSet::of(3, {1}));
    EXPECT_TRUE(CoordSet::all(3).is_full());
    EXPECT_EQ(CoordSet::all_subsets(3).size(), 8u);
}

TEST(CoordSet, ZeroCoordinates) {
    Vector q(3);
    q << 0.5, 1e-13, 0.0;
    EXPECT_EQ(zero_coordinates(q), CoordSet::of(3, {1, 2}));
}

TEST(JumpMeasure, MeansOfExampleMeasures) {
    EXPECT_NEAR(e1().mean()[0], 0.1, 1e-15);
    EXPECT_NEAR(e1().mean()[1], 0.1, 1e-15);
    EXPECT_NEAR(e2().mean()[0], 0.1, 1e-15);
    EXPECT_NEAR(e2().mean()[1], 0.0, 1e-15);
    const JumpMeasure point(2, {{{1, 2}, 1.0}});
    EXPECT_EQ(point.mean()[0], 1.0);
    EXPECT_EQ(point.mean()[1], 2.0);
}

TEST(JumpMeasure, RejectsBadInput) {
    EXPECT_THROW(JumpMeasure(2, {{{1, 0}, 0.5}, {{-1, 0}, 0.4}}), ValidationError);
    EXPECT_THROW(JumpMeasure(1, {{{1}, 0.5}, {{1}, 0.5}}), ValidationError);
    EXPECT_THROW(JumpMeasure(1, {{{1}, 1.2}, {{-1}, -0.2}}), ValidationError);
    EXPECT_THROW(JumpMeasure(0, {}), ValidationError);
    EXPECT_THROW(JumpMeasure(2, {{{1}, 1.0}}), ValidationError);
}

TEST(JumpMeasure, MassAndMeanInvariantsOnRandomMeasures) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> jump(-3, 3);
    std::uniform_real_distribution<double> w(0.1, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        const int d = 1 + rep % 3;
        std::vector<Atom> atoms;
        double total = 0.0;
        for (int k = 0; k < 6; ++k) {
            Point z(static_cast<std::size_t>(d));
            for (auto& c : z) c = jump(rng);
            bool dup = false;
            for (const auto& a : atoms) dup = dup || a.z == z;
            if (dup) continue;
            atoms.push_back({z, w(rng)});
            total += atoms.back().p;
        }
        for (auto& a : atoms) a.p /= total;
        const JumpMeasure m(d, atoms);
        double mass = 0.0;
        Vector mean = Vector::Zero(d);
        for (const auto& a : m.atoms()) {
            mass += a.p;
            for (int i = 0; i < d; ++i) mean[i] += a.p * static_cast<double>(a.z[static_cast<std::size_t>(i)]);
        }
        EXPECT_NEAR(mass, 1.0, 1e-12);
        EXPECT_LE((mean - m.mean()).norm(), 1e-12);
        for (const auto& lam : CoordSet::all_subsets(d)) {
            if (lam.empty()) continue;
            const auto marg = marginal_measure(m, lam);
            const auto el = lam.elements();
            for (std::size_t j = 0; j < el.size(); ++j) {
                EXPECT_NEAR(marg.mean()[static_cast<Eigen::Index>(j)], m.mean()[el[j]], 1e-12);
            }
        }
    }
}

TEST(Validate, ExampleMeasures) {
    const auto r1 = validate(e1());
    EXPECT_TRUE(r1.nonzero_mean);
    EXPECT_TRUE(r1.axis_jumps);
    EXPECT_TRUE(r1.lambda_of_mean.empty());
    EXPECT_TRUE(r1.irreducible);
    EXPECT_TRUE(r1.standing_assumptions());

    const auto r2 = validate(e2());
    EXPECT_EQ(r2.lambda_of_mean, CoordSet::of(2, {1}));
    EXPECT_TRUE(r2.axis_jumps_on_zero_mean);

    const auto r0 = validate(srw2());
    EXPECT_FALSE(r0.nonzero_mean);
    EXPECT_FALSE(r0.standing_assumptions());
}

TEST(Validate, DetectsReducibleWalk) {
    // only up-right moves: nothing returns towards the corner
    const JumpMeasure m(2, {{{1, 0}, 0.5}, {{0, 1}, 0.5}});
    EXPECT_FALSE(validate(m).irreducible);
}

TEST(Marginal, ExampleMarginals) {
    const auto m2 = marginal_measure(e2(), CoordSet::of(2, {1}));
    EXPECT_NEAR(m2.probability({1}), 0.25, 1e-15);
    EXPECT_NEAR(m2.probability({-1}), 0.25, 1e-15);
    EXPECT_NEAR(m2.probability({0}), 0.5, 1e-15);
    const auto m1 = marginal_measure(e1(), CoordSet::of(2, {0}));
    EXPECT_NEAR(m1.probability({1}), 0.3, 1e-15);
    EXPECT_NEAR(m1.probability({-1}), 0.2, 1e-15);
    EXPECT_NEAR(m1.probability({0}), 0.5, 1e-15);
    const auto full = marginal_measure(e1(), CoordSet::all(2));
    EXPECT_EQ(full.support_size(), e1().support_size());
    EXPECT_THROW(marginal_measure(e1(), CoordSet::none(2)), ValidationError);
}

namespace {

void expect_valid_path(const WalkSpec& spec, const Point& x, const Point& xp, const std::vector<Point>& steps) {
    Point s = x;
    for (const auto& z : steps) {
        EXPECT_GT(spec.measure.probability(z), 0.0);
        for (std::size_t i = 0; i < s.size(); ++i) s[i] += z[i];
        EXPECT_TRUE(spec.in_state_space(s)) << to_string(s);
    }
    EXPECT_EQ(s, xp);
}

}  // namespace

TEST(CommunicationPath, Examples) {
    const auto spec = WalkSpec::killed(e1());
    const auto p = communication_path(spec, {1, 1}, {3, 1});
    ASSERT_TRUE(p.has_value());
    EXPECT_EQ(p->size(), 2u);
    expect_valid_path(spec, {1, 1}, {3, 1}, *p);

    const auto same = communication_path(spec, {4, 2}, {4, 2});
    ASSERT_TRUE(same.has_value());
    EXPECT_TRUE(same->empty());

    const auto spec2 = WalkSpec::killed(e2());
    const auto c = validate(e2()).communication_constant;
    const auto q = communication_path(spec2, {1, 1}, {1, 3});
    ASSERT_TRUE(q.has_value());
    expect_valid_path(spec2, {1, 1}, {1, 3}, *q);
    EXPECT_LE(static_cast<double>(q->size()), c * 2.0 + 1e-12);

    EXPECT_THROW(communication_path(spec, {0, 1}, {1, 1}), DomainError);
}

TEST(CommunicationPath, RandomPairsStayInStateSpace) {
    const JumpMeasure m(2, {{{2, 0}, 0.2}, {{-1, 0}, 0.3}, {{0, 1}, 0.2}, {{1, -1}, 0.3}});
    const auto spec = WalkSpec::killed(m);
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> c(1, 8);
    for (int rep = 0; rep < 30; ++rep) {
        const Point x{c(rng), c(rng)}, y{c(rng), c(rng)};
        const auto p = communication_path(spec, x, y);
        ASSERT_TRUE(p.has_value());
        expect_valid_path(spec, x, y, *p);
    }
}

TEST(MeasureFile, RoundTripAndErrors) {
    std::stringstream ss;
    write_measure(ss, e2());
    const auto back = read_measure(ss);
    ASSERT_EQ(back.support_size(), e2().support_size());
    for (std::size_t k = 0; k < back.atoms().size(); ++k) {
        EXPECT_EQ(back.atoms()[k].z, e2().atoms()[k].z);
        EXPECT_EQ(back.atoms()[k].p, e2().atoms()[k].p);
    }
    std::istringstream dup("dim 1\n1 0.5\n1 0.5\n");
    EXPECT_THROW(read_measure(dup), ValidationError);
    std::istringstream nohead("1 0.5\n-1 0.5\n");
    EXPECT_THROW(read_measure(nohead), ValidationError);
    const auto e1f = load_measure(data_path("measures/e1.txt"));
    EXPECT_EQ(e1f.hash(), e1().hash());
}

TEST(WalkSpec, StateSpace) {
    const WalkSpec z = WalkSpec::killed(e1());
    const WalkSpec s = WalkSpec::free(e1());
    const WalkSpec l(e1(), CoordSet::of(2, {1}));
    EXPECT_TRUE(z.in_state_space({1, 1}));
    EXPECT_FALSE(z.in_state_space({0, 1}));
    EXPECT_TRUE(s.in_state_space({-5, -5}));
    EXPECT_TRUE(l.in_state_space({-5, 1}));
    EXPECT_FALSE(l.in_state_space({5, 0}));
}
