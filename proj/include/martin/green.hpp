#ifndef MARTIN_GREEN_HPP
#define MARTIN_GREEN_HPP

#include "martin/absorbing.hpp"
#include "martin/genfun.hpp"

#include <iosfwd>
#include <utility>

namespace martin {

/**
 * Upper bound on G_S(0, 0) for the free walk: P(S(t) = 0) <= phi(a)^t for
 * every a, so G_S(0, 0) <= 1 / (1 - min phi). Infinite for zero-mean measures.
 * By the Harnack argument it also bounds G_Lambda(x, x') e^{a.(x' - x)} for
 * every a in D and every kill set.
 */
double free_green_bound(const JumpMeasure& measure);

/// Row x -> G_Lambda(x, .) on a box, with a truncation certificate.
struct GreenTable {
    WalkSpec spec;
    Box box;
    Point source;
    Eigen::VectorXd values;  // indexed by box index; 0 off the state space
    double escape_probability = 0.0;  // P_x(leave the box before being killed)
    double green_cap = 0.0;           // bound on sup_y G(y, y)
    bool certified = false;
    double trunc_error = 0.0;         // escape_probability * green_cap

    double value(const Point& y) const;
};

GreenTable green_table(const WalkSpec& spec, const Point& x, const Box& box, const SolverOptions& opt = {});

/**
 * Certified bound on G(x, y) - G_box(x, y) for one target:
 * P_x(escape) * G_box(y, y) / (1 - P_y(escape)). Infinite when P_y(escape) = 1.
 */
double target_error_bound(const AbsorbingSystem& sys, const Point& x, const Point& y);

/// Probability of leaving the box before being killed, for every state.
Eigen::VectorXd escape_probabilities(const AbsorbingSystem& sys);

struct OracleResult {
    double value = 0.0;     // sum_{t <= T} P_x(S(t) = x', tau_Lambda > t), up to dropped mass
    double dropped = 0.0;   // total mass discarded by pruning
    bool partial = false;   // memory budget hit; value covers fewer steps
    std::int64_t steps = 0;
};

/**
 * Forward dynamic programme over the distribution of the walk; an
 * independent lower bound on G_Lambda(x, x'). Cells holding less than
 * `prune` mass are dropped and counted in `dropped`.
 */
OracleResult green_oracle(const WalkSpec& spec, const Point& x, const Point& xp, std::int64_t horizon,
                          double prune = 1e-20, std::int64_t max_cells = 50'000'000);

/// Exponential change of measure p_a(z) = mu(z) e^{a.z}; a must lie on the boundary of D.
WalkSpec twist(const WalkSpec& spec, const Vector& a);

/// Largest |G_a(x, x') - e^{a.(x' - x)} G(x, x')| / G_a(x, x') over the given pairs.
double check_twist_identity(const WalkSpec& spec, const Vector& a,
                            const std::vector<std::pair<Point, Point>>& pairs, const Box& box,
                            const SolverOptions& opt = {});

struct RenewalSplit {
    double main = 0.0;
    double remainder = 0.0;
    double green = 0.0;          // G(x, x') of the fully killed walk on the same box
    double green_lambda = 0.0;   // G_Lambda(x, x')
    double delta = 0.0;
    double escape_probability = 0.0;  // of the fully killed walk from x
    double relative_error = 0.0;      // truncation bound on both Green values, relative
};

/**
 * Split of G_Lambda(x, x') - E_x[G_Lambda(S(tau), x'); tau < tau_Lambda] by
 * whether |S(tau)| < delta |x'|. `box` is the window for the Lambda-killed walk;
 * its lower bounds on coordinates outside Lambda may be negative. The fully
 * killed walk lives on box ∩ Z^d_+. Throws DomainError when the relative truncation
 * bound on G(x, x') or G_Lambda(x, x') exceeds `error_tol`.
 */
RenewalSplit renewal_split(const WalkSpec& spec_z, const CoordSet& lambda, const Point& x, const Point& xp,
                           double delta, const Box& box, double error_tol = 0.05,
                           const SolverOptions& opt = {});

/// CSV with a header recording the spec hash, box and trunc_error.
void write_green_csv(std::ostream& out, const GreenTable& table);

}  // namespace martin

#endif  // MARTIN_GREEN_HPP
