#ifndef MARTIN_GENFUN_HPP
#define MARTIN_GENFUN_HPP

#include "martin/lattice.hpp"

#include <limits>
#include <utility>
#include <vector>

namespace martin {

struct GenFunOptions {
    double phi_tol = 1e-10;
    double dir_tol = 1e-8;
    int max_iter = 200;
};

/// Jump generating function phi(a) = sum mu(z) e^{a.z} of a finite measure.
class GenFun {
public:
    explicit GenFun(JumpMeasure measure);

    const JumpMeasure& measure() const { return measure_; }
    int dim() const { return measure_.dim(); }

    double phi(const Vector& a) const;
    Vector grad(const Vector& a) const;
    Eigen::MatrixXd hessian(const Vector& a) const;

private:
    JumpMeasure measure_;
    Eigen::MatrixXd jumps_;  // d x n, one column per atom
    Eigen::VectorXd probs_;
};

struct DirectionSolve {
    Vector q;
    Vector a;
    double scale = 0.0;  // s with grad phi(a) = s q
    double residual_phi = 0.0;
    double residual_dir = 0.0;
};

/**
 * The point a(q) of the boundary of D = {phi <= 1} where grad phi is
 * parallel to q. For zero-mean measures D = {0} and a(q) = 0.
 */
DirectionSolve solve_direction(const GenFun& gf, const Vector& q, const GenFunOptions& opt = {});

struct LegendreResult {
    double value = 0.0;
    bool boundary = false;  // v on the boundary of the support hull; value is a limit
    bool outside = false;   // v outside the hull; value is +infinity
    Vector argmax;
};

/// Convex conjugate (log phi)^*(v) = sup_a (a.v - log phi(a)).
LegendreResult legendre(const GenFun& gf, const Vector& v);

/// sup over D of a.(q - q'), zero when q = q'.
double quasipotential(const GenFun& gf, const Vector& q, const Vector& qp,
                      const GenFunOptions& opt = {});

struct Breakpoint {
    double t = 0.0;
    Vector x;
};

/**
 * Rate functional of a piecewise-linear path: sum of dt * (log phi)^*(slope)
 * over segments, or +infinity if the path leaves {x : x^i >= 0, i in lambda}.
 */
double rate_functional(const GenFun& gf, const std::vector<Breakpoint>& path, const CoordSet& lambda);

/// (lambda(q), lambda_M(q)).
std::pair<double, double> lambda_pair(const GenFun& gf, const Vector& q, const GenFunOptions& opt = {});

/**
 * Positive root t of phi(t u) = 1 (lower end of the final bracket), so that
 * t u lies in D. Infinite when no jump has u.z > 0; zero when phi(t u) > 1
 * for every t > 0.
 */
double boundary_ray(const GenFun& gf, const Vector& u);

/**
 * Exponential tail bound sum_{|z| >= r} mu(z) <= 2d C e^{-theta r}. For finite
 * support theta = 1 and C is chosen so that the bound is at least one up to
 * the support radius; the tail vanishes beyond it.
 */
struct TailBound {
    double theta = 1.0;
    double constant = 1.0;
    double radius = 0.0;
    int dim = 1;

    double bound(double r) const;
};

TailBound tail_decay_rate(const GenFun& gf);
double exact_tail(const JumpMeasure& measure, double r);

/**
 * Sufficient epsilon for finite exponential exit moments
 * E_x[exp(eps |S(tau)|); tau < tau_Lambda], Lambda = Lambda(M), from points
 *   a_hat = -delta sum_{i not in L'} M^i e_i + sigma sum_{i in L'} e_i,
 *   a_til = -delta sum_{i not in L'} M^i e_i + sigma sum_{i in Lambda(M)} e_i
 * in the interior of D, one pair per L' with Lambda(M) in L' != full set.
 * Requires M >= 0 componentwise and M != 0.
 */
struct ExitMomentThreshold {
    double epsilon = 0.0;
    double delta = 0.0;
    double sigma = 0.0;
    CoordSet lambda;
    std::vector<std::pair<CoordSet, Vector>> hat_points;

    /// Certified bound sum_{L'} exp(a_hat . x) on the moment for eps < epsilon.
    double moment_bound(const Point& x) const;
};

ExitMomentThreshold exit_moment_threshold(const GenFun& gf);

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

}  // namespace martin

#endif  // MARTIN_GENFUN_HPP
