#ifndef MARTIN_HARMONIC_HPP
#define MARTIN_HARMONIC_HPP

#include "martin/absorbing.hpp"
#include "martin/box.hpp"
#include "martin/lattice.hpp"

#include <functional>
#include <iosfwd>
#include <string>

namespace martin {

enum class Construction { Factor, Survival, Exponential, ExponentialLinear, ExponentialProduct, Linear, CoordinateProduct };

std::string to_string(Construction p);

/// Harmonic function f on Z^Lambda_+ of the induced chain; argument has |Lambda| coordinates.
using InducedFactor = std::function<double(const Point&)>;

/**
 * Positive harmonic function of the killed walk, tabulated on a box.
 *
 * h = F - u where F is the explicit part and u the exit expectation computed
 * by one absorbing solve. Paths that leave the box through its upper faces
 * are dropped; `bounds` holds the expected exit reward bound carried by them,
 * so the untruncated function lies in [h - bound, h + bound].
 */
struct HarmonicFunction {
    Construction construction = Construction::Factor;
    WalkSpec spec;
    CoordSet lambda;       // coordinates carrying the factor
    Vector q;              // direction, empty when no twist direction is involved
    Vector a;              // twist a(q), zero when untwisted
    Box box;
    Box region;            // box minus one max-jump collar on the upper faces
    Eigen::VectorXd values;  // indexed by box.index
    Eigen::VectorXd bounds;

    /// h(x); 0 outside the state space; DomainError inside it but outside the box.
    double operator()(const Point& x) const;
    double error_bound(const Point& x) const;
    bool evaluable(const Point& x) const;
};

/// Product of one-dimensional harmonic factors of the Lambda(M)-marginal; constant 1 for Lambda(M) = empty.
InducedFactor zero_mean_factor(const JumpMeasure& measure, std::int64_t min_size = 256);

/**
 * h(x) = f(x^L) - E_x[f(S^L(tau)); tau < tau_L] with L = Lambda(M). f is
 * checked for harmonicity on the projection of the box.
 */
HarmonicFunction build_from_factor(const WalkSpec& spec, const InducedFactor& f, const Box& box,
                                const SolverOptions& opt = {});

/// P_x(tau = infinity) for a drift with every coordinate positive.
HarmonicFunction build_survival(const WalkSpec& spec, const Box& box, const SolverOptions& opt = {});

/// x^i - E_x S^i(tau) when exactly one mean coordinate i vanishes.
HarmonicFunction build_linear(const WalkSpec& spec, const Box& box, const SolverOptions& opt = {});

/// prod_{i in L} x^i - E_x[prod S^i(tau)] for L = Lambda(M) under axis jumps on L.
HarmonicFunction build_coordinate_product(const WalkSpec& spec, const Box& box, const SolverOptions& opt = {});

/**
 * h_q(x) = e^{a.x} prod_{i in Lambda(q)} x^i - E_x[e^{a.S(tau)} prod S^i(tau); tau < inf]
 * with a = a(q), dispatched on |Lambda(q)|.
 */
HarmonicFunction build_directional(const WalkSpec& spec, const Vector& q, const Box& box,
                                 const SolverOptions& opt = {});

/**
 * Same function through the a(q)-twisted walk: e^{a.x} times the factor-built
 * function of the twisted walk with L = Lambda(q). Agrees with
 * build_directional up to the overshoot correction of the factor, which
 * vanishes for nearest-neighbour steps.
 */
HarmonicFunction build_directional_via_twist(const WalkSpec& spec, const Vector& q, const Box& box,
                                           const SolverOptions& opt = {});

/// Max over region of |sum_{x' in state space} mu(x' - x) h(x') - h(x)| / (1 + |h(x)|).
double verify_harmonic(const std::function<double(const Point&)>& h, const WalkSpec& spec, const Box& region);
/// As above; the region plus one collar must lie in h's box.
double verify_harmonic(const HarmonicFunction& h, const WalkSpec& spec, const Box& region);

double verify_positive(const std::function<double(const Point&)>& h, const Box& region);
double verify_positive(const HarmonicFunction& h, const Box& region);

/// Header line with the construction and box, then columns x1..xd, h, error_bound over the verified region.
void write_harmonic_csv(std::ostream& out, const HarmonicFunction& h);

}  // namespace martin

#endif  // MARTIN_HARMONIC_HPP
