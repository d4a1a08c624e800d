#ifndef MARTIN_INDUCED_HPP
#define MARTIN_INDUCED_HPP

#include "martin/lattice.hpp"

#include <cstdint>
#include <vector>

namespace martin {

/**
 * The Lambda-marginal walk X^Lambda killed on leaving Z^Lambda_+. For an
 * empty Lambda the chain is the constant sentinel: it never moves and is
 * never killed.
 */
struct InducedChain {
    CoordSet lambda;
    JumpMeasure base;  // law on Z^|Lambda|; unset for the sentinel
    bool sentinel = false;

    int dim() const { return sentinel ? 0 : base.dim(); }
};

InducedChain induced_chain(const JumpMeasure& measure, const CoordSet& lambda);

/**
 * Harmonic function f(k) = k - E_k xi(T) of a zero-mean walk on Z killed at
 * T = inf{t : xi(t) <= 0}. Overshoot means u(k) = E_k xi(T) are tabulated for
 * k = 1..plateau_cut; beyond that the plateau value u(plateau_cut) is used.
 * f is extended by 0 to k <= 0.
 */
struct OneDimHarmonic {
    JumpMeasure nu;
    std::vector<double> table;  // table[k-1] = u(k)
    double plateau = 0.0;
    std::int64_t plateau_cut = 0;
    std::int64_t max_down = 0;
    std::int64_t max_up = 0;

    double overshoot_mean(std::int64_t k) const;
    double operator()(std::int64_t k) const;
    /// Largest k for which the tabulated harmonic equation holds exactly.
    std::int64_t validated_limit() const { return plateau_cut - max_up; }
};

/// u on {1..n} with the plateau closure u(k) = u(n) for k > n.
std::vector<double> overshoot_table(const JumpMeasure& nu, std::int64_t n);

/// E_k xi(T) with the table size doubled from 256 until the value moves by less than 1e-9.
double overshoot_mean_1d(const JumpMeasure& nu, std::int64_t k);

/**
 * Table size doubled from `min_size` until u on 1..128 moves by less than
 * 1e-10. `mean_tol` bounds the accepted |mean| of nu (twisted laws carry
 * solver noise in their zero coordinates).
 */
OneDimHarmonic harmonic_1d(const JumpMeasure& nu, std::int64_t min_size = 256, double mean_tol = 1e-12);

/// |sum_{k' > 0} nu(k' - k) f(k') - f(k)| / (1 + f(k)).
double harmonic_residual_1d(const OneDimHarmonic& f, std::int64_t k);

/**
 * f(u) = prod_i f_i(u^i) for a walk that moves one coordinate per step.
 * The factor laws are nu_i(k) = nu(k e_i) / a_i with a_i = sum_{k != 0} nu(k e_i);
 * the atom at 0 is dropped since laziness does not change harmonic functions.
 */
struct ProductHarmonic {
    std::vector<OneDimHarmonic> factors;
    std::vector<double> weights;  // a_i, summing to 1 - nu(0)

    double operator()(const Point& u) const;
};

ProductHarmonic product_harmonic(const InducedChain& chain, std::int64_t min_size = 256, double mean_tol = 1e-12);

/// Residual |sum_{u'} p_+(u, u') f(u') - f(u)| / (1 + f(u)) for the chain's kernel.
double product_residual(const InducedChain& chain, const ProductHarmonic& f, const Point& u);

struct ConvergenceNormRow {
    std::int64_t n = 0;
    double rho = 0.0;
    double lower = 0.0;  // Collatz-Wielandt bracket of the truncated matrix
    double upper = 0.0;
    std::int64_t iterations = 0;
};

/**
 * Perron root of the chain restricted to {1..n}^|Lambda| for each n, by power
 * iteration on (I + P) / 2 with sup-norm normalisation, stopped when the
 * Collatz-Wielandt bracket is narrower than `tol`.
 */
std::vector<ConvergenceNormRow> convergence_norm(const InducedChain& chain, const std::vector<std::int64_t>& sizes,
                                                 double tol = 1e-12, std::int64_t max_iter = 10'000'000);

enum class HitMethod { Exact, MonteCarlo };

struct HitResult {
    double probability = 0.0;
    double std_error = 0.0;         // Monte Carlo only
    double censored_fraction = 0.0; // Monte Carlo only
    std::int64_t box_side = 0;      // exact only
};

/**
 * P_{u_hat}(the chain ever visits u) = g(u_hat, u) / g(u, u). The exact method
 * doubles the box until the ratio moves by less than 1e-8; the Monte Carlo
 * method uses horizon 200 |u - u_hat|^2.
 */
HitResult hitting_prob(const InducedChain& chain, const Point& u_hat, const Point& u, HitMethod method,
                       std::int64_t n_paths = 100000, std::uint64_t seed = 1);

}  // namespace martin

#endif  // MARTIN_INDUCED_HPP
