#ifndef MARTIN_LATTICE_HPP
#define MARTIN_LATTICE_HPP

#include "martin/core.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace martin {

struct Atom {
    Point z;
    double p = 0.0;
};

/**
 * Finite-support probability measure on Z^d.
 *
 * Atoms are kept sorted lexicographically by jump vector. Construction
 * rejects zero or negative weights, duplicate atoms and total mass further
 * than 1e-9 from one; accepted measures are renormalised so that the mass is
 * one to rounding.
 */
class JumpMeasure {
public:
    JumpMeasure() = default;
    JumpMeasure(int dim, std::vector<Atom> atoms);

    int dim() const { return dim_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    const Vector& mean() const { return mean_; }
    std::size_t support_size() const { return atoms_.size(); }

    /// Largest Euclidean norm of a jump.
    double max_jump_norm() const { return max_norm_; }
    /// Largest |z^i| over atoms and coordinates.
    std::int64_t max_jump_coordinate() const { return max_coord_; }
    /// Largest downward step -min z^i over atoms and coordinates (0 if none).
    std::int64_t max_down_jump() const { return max_down_; }

    double probability(const Point& z) const;

    /// 64-bit FNV-1a over dim and atoms; used to tag exported tables.
    std::uint64_t hash() const;

private:
    int dim_ = 0;
    std::vector<Atom> atoms_;
    Vector mean_;
    double max_norm_ = 0.0;
    std::int64_t max_coord_ = 0;
    std::int64_t max_down_ = 0;
};

/**
 * Random walk with jump law `measure`, killed when a coordinate in
 * `kill_set` becomes <= 0. The full set gives the walk killed on leaving the
 * positive orthant; the empty set gives the free walk.
 */
struct WalkSpec {
    JumpMeasure measure;
    CoordSet kill_set;

    WalkSpec() = default;
    WalkSpec(JumpMeasure m, CoordSet kill);

    static WalkSpec killed(JumpMeasure m);
    static WalkSpec free(JumpMeasure m);

    int dim() const { return measure.dim(); }
    bool in_state_space(const Point& x) const;
    std::uint64_t hash() const;
};

struct AssumptionReport {
    int dim = 0;
    /// One entry per kill set tested.
    std::vector<std::pair<CoordSet, bool>> irreducible_by_kill_set;
    bool irreducible = false;
    bool finite_support = true;
    bool nonzero_mean = false;
    bool axis_jumps_on_zero_mean = false;
    bool axis_jumps = false;
    CoordSet lambda_of_mean;
    Vector mean;
    /// Largest shortest-path length / max(1, |x - x'|_1) seen on probe pairs.
    double communication_constant = 0.0;
    std::int64_t window = 0;

    bool standing_assumptions() const { return irreducible && finite_support && nonzero_mean; }
};

/// Check irreducibility, support, mean and axis-jump conditions on a bounded window; see README for the probe design.
AssumptionReport validate(const JumpMeasure& measure);

Vector mean_vector(const JumpMeasure& measure);

/// Image of `measure` under x -> x^Lambda; atoms mapping to the same point merge.
JumpMeasure marginal_measure(const JumpMeasure& measure, const CoordSet& lambda);

/// Exponentially tilted atoms p(z) e^{a.z}; mass is left as is (no renormalisation).
std::vector<Atom> tilt_atoms(const JumpMeasure& measure, const Vector& a);

/**
 * Shortest path of support steps from x to x' that never leaves the state
 * space of `spec`, found by BFS inside a window around both points.
 * Returns std::nullopt when the window is exhausted.
 */
std::optional<std::vector<Point>> communication_path(const WalkSpec& spec, const Point& x,
                                                     const Point& xp);

/**
 * Text format:
 *
 *     # comment
 *     dim 2
 *     1 0 0.3
 *     -1 0 0.2
 *
 * The first non-comment line is `dim <d>`; each further line holds d integer
 * coordinates followed by a decimal probability.
 */
JumpMeasure read_measure(std::istream& in);
JumpMeasure load_measure(const std::string& path);
void write_measure(std::ostream& out, const JumpMeasure& measure);

}  // namespace martin

#endif  // MARTIN_LATTICE_HPP
