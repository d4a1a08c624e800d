#ifndef MARTIN_ABSORBING_HPP
#define MARTIN_ABSORBING_HPP

#include "martin/box.hpp"
#include "martin/lattice.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <memory>

namespace martin {

enum class ExitKind {
    Killed,   // left the state space of the walk
    Escaped,  // still in the state space but outside the box
};

struct SolverOptions {
    /// State count above which the iterative solver replaces sparse LU.
    std::int64_t direct_limit = 250000;
    double iterative_tol = 1e-13;
    int iterative_max_iter = 20000;
};

/**
 * The walk of `spec` restricted to box ∩ state space, absorbed on leaving it.
 * Holds the factorised matrix I - P so that many right-hand sides are cheap.
 *
 *   solve(b)            u = (I - P)^{-1} b       (backward / expectation)
 *   solve_transpose(b)  g = (I - P)^{-T} b       (forward / occupation)
 *
 * Column solves give G(., y); transpose solves give the row G(x, .).
 */
class AbsorbingSystem {
public:
    using Reward = std::function<double(const Point&, ExitKind)>;

    AbsorbingSystem(WalkSpec spec, Box box, SolverOptions opt = {});
    ~AbsorbingSystem();
    AbsorbingSystem(AbsorbingSystem&&) noexcept;
    AbsorbingSystem& operator=(AbsorbingSystem&&) noexcept;

    const WalkSpec& spec() const { return spec_; }
    const Box& box() const { return box_; }
    std::int64_t size() const { return static_cast<std::int64_t>(states_.size()); }

    /// Index into the state vector, or -1 when x is not a state.
    std::int64_t state_index(const Point& x) const;
    const Point& state(std::int64_t k) const { return states_[static_cast<std::size_t>(k)]; }

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
    Eigen::VectorXd solve_transpose(const Eigen::VectorXd& b) const;

    Eigen::VectorXd green_column(const Point& y) const;
    Eigen::VectorXd green_row(const Point& x) const;

    /// b(x) = sum over one-step exits x -> w of mu(w - x) * reward(w, kind).
    Eigen::VectorXd exit_rhs(const Reward& reward) const;

    /// Visit every exit edge (state index, exit point, probability, kind).
    void for_each_exit(const std::function<void(std::int64_t, const Point&, double, ExitKind)>& fn) const;

    /// True if the sparse direct solver is in use.
    bool direct() const;

private:
    struct Exit {
        std::int64_t state;
        Point to;
        double p;
        ExitKind kind;
    };
    struct Factor;

    WalkSpec spec_;
    Box box_;
    SolverOptions opt_;
    std::vector<Point> states_;
    std::vector<std::int64_t> lookup_;  // box index -> state index or -1
    std::vector<Exit> exits_;
    std::unique_ptr<Factor> factor_;
};

}  // namespace martin

#endif  // MARTIN_ABSORBING_HPP
