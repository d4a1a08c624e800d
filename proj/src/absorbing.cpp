#include "martin/absorbing.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include <sstream>

namespace martin {

struct AbsorbingSystem::Factor {
    using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;
    using RowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

    Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>> lu;
    bool direct = true;
    RowMatrix a, at;
    Eigen::BiCGSTAB<RowMatrix, Eigen::IncompleteLUT<double>> it, it_t;
};

AbsorbingSystem::AbsorbingSystem(WalkSpec spec, Box box, SolverOptions opt)
    : spec_(std::move(spec)), box_(std::move(box)), opt_(opt), factor_(std::make_unique<Factor>()) {
    if (box_.dim() != spec_.dim()) throw DomainError("absorbing system: box and walk dimensions differ");
    if (box_.empty()) throw DomainError("absorbing system: empty box");

    lookup_.assign(static_cast<std::size_t>(box_.volume()), -1);
    for (std::int64_t k = 0; k < box_.volume(); ++k) {
        Point x = box_.point(k);
        if (!spec_.in_state_space(x)) continue;
        lookup_[static_cast<std::size_t>(k)] = static_cast<std::int64_t>(states_.size());
        states_.push_back(std::move(x));
    }
    if (states_.empty()) throw DomainError("absorbing system: box " + box_.to_string() + " has no states");

    const auto n = static_cast<Eigen::Index>(states_.size());
    const auto& atoms = spec_.measure.atoms();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(states_.size() * (atoms.size() + 1));
    Point y(static_cast<std::size_t>(spec_.dim()));
    for (std::int64_t s = 0; s < n; ++s) {
        const Point& x = states_[static_cast<std::size_t>(s)];
        double stay = 0.0;
        for (const auto& atom : atoms) {
            for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] + atom.z[i];
            if (!spec_.in_state_space(y)) {
                exits_.push_back({s, y, atom.p, ExitKind::Killed});
            } else if (!box_.contains(y)) {
                exits_.push_back({s, y, atom.p, ExitKind::Escaped});
            } else {
                const auto t = lookup_[static_cast<std::size_t>(box_.index(y))];
                if (t == s) {
                    stay += atom.p;
                } else {
                    trip.emplace_back(static_cast<int>(s), static_cast<int>(t), -atom.p);
                }
            }
        }
        trip.emplace_back(static_cast<int>(s), static_cast<int>(s), 1.0 - stay);
    }

    auto& f = *factor_;
    f.direct = size() <= opt_.direct_limit;
    if (f.direct) {
        Factor::ColMatrix a(n, n);
        a.setFromTriplets(trip.begin(), trip.end());
        a.makeCompressed();
        f.lu.compute(a);
        if (f.lu.info() != Eigen::Success) {
            throw SolverError("absorbing system: I - P is singular on " + box_.to_string() +
                              "; the restricted walk needs a kill set or a drift");
        }
    } else {
        f.a.resize(n, n);
        f.a.setFromTriplets(trip.begin(), trip.end());
        f.at = f.a.transpose();
        for (auto* s : {&f.it, &f.it_t}) {
            s->setTolerance(opt_.iterative_tol);
            s->setMaxIterations(opt_.iterative_max_iter);
        }
        f.it.compute(f.a);
        f.it_t.compute(f.at);
        if (f.it.info() != Eigen::Success || f.it_t.info() != Eigen::Success) {
            throw SolverError("absorbing system: preconditioner setup failed on " + box_.to_string());
        }
    }
}

AbsorbingSystem::~AbsorbingSystem() = default;
AbsorbingSystem::AbsorbingSystem(AbsorbingSystem&&) noexcept = default;
AbsorbingSystem& AbsorbingSystem::operator=(AbsorbingSystem&&) noexcept = default;

bool AbsorbingSystem::direct() const { return factor_->direct; }

std::int64_t AbsorbingSystem::state_index(const Point& x) const {
    if (static_cast<int>(x.size()) != box_.dim() || !box_.contains(x)) return -1;
    return lookup_[static_cast<std::size_t>(box_.index(x))];
}

Eigen::VectorXd AbsorbingSystem::solve(const Eigen::VectorXd& b) const {
    const auto& f = *factor_;
    if (f.direct) return f.lu.solve(b);
    Eigen::VectorXd x = f.it.solve(b);
    if (f.it.info() != Eigen::Success) {
        std::ostringstream os;
        os << "absorbing system: iterative solve did not converge (error " << f.it.error() << ")";
        throw SolverError(os.str());
    }
    return x;
}

Eigen::VectorXd AbsorbingSystem::solve_transpose(const Eigen::VectorXd& b) const {
    auto& f = *factor_;  // SparseLU::transpose() is non-const but does not modify the factors
    if (f.direct) return f.lu.transpose().solve(b);
    Eigen::VectorXd x = f.it_t.solve(b);
    if (f.it_t.info() != Eigen::Success) {
        std::ostringstream os;
        os << "absorbing system: iterative transpose solve did not converge (error " << f.it_t.error() << ")";
        throw SolverError(os.str());
    }
    return x;
}

Eigen::VectorXd AbsorbingSystem::green_column(const Point& y) const {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(size());
    const auto k = state_index(y);
    if (k < 0) return e;  // killed before arrival or outside the box
    e[k] = 1.0;
    return solve(e);
}

Eigen::VectorXd AbsorbingSystem::green_row(const Point& x) const {
    const auto k = state_index(x);
    if (k < 0) throw DomainError("green_row: source " + to_string(x) + " is not a state of " + box_.to_string());
    Eigen::VectorXd e = Eigen::VectorXd::Zero(size());
    e[k] = 1.0;
    return solve_transpose(e);
}

Eigen::VectorXd AbsorbingSystem::exit_rhs(const Reward& reward) const {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(size());
    for (const auto& e : exits_) b[e.state] += e.p * reward(e.to, e.kind);
    return b;
}

void AbsorbingSystem::for_each_exit(const std::function<void(std::int64_t, const Point&, double, ExitKind)>& fn) const {
    for (const auto& e : exits_) fn(e.state, e.to, e.p, e.kind);
}

}  // namespace martin
