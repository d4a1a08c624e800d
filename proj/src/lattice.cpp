#include "martin/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

namespace martin {

namespace {

constexpr double kMassTolerance = 1e-9;

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ull;
    }
    return h;
}

// Dense index over an axis-aligned window [lo, hi] (inclusive).
struct Window {
    Point lo, hi;
    std::vector<std::int64_t> stride;
    std::int64_t volume = 1;

    Window(Point l, Point h) : lo(std::move(l)), hi(std::move(h)), stride(lo.size()) {
        for (std::size_t i = lo.size(); i-- > 0;) {
            stride[i] = volume;
            volume *= (hi[i] - lo[i] + 1);
        }
    }
    bool contains(const Point& x) const {
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] < lo[i] || x[i] > hi[i]) return false;
        }
        return true;
    }
    std::int64_t index(const Point& x) const {
        std::int64_t k = 0;
        for (std::size_t i = 0; i < x.size(); ++i) k += (x[i] - lo[i]) * stride[i];
        return k;
    }
    Point point(std::int64_t k) const {
        Point x(lo.size());
        for (std::size_t i = 0; i < lo.size(); ++i) {
            x[i] = lo[i] + k / stride[i];
            k %= stride[i];
        }
        return x;
    }
};

// BFS distances from `src` inside the window, restricted to the state space.
std::vector<std::int64_t> bfs_distances(const WalkSpec& spec, const Window& win, const Point& src) {
    std::vector<std::int64_t> dist(static_cast<std::size_t>(win.volume), -1);
    std::deque<std::int64_t> queue;
    dist[static_cast<std::size_t>(win.index(src))] = 0;
    queue.push_back(win.index(src));
    Point y(src.size());
    while (!queue.empty()) {
        const auto k = queue.front();
        queue.pop_front();
        const Point x = win.point(k);
        for (const auto& atom : spec.measure.atoms()) {
            for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + atom.z[i];
            if (!win.contains(y) || !spec.in_state_space(y)) continue;
            const auto ky = static_cast<std::size_t>(win.index(y));
            if (dist[ky] >= 0) continue;
            dist[ky] = dist[static_cast<std::size_t>(k)] + 1;
            queue.push_back(static_cast<std::int64_t>(ky));
        }
    }
    return dist;
}

std::int64_t l1_distance(const Point& a, const Point& b) {
    std::int64_t s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

}  // namespace

JumpMeasure::JumpMeasure(int dim, std::vector<Atom> atoms) : dim_(dim), atoms_(std::move(atoms)) {
    if (dim <= 0 || dim > kMaxDim) {
        throw ValidationError("jump measure dimension must be in [1, " + std::to_string(kMaxDim) +
                              "], got " + std::to_string(dim));
    }
    if (atoms_.empty()) throw ValidationError("jump measure has no atoms");
    for (const auto& a : atoms_) {
        if (static_cast<int>(a.z.size()) != dim) {
            throw ValidationError("atom " + to_string(a.z) + " has wrong dimension");
        }
        if (!(a.p > 0.0) || !std::isfinite(a.p)) {
            throw ValidationError("atom " + to_string(a.z) + " has non-positive probability");
        }
    }
    std::sort(atoms_.begin(), atoms_.end(), [](const Atom& a, const Atom& b) { return a.z < b.z; });
    for (std::size_t i = 1; i < atoms_.size(); ++i) {
        if (atoms_[i].z == atoms_[i - 1].z) {
            throw ValidationError("duplicate atom " + to_string(atoms_[i].z));
        }
    }
    double total = 0.0;
    for (const auto& a : atoms_) total += a.p;
    if (std::abs(total - 1.0) > kMassTolerance) {
        std::ostringstream os;
        os.precision(17);
        os << "probabilities sum to " << total << ", expected 1";
        throw ValidationError(os.str());
    }
    for (auto& a : atoms_) a.p /= total;

    mean_ = Vector::Zero(dim);
    for (const auto& a : atoms_) {
        double n2 = 0.0;
        for (int i = 0; i < dim; ++i) {
            mean_[i] += a.p * static_cast<double>(a.z[i]);
            n2 += static_cast<double>(a.z[i] * a.z[i]);
            max_coord_ = std::max(max_coord_, std::abs(a.z[i]));
            max_down_ = std::max(max_down_, -a.z[i]);
        }
        max_norm_ = std::max(max_norm_, std::sqrt(n2));
    }
}

double JumpMeasure::probability(const Point& z) const {
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), z,
                               [](const Atom& a, const Point& v) { return a.z < v; });
    return (it != atoms_.end() && it->z == z) ? it->p : 0.0;
}

std::uint64_t JumpMeasure::hash() const {
    std::uint64_t h = 1469598103934665603ull;
    h = fnv1a(h, &dim_, sizeof dim_);
    for (const auto& a : atoms_) {
        h = fnv1a(h, a.z.data(), a.z.size() * sizeof(std::int64_t));
        h = fnv1a(h, &a.p, sizeof a.p);
    }
    return h;
}

WalkSpec::WalkSpec(JumpMeasure m, CoordSet kill) : measure(std::move(m)), kill_set(kill) {
    if (kill_set.dim() != measure.dim()) {
        throw ValidationError("kill set dimension does not match measure dimension");
    }
}

WalkSpec WalkSpec::killed(JumpMeasure m) {
    const int d = m.dim();
    return WalkSpec(std::move(m), CoordSet::all(d));
}

WalkSpec WalkSpec::free(JumpMeasure m) {
    const int d = m.dim();
    return WalkSpec(std::move(m), CoordSet::none(d));
}

bool WalkSpec::in_state_space(const Point& x) const {
    for (int i = 0; i < dim(); ++i) {
        if (kill_set.contains(i) && x[static_cast<std::size_t>(i)] <= 0) return false;
    }
    return true;
}

std::uint64_t WalkSpec::hash() const {
    std::uint64_t h = measure.hash();
    const auto bits = kill_set.bits();
    return fnv1a(h, &bits, sizeof bits);
}

Vector mean_vector(const JumpMeasure& measure) {
    Vector m = Vector::Zero(measure.dim());
    for (const auto& a : measure.atoms()) {
        for (int i = 0; i < measure.dim(); ++i) m[i] += a.p * static_cast<double>(a.z[static_cast<std::size_t>(i)]);
    }
    return m;
}

JumpMeasure marginal_measure(const JumpMeasure& measure, const CoordSet& lambda) {
    if (lambda.empty()) {
        throw ValidationError("marginal over the empty coordinate set is undefined");
    }
    const auto coords = lambda.elements();
    std::map<Point, double> merged;
    for (const auto& a : measure.atoms()) {
        Point u;
        u.reserve(coords.size());
        for (int i : coords) u.push_back(a.z[static_cast<std::size_t>(i)]);
        merged[u] += a.p;
    }
    std::vector<Atom> atoms;
    atoms.reserve(merged.size());
    for (auto& [u, p] : merged) atoms.push_back({u, p});
    return JumpMeasure(static_cast<int>(coords.size()), std::move(atoms));
}

std::vector<Atom> tilt_atoms(const JumpMeasure& measure, const Vector& a) {
    std::vector<Atom> out = measure.atoms();
    for (auto& atom : out) atom.p *= std::exp(dot(a, atom.z));
    return out;
}

AssumptionReport validate(const JumpMeasure& measure) {
    const int d = measure.dim();
    AssumptionReport rep;
    rep.dim = d;
    rep.mean = mean_vector(measure);
    rep.lambda_of_mean = zero_coordinates(rep.mean, 1e-12);
    rep.nonzero_mean = !rep.lambda_of_mean.is_full();
    rep.finite_support = true;

    rep.axis_jumps = std::all_of(measure.atoms().begin(), measure.atoms().end(), [&](const Atom& a) {
        return std::count_if(a.z.begin(), a.z.end(), [](std::int64_t c) { return c != 0; }) <= 1;
    });
    rep.axis_jumps_on_zero_mean = std::all_of(measure.atoms().begin(), measure.atoms().end(), [&](const Atom& a) {
        int nonzero = 0;
        for (int i : rep.lambda_of_mean.elements()) nonzero += a.z[static_cast<std::size_t>(i)] != 0;
        return nonzero <= 1;
    });

    const std::int64_t reach = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(measure.max_jump_norm())));
    const std::int64_t W = 4 * reach * d;
    rep.window = W;

    std::vector<CoordSet> tested;
    if (d <= 4) {
        tested = CoordSet::all_subsets(d);
    } else {
        tested = {CoordSet::none(d), rep.lambda_of_mean, CoordSet::all(d)};
    }

    const Window win(Point(static_cast<std::size_t>(d), 1), Point(static_cast<std::size_t>(d), W));
    std::vector<Point> probes;
    const Point corner(static_cast<std::size_t>(d), 1);
    probes.push_back(corner);
    for (int i = 0; i < d; ++i) {
        Point p = corner;
        p[static_cast<std::size_t>(i)] += 1;
        probes.push_back(p);
    }
    probes.push_back(Point(static_cast<std::size_t>(d), 1 + W / 2));

    bool all_ok = true;
    for (const auto& lambda : tested) {
        const WalkSpec spec(measure, lambda);
        bool ok = true;
        for (const auto& src : probes) {
            const auto dist = bfs_distances(spec, win, src);
            for (const auto& dst : probes) {
                const auto dd = dist[static_cast<std::size_t>(win.index(dst))];
                if (dd < 0) {
                    ok = false;
                    break;
                }
                const double ratio = static_cast<double>(dd) /
                                     static_cast<double>(std::max<std::int64_t>(1, l1_distance(src, dst)));
                rep.communication_constant = std::max(rep.communication_constant, ratio);
            }
            if (!ok) break;
        }
        rep.irreducible_by_kill_set.emplace_back(lambda, ok);
        all_ok = all_ok && ok;
    }
    rep.irreducible = all_ok;
    return rep;
}

std::optional<std::vector<Point>> communication_path(const WalkSpec& spec, const Point& x, const Point& xp) {
    const int d = spec.dim();
    if (static_cast<int>(x.size()) != d || static_cast<int>(xp.size()) != d) {
        throw DomainError("communication_path: point dimension mismatch");
    }
    if (!spec.in_state_space(x) || !spec.in_state_space(xp)) {
        throw DomainError("communication_path: endpoints must lie in the state space");
    }
    if (x == xp) return std::vector<Point>{};

    const std::int64_t reach =
        std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(spec.measure.max_jump_norm())));
    const std::int64_t margin = 4 * reach * d;
    Point lo(static_cast<std::size_t>(d)), hi(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        const auto k = static_cast<std::size_t>(i);
        lo[k] = std::min(x[k], xp[k]) - margin;
        hi[k] = std::max(x[k], xp[k]) + margin;
        if (spec.kill_set.contains(i)) lo[k] = std::max<std::int64_t>(lo[k], 1);
    }
    const Window win(lo, hi);

    // Sparse BFS keyed by window index; records the parent atom.
    std::unordered_map<std::int64_t, std::pair<std::int64_t, std::size_t>> parent;
    std::deque<std::int64_t> queue;
    const auto ks = win.index(x), kt = win.index(xp);
    parent.emplace(ks, std::make_pair(ks, std::size_t{0}));
    queue.push_back(ks);
    Point y(static_cast<std::size_t>(d));
    bool found = false;
    while (!queue.empty() && !found) {
        const auto k = queue.front();
        queue.pop_front();
        const Point cur = win.point(k);
        const auto& atoms = spec.measure.atoms();
        for (std::size_t a = 0; a < atoms.size(); ++a) {
            for (int i = 0; i < d; ++i) {
                y[static_cast<std::size_t>(i)] = cur[static_cast<std::size_t>(i)] + atoms[a].z[static_cast<std::size_t>(i)];
            }
            if (!win.contains(y) || !spec.in_state_space(y)) continue;
            const auto ky = win.index(y);
            if (parent.count(ky)) continue;
            parent.emplace(ky, std::make_pair(k, a));
            if (ky == kt) {
                found = true;
                break;
            }
            queue.push_back(ky);
        }
    }
    if (!found) return std::nullopt;
    std::vector<Point> steps;
    for (auto k = kt; k != ks;) {
        const auto& [prev, atom] = parent.at(k);
        steps.push_back(spec.measure.atoms()[atom].z);
        k = prev;
    }
    std::reverse(steps.begin(), steps.end());
    return steps;
}

JumpMeasure read_measure(std::istream& in) {
    std::string line;
    int dim = 0;
    std::vector<Atom> atoms;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) continue;
        if (dim == 0) {
            if (first != "dim" || !(ls >> dim) || dim <= 0) {
                throw ValidationError("measure file line " + std::to_string(lineno) + ": expected 'dim <d>' header");
            }
            continue;
        }
        Atom atom;
        atom.z.resize(static_cast<std::size_t>(dim));
        std::istringstream rs(line);
        for (int i = 0; i < dim; ++i) {
            if (!(rs >> atom.z[static_cast<std::size_t>(i)])) {
                throw ValidationError("measure file line " + std::to_string(lineno) + ": expected " +
                                      std::to_string(dim) + " integer coordinates");
            }
        }
        std::string ptxt;
        if (!(rs >> ptxt)) {
            throw ValidationError("measure file line " + std::to_string(lineno) + ": missing probability");
        }
        std::size_t used = 0;
        try {
            atom.p = std::stod(ptxt, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        std::string rest;
        if (used != ptxt.size() || (rs >> rest)) {
            throw ValidationError("measure file line " + std::to_string(lineno) + ": malformed probability '" + ptxt + "'");
        }
        atoms.push_back(std::move(atom));
    }
    if (dim == 0) throw ValidationError("measure file: missing 'dim' header");
    return JumpMeasure(dim, std::move(atoms));
}

JumpMeasure load_measure(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open measure file " + path);
    return read_measure(in);
}

void write_measure(std::ostream& out, const JumpMeasure& measure) {
    out << "dim " << measure.dim() << '\n';
    out.precision(17);
    for (const auto& a : measure.atoms()) {
        for (auto c : a.z) out << c << ' ';
        out << a.p << '\n';
    }
}

}  // namespace martin
