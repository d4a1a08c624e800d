#include "martin/core.hpp"

#include <bit>
#include <cmath>
#include <sstream>

namespace martin {

CoordSet::CoordSet(int dim, std::uint32_t bits) : dim_(dim), bits_(bits) {
    if (dim < 0 || dim > kMaxDim) {
        throw ValidationError("dimension out of range: " + std::to_string(dim));
    }
    if (dim < 32 && (bits >> dim) != 0) {
        throw ValidationError("coordinate index out of range for dimension " + std::to_string(dim));
    }
}

CoordSet CoordSet::all(int dim) { return CoordSet(dim, dim == 0 ? 0u : ((1u << dim) - 1u)); }

CoordSet CoordSet::of(int dim, const std::vector<int>& indices) {
    std::uint32_t bits = 0;
    for (int i : indices) {
        if (i < 0 || i >= dim) {
            throw ValidationError("coordinate index " + std::to_string(i) + " out of range");
        }
        bits |= 1u << i;
    }
    return CoordSet(dim, bits);
}

bool CoordSet::is_full() const { return bits_ == all(dim_).bits_; }

int CoordSet::size() const { return std::popcount(bits_); }

std::vector<int> CoordSet::elements() const {
    std::vector<int> out;
    for (int i = 0; i < dim_; ++i) {
        if (contains(i)) out.push_back(i);
    }
    return out;
}

CoordSet CoordSet::complement() const { return CoordSet(dim_, all(dim_).bits_ & ~bits_); }

std::vector<CoordSet> CoordSet::all_subsets(int dim) {
    std::vector<CoordSet> out;
    for (std::uint32_t b = 0; b < (1u << dim); ++b) out.emplace_back(dim, b);
    return out;
}

std::string CoordSet::to_string() const {
    std::ostringstream os;
    os << '{';
    bool first = true;
    for (int i : elements()) {
        if (!first) os << ',';
        os << (i + 1);
        first = false;
    }
    os << '}';
    return os.str();
}

CoordSet zero_coordinates(const Vector& q, double tol) {
    std::uint32_t bits = 0;
    for (int i = 0; i < q.size(); ++i) {
        if (std::abs(q[i]) <= tol) bits |= 1u << i;
    }
    return CoordSet(static_cast<int>(q.size()), bits);
}

double dot(const Vector& a, const Point& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += a[static_cast<Eigen::Index>(i)] * static_cast<double>(x[i]);
    return s;
}

Vector to_vector(const Point& x) {
    Vector v(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) v[static_cast<Eigen::Index>(i)] = static_cast<double>(x[i]);
    return v;
}

double euclidean_norm(const Point& x) {
    double s = 0.0;
    for (auto c : x) s += static_cast<double>(c) * static_cast<double>(c);
    return std::sqrt(s);
}

std::string to_string(const Point& x) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i) os << ',';
        os << x[i];
    }
    os << ')';
    return os.str();
}

}  // namespace martin
