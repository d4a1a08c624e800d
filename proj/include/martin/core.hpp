#ifndef MARTIN_CORE_HPP
#define MARTIN_CORE_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace martin {

/// Lattice point in Z^d.
using Point = std::vector<std::int64_t>;

/// Real vector in R^d.
using Vector = Eigen::VectorXd;

/// Largest dimension supported by the bitmask coordinate sets.
inline constexpr int kMaxDim = 30;

// Error hierarchy. Every failure that callers may want to distinguish gets its
// own type; all derive from martin::Error.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    using Error::Error;
};

class UnsupportedError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

/**
 * Subset of the coordinate indices {0, ..., dim-1}.
 *
 * Coordinates are 0-based in code; the CLI and config files use 1-based
 * indices and convert at the boundary.
 */
class CoordSet {
public:
    CoordSet() = default;
    CoordSet(int dim, std::uint32_t bits);

    static CoordSet none(int dim) { return CoordSet(dim, 0u); }
    static CoordSet all(int dim);
    static CoordSet of(int dim, const std::vector<int>& indices);

    int dim() const { return dim_; }
    std::uint32_t bits() const { return bits_; }
    bool contains(int i) const { return (bits_ >> i) & 1u; }
    bool empty() const { return bits_ == 0; }
    bool is_full() const;
    int size() const;
    std::vector<int> elements() const;
    CoordSet complement() const;
    bool subset_of(const CoordSet& other) const { return (bits_ & ~other.bits_) == 0; }

    CoordSet with(int i) const { return CoordSet(dim_, bits_ | (1u << i)); }

    bool operator==(const CoordSet& other) const = default;

    /// All subsets of {0..dim-1}, in increasing bitmask order.
    static std::vector<CoordSet> all_subsets(int dim);

    std::string to_string() const;  // "{1,3}" with 1-based labels

private:
    int dim_ = 0;
    std::uint32_t bits_ = 0;
};

/// Coordinates of q whose absolute value is at most tol.
CoordSet zero_coordinates(const Vector& q, double tol = 1e-12);

double dot(const Vector& a, const Point& x);
Vector to_vector(const Point& x);
double euclidean_norm(const Point& x);
std::string to_string(const Point& x);

}  // namespace martin

#endif  // MARTIN_CORE_HPP
