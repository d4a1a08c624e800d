#ifndef MARTIN_BOX_HPP
#define MARTIN_BOX_HPP

#include "martin/core.hpp"

#include <string>

namespace martin {

/// Axis-aligned window [lo, hi] in Z^d, bounds inclusive.
class Box {
public:
    Box() = default;
    Box(Point lo, Point hi);

    static Box cube(int dim, std::int64_t lo, std::int64_t hi);

    int dim() const { return static_cast<int>(lo_.size()); }
    const Point& lo() const { return lo_; }
    const Point& hi() const { return hi_; }
    std::int64_t volume() const { return volume_; }
    std::int64_t extent(int i) const { return hi_[static_cast<std::size_t>(i)] - lo_[static_cast<std::size_t>(i)] + 1; }

    bool contains(const Point& x) const;
    std::int64_t index(const Point& x) const;
    Point point(std::int64_t k) const;

    /// Box with every side moved inward by `k` (both ends).
    Box shrink(std::int64_t k) const;
    /// Box with only the upper sides moved inward by `k`.
    Box shrink_high(std::int64_t k) const;
    /// Box with every upper side moved outward by `k`; lower sides fixed.
    Box grow_high(std::int64_t k) const;
    bool empty() const;

    std::string to_string() const;

private:
    Point lo_, hi_;
    std::vector<std::int64_t> stride_;
    std::int64_t volume_ = 0;
};

}  // namespace martin

#endif  // MARTIN_BOX_HPP
