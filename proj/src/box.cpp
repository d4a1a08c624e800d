#include "martin/box.hpp"

#include <sstream>

namespace martin {

Box::Box(Point lo, Point hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.size() != hi_.size() || lo_.empty()) throw DomainError("box: bound dimensions differ or are zero");
    stride_.assign(lo_.size(), 0);
    volume_ = 1;
    for (std::size_t i = lo_.size(); i-- > 0;) {
        stride_[i] = volume_;
        const auto n = hi_[i] - lo_[i] + 1;
        volume_ *= (n > 0 ? n : 0);
    }
}

Box Box::cube(int dim, std::int64_t lo, std::int64_t hi) {
    return Box(Point(static_cast<std::size_t>(dim), lo), Point(static_cast<std::size_t>(dim), hi));
}

bool Box::contains(const Point& x) const {
    for (std::size_t i = 0; i < lo_.size(); ++i) {
        if (x[i] < lo_[i] || x[i] > hi_[i]) return false;
    }
    return true;
}

std::int64_t Box::index(const Point& x) const {
    std::int64_t k = 0;
    for (std::size_t i = 0; i < lo_.size(); ++i) k += (x[i] - lo_[i]) * stride_[i];
    return k;
}

Point Box::point(std::int64_t k) const {
    Point x(lo_.size());
    for (std::size_t i = 0; i < lo_.size(); ++i) {
        x[i] = lo_[i] + k / stride_[i];
        k %= stride_[i];
    }
    return x;
}

Box Box::shrink(std::int64_t k) const {
    Point lo = lo_, hi = hi_;
    for (std::size_t i = 0; i < lo.size(); ++i) {
        lo[i] += k;
        hi[i] -= k;
    }
    return Box(lo, hi);
}

Box Box::shrink_high(std::int64_t k) const {
    Point hi = hi_;
    for (auto& h : hi) h -= k;
    return Box(lo_, hi);
}

Box Box::grow_high(std::int64_t k) const {
    Point hi = hi_;
    for (auto& h : hi) h += k;
    return Box(lo_, hi);
}

bool Box::empty() const { return volume_ == 0; }

std::string Box::to_string() const {
    return martin::to_string(lo_) + ".." + martin::to_string(hi_);
}

}  // namespace martin
