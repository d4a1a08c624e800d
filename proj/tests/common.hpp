#ifndef MARTIN_TESTS_COMMON_HPP
#define MARTIN_TESTS_COMMON_HPP

#include "martin/lattice.hpp"

#include <string>

namespace testing_support {

using martin::JumpMeasure;

inline JumpMeasure e1() { return JumpMeasure(2, {{{1, 0}, 0.3}, {{-1, 0}, 0.2}, {{0, 1}, 0.3}, {{0, -1}, 0.2}}); }
inline JumpMeasure e2() { return JumpMeasure(2, {{{1, 0}, 0.3}, {{-1, 0}, 0.2}, {{0, 1}, 0.25}, {{0, -1}, 0.25}}); }
inline JumpMeasure srw2() { return JumpMeasure(2, {{{1, 0}, 0.25}, {{-1, 0}, 0.25}, {{0, 1}, 0.25}, {{0, -1}, 0.25}}); }
inline JumpMeasure e3d() {
    return JumpMeasure(3, {{{1, 0, 0}, 0.2}, {{-1, 0, 0}, 0.1}, {{0, 1, 0}, 0.2}, {{0, -1, 0}, 0.1},
                           {{0, 0, 1}, 0.2}, {{0, 0, -1}, 0.1}, {{0, 0, 0}, 0.1}});
}
inline JumpMeasure pm1() { return JumpMeasure(1, {{{1}, 0.5}, {{-1}, 0.5}}); }
inline JumpMeasure drift1() { return JumpMeasure(1, {{{1}, 0.6}, {{-1}, 0.4}}); }
inline JumpMeasure overshoot1() { return JumpMeasure(1, {{{-2}, 0.25}, {{0}, 0.25}, {{1}, 0.5}}); }

inline std::string data_path(const std::string& rel) { return std::string(MARTIN_DATA_DIR) + "/" + rel; }

}  // namespace testing_support

#endif  // MARTIN_TESTS_COMMON_HPP
