#pragma once

#include <array>
#include <cmath>

#include "gbflow/geometry.hpp"

namespace gbflow::testutil {

// Anchor triangle whose equilibrium junction sits at `center` with the given
// arm lengths: anchors placed along three directions at mutual 2*pi/3.
inline AnchorTriangle triangle_from_lengths(const std::array<double, 3>& len,
                                            double phi = 0.0, Vec2 center = {0.0, 0.0}) {
    AnchorTriangle tri;
    for (int j = 0; j < 3; ++j) {
        const double ang = phi + 2.0 * M_PI * j / 3.0;
        tri.x[j] = center + Vec2{len[j] * std::cos(ang), len[j] * std::sin(ang)};
    }
    return tri;
}

}  // namespace gbflow::testutil
