#pragma once

#include <array>

namespace gbflow {

// Cyclic misorientations of three grain orientations around one junction:
// entry j holds alpha^(j-1) - alpha^(j) with indices wrapping mod 3.
inline std::array<double, 3> misorientations(const std::array<double, 3>& alpha) {
    return {alpha[2] - alpha[0], alpha[0] - alpha[1], alpha[1] - alpha[2]};
}

}  // namespace gbflow
