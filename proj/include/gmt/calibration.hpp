#pragma once
// Constants frozen by tests/calibrate.cpp: oracle maxima over fixed suites, times 2.

#include <cstddef>

namespace gmt::calibration {

// Identity residual suite: circle (N=200, radius 2, probability) and a perturbed line (N=300).
inline constexpr double kMVLineNoise = 0.02;
inline constexpr unsigned kMVLineSeed = 7;
inline constexpr double kMVEps[] = {0.05, 0.1, 0.2};
inline constexpr double kMVConstant = 1.125457;  // 2 x 0.5627287 (perturbed line, eps 0.05)

// Curve suite: lipschitz_graph seeds 1..5.
inline constexpr std::size_t kCurveAtoms = 2000;
inline constexpr double kCurveLip = 0.1;
inline constexpr double kCurveEps0 = 0.05;
inline constexpr int kCurveKMax = 12;
inline constexpr unsigned kCurveSeeds = 5;
inline constexpr double kCAngle = 2.657718;  // 2 x 1.328859 (seed 1, k = 3)

// Cotlar scan (256 atoms, cantor4 generation 4, 1000 samples, seed 1): lhs / (M(Tf) + M^n f).
inline constexpr const char* kCotlarMeasures[] = {"segment", "circle", "cantor4"};
inline constexpr double kCotlarCeiling[] = {
    1.140045,  // 2 x 0.5700227
    1.156693,  // 2 x 0.5783467
    1.077036,  // 2 x 0.5385180
};

}  // namespace gmt::calibration
