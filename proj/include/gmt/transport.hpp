#pragma once

#include <vector>

#include "gmt/measure.hpp"

namespace gmt {

struct TransportSolution {
    double value = 0.0;
    /// Optimal 1-Lipschitz test function at each input point (0 for points outside the ball).
    std::vector<double> f;
};

/// sup { sum_i f(x_i) m_i : f 1-Lipschitz, f = 0 outside the open ball }.
/// Solved as a transport problem in which surplus may be matched at Euclidean
/// cost or sent to the sphere at cost r - |x - center|. Atoms outside the
/// closed ball are ignored. Uses a transportation simplex; falls back to
/// successive shortest paths if the simplex hits its pivot cap.
TransportSolution signed_transport_dual(const std::vector<Point>& points, const std::vector<double>& masses,
                                        const Ball& ball);
double signed_transport(const std::vector<Point>& points, const std::vector<double>& masses, const Ball& ball);

/// Same value by successive shortest paths only (reference solver).
double signed_transport_ssp(const std::vector<Point>& points, const std::vector<double>& masses, const Ball& ball);

}  // namespace gmt
