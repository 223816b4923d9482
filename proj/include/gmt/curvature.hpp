#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "gmt/measure.hpp"

namespace gmt {

/// Exact sign of the planar orientation determinant of (a, b, c): -1, 0 or +1.
int orient2d_sign(const Point& a, const Point& b, const Point& c);

/// Inverse circumradius 1/R(x, y, z); 0 for collinear or coincident points.
double menger(const Point& x, const Point& y, const Point& z);

enum class CurvatureMode { exact, sampled };

struct CurvatureReport {
    double c2 = 0.0;
    double eps = 0.0;
    CurvatureMode mode = CurvatureMode::exact;
    std::uint64_t samples = 0;
    std::uint64_t seed = 0;
    double std_error = 0.0;                // sampled mode only
    std::uint64_t triples_evaluated = 0;   // ordered triples that passed the eps test
    std::uint64_t degenerate_triples = 0;  // ordered triples with a repeated atom (sampled mode)
};

struct CurvatureOptions {
    CurvatureMode mode = CurvatureMode::exact;
    std::uint64_t samples = 1000000;
    std::uint64_t seed = 1;
    bool force = false;  // allow exact mode above kExactLimit atoms
};

inline constexpr std::size_t kExactLimit = 5000;

/// Sum of menger^2 w_i w_j w_k over ordered distinct triples whose pairwise distances all exceed eps.
CurvatureReport curvature_total(const DiscreteMeasure& m, double eps, const CurvatureOptions& opt = {});

/// sum_{|z - x_j| > eps} f_j w_j / (z - x_j), the plane read as C. Empty f means f = 1.
std::complex<double> cauchy_transform(const DiscreteMeasure& m, const std::vector<double>& f, const Point& z,
                                      double eps);

struct MVReport {
    double lhs = 0.0;
    double rhs_curv = 0.0;
    double residual = 0.0;
    double growth_const = 0.0;
    double eps = 0.0;
};

/// sup over atoms x and radii r >= eps of mu(B(x, r)) / r.
double growth_constant(const DiscreteMeasure& m, double eps);

/// ||C_eps mu||^2 in L^2(mu) against c_eps^2(mu) / 6.
MVReport mv_identity(const DiscreteMeasure& m, double eps);

/// |sum_j w_j C_eps mu(x_j)|, zero by antisymmetry of the kernel.
double energy_cancellation(const DiscreteMeasure& m, double eps);

}  // namespace gmt
