#pragma once

#include "gmt/measure.hpp"

namespace gmt {

struct Line {
    Point base;  // a point on the line
    Point dir;   // unit direction

    double distance_to(const Point& p) const;
    /// Chord of the line inside the closed ball: midpoint and half-length (negative if empty).
    std::pair<Point, double> chord(const Ball& b) const;
};

Line line_through(const Point& a, const Point& b);

enum class BetaKind { beta1, betainf, bbeta1, bbetainf };

struct BetaResult {
    double value = 0.0;
    Line line;
};

/// Heuristic minimiser: PCA, lines through pairs of the 12 extremal atoms, then local refinement.
Line best_line(const DiscreteMeasure& m, const Ball& ball, BetaKind kind);
BetaResult beta(const DiscreteMeasure& m, const Ball& ball, BetaKind kind);

/// Unilateral and bilateral coefficients evaluated at a fixed line.
double beta_at(const DiscreteMeasure& m, const Ball& ball, const Line& line, BetaKind kind);

/// Lipschitz-dual distance in the ball between mu and c H^1 on the line (256 equal-mass atoms).
double dist_flat(const DiscreteMeasure& m, const Ball& ball, const Line& line, double c);

struct AlphaResult {
    double value = 0.0;
    Line line;
    double c = 0.0;
};

/// inf over lines meeting the closed ball and c >= 0 of dist_flat / (r mu(B)).
AlphaResult alpha(const DiscreteMeasure& m, const Ball& ball);

struct FlatnessRow {
    Ball ball;
    double beta1 = 0, betainf = 0, bbeta1 = 0, bbetainf = 0, alpha = 0, c = 0;
    Line line;
};

FlatnessRow flatness_row(const DiscreteMeasure& m, const Ball& ball);

}  // namespace gmt
