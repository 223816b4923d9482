#include "gmt/flatness.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "gmt/numeric.hpp"
#include "gmt/transport.hpp"

namespace gmt {

double Line::distance_to(const Point& p) const {
    const Point v = p - base;
    const Point perp = v - dot(v, dir) * dir;
    return norm(perp);
}

std::pair<Point, double> Line::chord(const Ball& b) const {
    const Point v = b.center - base;
    const Point foot = base + dot(v, dir) * dir;
    const double h2 = dot(b.center - foot, b.center - foot);
    const double r2 = b.radius * b.radius;
    if (h2 > r2) return {foot, -1.0};
    return {foot, std::sqrt(r2 - h2)};
}

Line line_through(const Point& a, const Point& b) {
    const Point d = b - a;
    const double n = norm(d);
    if (n == 0.0) throw std::invalid_argument("line_through: coincident points");
    return Line{a, (1.0 / n) * d};
}

namespace {

constexpr int kBilateralSamples = 512;
constexpr int kFlatAtoms = 256;
constexpr std::size_t kExtremal = 12;

struct InBall {
    std::vector<Point> pts;
    std::vector<double> w;
    double mass = 0.0;
};

InBall collect(const DiscreteMeasure& m, const Ball& ball) {
    if (!(ball.radius > 0.0)) throw std::invalid_argument("flatness: ball radius must be positive");
    InBall s;
    for (auto id : m.ball_query(ball)) {
        s.pts.push_back(m.position(id));
        s.w.push_back(m.weight(id));
    }
    s.mass = pairwise_sum(s.w);
    if (!(s.mass > 0.0)) throw std::invalid_argument("flatness: the ball carries no mass");
    return s;
}

struct Fit {
    double value = 0.0;
    Line line;
};

double weighted_median(std::vector<std::pair<double, double>> sw) {
    std::sort(sw.begin(), sw.end());
    double total = 0.0;
    for (auto& p : sw) total += p.second;
    double acc = 0.0;
    for (auto& p : sw) {
        acc += p.second;
        if (acc >= 0.5 * total) return p.first;
    }
    return sw.back().first;
}

// Best line with the given direction: offset chosen optimally (d = 2) or by
// a geometric-median / minimax-centre iteration (d > 2).
Fit fit_direction(const InBall& s, const Ball& ball, const Point& dir, bool sup) {
    const int d = ball.center.dim;
    const double r = ball.radius;
    Fit out;
    out.line.dir = dir;
    if (d == 1) {
        out.line.base = ball.center;
        return out;
    }
    if (d == 2) {
        const Point n{-dir[1], dir[0]};
        std::vector<double> proj(s.pts.size());
        for (std::size_t i = 0; i < s.pts.size(); ++i) proj[i] = dot(s.pts[i] - ball.center, n);
        double off;
        if (sup) {
            const auto [lo, hi] = std::minmax_element(proj.begin(), proj.end());
            off = 0.5 * (*lo + *hi);
            out.value = 0.5 * (*hi - *lo) / r;
        } else {
            std::vector<std::pair<double, double>> sw;
            for (std::size_t i = 0; i < proj.size(); ++i) sw.push_back({proj[i], s.w[i]});
            off = weighted_median(std::move(sw));
            std::vector<double> terms(proj.size());
            for (std::size_t i = 0; i < proj.size(); ++i) terms[i] = s.w[i] * std::abs(proj[i] - off);
            out.value = pairwise_sum(terms) / (r * s.mass);
        }
        out.line.base = ball.center + off * n;
        return out;
    }
    std::vector<Point> q(s.pts.size());
    for (std::size_t i = 0; i < s.pts.size(); ++i) {
        const Point v = s.pts[i] - ball.center;
        q[i] = v - dot(v, dir) * dir;
    }
    Point z = q[0];
    if (sup) {
        for (int k = 1; k <= 400; ++k) {
            std::size_t far = 0;
            for (std::size_t i = 1; i < q.size(); ++i)
                if (distance(q[i], z) > distance(q[far], z)) far = i;
            z = z + (1.0 / (k + 1)) * (q[far] - z);
        }
        double mx = 0.0;
        for (const auto& p : q) mx = std::max(mx, distance(p, z));
        out.value = mx / r;
    } else {
        z = Point(d);
        for (std::size_t i = 0; i < q.size(); ++i) z = z + (s.w[i] / s.mass) * q[i];
        for (int it = 0; it < 200; ++it) {
            Point num(d);
            double den = 0.0;
            for (std::size_t i = 0; i < q.size(); ++i) {
                const double dist = std::max(distance(q[i], z), 1e-12 * r);
                num = num + (s.w[i] / dist) * q[i];
                den += s.w[i] / dist;
            }
            z = (1.0 / den) * num;
        }
        std::vector<double> terms(q.size());
        for (std::size_t i = 0; i < q.size(); ++i) terms[i] = s.w[i] * distance(q[i], z);
        out.value = pairwise_sum(terms) / (r * s.mass);
    }
    out.line.base = ball.center + z;
    return out;
}

Point principal_direction(const InBall& s, int d) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (std::size_t i = 0; i < s.pts.size(); ++i)
        for (int k = 0; k < d; ++k) mean(k) += s.w[i] * s.pts[i][k] / s.mass;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t i = 0; i < s.pts.size(); ++i) {
        Eigen::VectorXd v(d);
        for (int k = 0; k < d; ++k) v(k) = s.pts[i][k] - mean(k);
        cov += s.w[i] * v * v.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    Point dir(d);
    const Eigen::VectorXd top = es.eigenvectors().col(d - 1);
    for (int k = 0; k < d; ++k) dir[k] = top(k);
    const double n = norm(dir);
    if (!(n > 0.0) || !std::isfinite(n)) {
        dir = Point(d);
        dir[0] = 1.0;
        return dir;
    }
    return (1.0 / n) * dir;
}

std::vector<Point> candidate_directions(const InBall& s, int d) {
    std::vector<Point> dirs{principal_direction(s, d)};
    Point centroid(d);
    for (std::size_t i = 0; i < s.pts.size(); ++i) centroid = centroid + (s.w[i] / s.mass) * s.pts[i];
    std::vector<std::size_t> order(s.pts.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return distance(s.pts[a], centroid) > distance(s.pts[b], centroid);
    });
    order.resize(std::min(order.size(), kExtremal));
    for (std::size_t a = 0; a < order.size(); ++a)
        for (std::size_t b = a + 1; b < order.size(); ++b) {
            const Point v = s.pts[order[b]] - s.pts[order[a]];
            const double n = norm(v);
            if (n > 0.0) dirs.push_back((1.0 / n) * v);
        }
    return dirs;
}

template <class F>
double golden_min(F&& f, double lo, double hi, int iters) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int k = 0; k < iters; ++k) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    return f1 <= f2 ? x1 : x2;
}

Point angle_dir(double t) { return Point{std::cos(t), std::sin(t)}; }

Fit search_line(const InBall& s, const Ball& ball, bool sup) {
    const int d = ball.center.dim;
    if (d == 1) return fit_direction(s, ball, Point{1.0}, sup);
    const auto dirs = candidate_directions(s, d);
    std::vector<Fit> fits;
    for (const auto& dir : dirs) fits.push_back(fit_direction(s, ball, dir, sup));
    if (d == 2) {
        constexpr int kScan = 180;
        for (int k = 0; k < kScan; ++k) fits.push_back(fit_direction(s, ball, angle_dir(std::numbers::pi * k / kScan), sup));
        std::stable_sort(fits.begin(), fits.end(), [](const Fit& a, const Fit& b) { return a.value < b.value; });
        Fit best = fits.front();
        const double width = std::numbers::pi / kScan;
        for (std::size_t c = 0; c < std::min<std::size_t>(4, fits.size()); ++c) {
            const double t0 = std::atan2(fits[c].line.dir[1], fits[c].line.dir[0]);
            auto f = [&](double t) { return fit_direction(s, ball, angle_dir(t), sup).value; };
            const double t = golden_min(f, t0 - width, t0 + width, 50);
            Fit cand = fit_direction(s, ball, angle_dir(t), sup);
            if (cand.value < best.value) best = cand;
        }
        return best;
    }
    Fit best = *std::min_element(fits.begin(), fits.end(), [](const Fit& a, const Fit& b) { return a.value < b.value; });
    for (double width : {0.2, 0.05, 0.01}) {
        for (int k = 0; k < d; ++k) {
            Point e(d);
            e[k] = 1.0;
            Point v = e - dot(e, best.line.dir) * best.line.dir;
            const double nv = norm(v);
            if (nv < 1e-9) continue;
            v = (1.0 / nv) * v;
            const Point u = best.line.dir;
            auto rot = [&](double phi) { return std::cos(phi) * u + std::sin(phi) * v; };
            auto f = [&](double phi) { return fit_direction(s, ball, rot(phi), sup).value; };
            const double phi = golden_min(f, -width, width, 40);
            Fit cand = fit_direction(s, ball, rot(phi), sup);
            if (cand.value < best.value) best = cand;
        }
    }
    return best;
}

double term_unilateral(const InBall& s, const Ball& ball, const Line& line, bool sup) {
    if (sup) {
        double mx = 0.0;
        for (const auto& p : s.pts) mx = std::max(mx, line.distance_to(p));
        return mx / ball.radius;
    }
    std::vector<double> terms(s.pts.size());
    for (std::size_t i = 0; i < s.pts.size(); ++i) terms[i] = s.w[i] * line.distance_to(s.pts[i]);
    return pairwise_sum(terms) / (ball.radius * s.mass);
}

double term_bilateral(const DiscreteMeasure& m, const Ball& ball, const Line& line, bool sup) {
    const auto [mid, half] = line.chord(ball);
    if (half < 0.0) return 0.0;
    const double r = ball.radius;
    if (sup) {
        double mx = 0.0;
        for (int k = 0; k <= kBilateralSamples; ++k) {
            const Point p = mid + (-half + 2.0 * half * k / kBilateralSamples) * line.dir;
            mx = std::max(mx, m.distance_to_support(p));
        }
        return mx / r;
    }
    std::vector<double> terms(kBilateralSamples);
    const double step = 2.0 * half / kBilateralSamples;
    for (int k = 0; k < kBilateralSamples; ++k) {
        const Point p = mid + (-half + (k + 0.5) * step) * line.dir;
        terms[static_cast<std::size_t>(k)] = m.distance_to_support(p) * step;
    }
    return pairwise_sum(terms) / (r * r);
}

struct BothLines {
    Fit one, inf;  // minimisers (over both searched lines) of the average and sup objectives
};

BothLines both_lines(const DiscreteMeasure& m, const Ball& ball) {
    const InBall s = collect(m, ball);
    const Fit a = search_line(s, ball, false);
    const Fit b = search_line(s, ball, true);
    BothLines out;
    // Cross-evaluate so that the average coefficient never exceeds the sup one.
    const double a_on_b = term_unilateral(s, ball, b.line, false);
    out.one = a.value <= a_on_b ? a : Fit{a_on_b, b.line};
    const double b_on_a = term_unilateral(s, ball, a.line, true);
    out.inf = b.value <= b_on_a ? b : Fit{b_on_a, a.line};
    return out;
}

}  // namespace

double beta_at(const DiscreteMeasure& m, const Ball& ball, const Line& line, BetaKind kind) {
    const InBall s = collect(m, ball);
    switch (kind) {
        case BetaKind::beta1: return term_unilateral(s, ball, line, false);
        case BetaKind::betainf: return term_unilateral(s, ball, line, true);
        case BetaKind::bbeta1: return term_unilateral(s, ball, line, false) + term_bilateral(m, ball, line, false);
        case BetaKind::bbetainf:
            return term_unilateral(s, ball, line, true) + term_bilateral(m, ball, line, true);
    }
    return 0.0;
}

Line best_line(const DiscreteMeasure& m, const Ball& ball, BetaKind kind) {
    const auto both = both_lines(m, ball);
    return (kind == BetaKind::beta1 || kind == BetaKind::bbeta1) ? both.one.line : both.inf.line;
}

BetaResult beta(const DiscreteMeasure& m, const Ball& ball, BetaKind kind) {
    const auto both = both_lines(m, ball);
    switch (kind) {
        case BetaKind::beta1: return {both.one.value, both.one.line};
        case BetaKind::betainf: return {both.inf.value, both.inf.line};
        case BetaKind::bbeta1: return {beta_at(m, ball, both.one.line, kind), both.one.line};
        case BetaKind::bbetainf: return {beta_at(m, ball, both.inf.line, kind), both.inf.line};
    }
    return {};
}

namespace {

struct FlatEval {
    double value = 0.0;
    double slope = 0.0;  // a subgradient in c (valid for c > 0)
};

FlatEval dist_flat_eval(const DiscreteMeasure& m, const Ball& ball, const Line& line, double c) {
    if (c < 0.0) throw std::invalid_argument("dist_flat: c must be >= 0");
    std::vector<Point> pts;
    std::vector<double> mass;
    for (auto id : m.ball_query(ball)) {
        pts.push_back(m.position(id));
        mass.push_back(m.weight(id));
    }
    const std::size_t n_mu = pts.size();
    const auto [mid, half] = line.chord(ball);
    double step = 0.0;
    if (half > 0.0 && c > 0.0) {
        step = 2.0 * half / kFlatAtoms;
        for (int k = 0; k < kFlatAtoms; ++k) {
            pts.push_back(mid + (-half + (k + 0.5) * step) * line.dir);
            mass.push_back(-c * step);
        }
    }
    const auto sol = signed_transport_dual(pts, mass, ball);
    // The dual is linear in c for a fixed optimal test function f.
    double s = 0.0;
    for (std::size_t k = n_mu; k < pts.size(); ++k) s += sol.f[k];
    return {sol.value, -step * s};
}

}  // namespace

double dist_flat(const DiscreteMeasure& m, const Ball& ball, const Line& line, double c) {
    return dist_flat_eval(m, ball, line, c).value;
}

namespace {

struct LineEval {
    double value = 0.0;
    double c = 0.0;
};

// Exact minimisation of the convex piecewise-linear map c -> dist_flat: bracket
// the sign change of the subgradient, then intersect tangents until the
// tangent lower bound meets the best value found.
LineEval best_c(const DiscreteMeasure& m, const Ball& ball, const Line& line, double mass) {
    LineEval best{dist_flat(m, ball, line, 0.0), 0.0};
    const auto [mid, half] = line.chord(ball);
    if (!(half > 0.0)) return best;
    const double tol = 1e-12 * ball.radius * mass;
    struct Pt {
        double c, v, g;
        bool has_g;
    };
    auto eval = [&](double c) {
        const FlatEval e = dist_flat_eval(m, ball, line, c);
        if (e.value < best.value) best = {e.value, c};
        return Pt{c, e.value, e.slope, true};
    };
    Pt lo{0.0, best.value, 0.0, false};
    Pt hi = eval(0.5 * mass / half);
    for (int k = 0; k < 60 && hi.g < 0.0; ++k) {
        lo = hi;
        hi = eval(2.0 * hi.c);
    }
    for (int it = 0; it < 100 && hi.g != 0.0; ++it) {
        double c = 0.5 * (lo.c + hi.c), lower = -std::numeric_limits<double>::infinity();
        if (lo.has_g) {
            c = (hi.v - lo.v + lo.g * lo.c - hi.g * hi.c) / (lo.g - hi.g);
            c = std::clamp(c, lo.c, hi.c);
            lower = lo.v + lo.g * (c - lo.c);
        } else {
            lower = hi.v - hi.g * hi.c;  // tangent at hi evaluated at c = 0
            if (lo.v <= lower + tol) break;
        }
        if (best.value - lower <= tol || !(hi.c - lo.c > 1e-15 * hi.c)) break;
        const Pt p = eval(c);
        if (p.g < 0.0)
            lo = p;
        else
            hi = p;
    }
    return best;
}

}  // namespace

AlphaResult alpha(const DiscreteMeasure& m, const Ball& ball) {
    const InBall s = collect(m, ball);
    const double r = ball.radius;
    const auto both = both_lines(m, ball);
    AlphaResult best;
    best.value = std::numeric_limits<double>::infinity();
    auto consider = [&](const Line& line) {
        const auto ev = best_c(m, ball, line, s.mass);
        const double v = ev.value / (r * s.mass);
        if (v < best.value) best = {v, line, ev.c};
        return v;
    };
    consider(both.one.line);
    consider(both.inf.line);
    if (ball.center.dim == 2) {
        // Pattern search over (angle, signed offset) with |offset| <= r.
        auto make = [&](double t, double o) {
            const Point dir = angle_dir(t);
            const Point n{-dir[1], dir[0]};
            return Line{ball.center + o * n, dir};
        };
        const Line start = best.line;
        double t = std::atan2(start.dir[1], start.dir[0]);
        const Point n0{-start.dir[1], start.dir[0]};
        double o = std::clamp(dot(start.base - ball.center, n0), -r, r);
        double cur = best.value;
        double dt = 0.1, dofs = 0.1 * r;
        for (int level = 0; level < 5; ++level) {
            bool moved = true;
            for (int guard = 0; moved && guard < 8; ++guard) {
                moved = false;
                const double cand[4][2] = {{t + dt, o}, {t - dt, o}, {t, o + dofs}, {t, o - dofs}};
                for (const auto& cd : cand) {
                    if (std::abs(cd[1]) > r) continue;
                    const double v = consider(make(cd[0], cd[1]));
                    if (v < cur) {
                        cur = v;
                        t = cd[0];
                        o = cd[1];
                        moved = true;
                        break;
                    }
                }
            }
            dt *= 0.5;
            dofs *= 0.5;
        }
    }
    return best;
}

FlatnessRow flatness_row(const DiscreteMeasure& m, const Ball& ball) {
    FlatnessRow row;
    row.ball = ball;
    const auto both = both_lines(m, ball);
    row.beta1 = both.one.value;
    row.betainf = both.inf.value;
    row.bbeta1 = beta_at(m, ball, both.one.line, BetaKind::bbeta1);
    row.bbetainf = beta_at(m, ball, both.inf.line, BetaKind::bbetainf);
    const auto a = alpha(m, ball);
    row.alpha = a.value;
    row.c = a.c;
    row.line = a.line;
    return row;
}

}  // namespace gmt
