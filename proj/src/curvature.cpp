#include "gmt/curvature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gmt/numeric.hpp"

namespace gmt {

namespace {

void require_plane(const DiscreteMeasure& m) {
    if (m.dim() != 2) throw std::invalid_argument("curvature: measure must be planar (dim 2)");
}

// Error-free transformations.
inline void two_sum(double a, double b, double& s, double& e) {
    s = a + b;
    const double bv = s - a;
    e = (a - (s - bv)) + (b - bv);
}

inline void two_prod(double a, double b, double& p, double& e) {
    p = a * b;
    e = std::fma(a, b, -p);
}

// Sign of a sum of doubles, exactly, through a nonoverlapping expansion.
int exact_sign(const double* terms, int n) {
    double exp[32];
    int len = 0;
    for (int t = 0; t < n; ++t) {
        double q = terms[t];
        int out = 0;
        for (int k = 0; k < len; ++k) {
            double s, e;
            two_sum(q, exp[k], s, e);
            if (e != 0.0) exp[out++] = e;
            q = s;
        }
        if (q != 0.0) exp[out++] = q;
        len = out;
    }
    if (len == 0) return 0;
    return exp[len - 1] > 0.0 ? 1 : -1;
}

// Planar determinant (b - a) x (c - a) with its fast error bound.
inline double orient_fast(const Point& a, const Point& b, const Point& c, bool& certain) {
    const double detleft = (b[0] - a[0]) * (c[1] - a[1]);
    const double detright = (b[1] - a[1]) * (c[0] - a[0]);
    const double det = detleft - detright;
    constexpr double eps = 1.1102230246251565e-16;
    const double bound = (3.0 + 16.0 * eps) * eps * (std::abs(detleft) + std::abs(detright));
    certain = std::abs(det) > bound;
    return det;
}

// menger from the determinant and the three side lengths.
inline double menger_planar(const Point& x, const Point& y, const Point& z, double dxy, double dxz, double dyz) {
    if (dxy == 0.0 || dxz == 0.0 || dyz == 0.0) return 0.0;
    bool certain = false;
    const double det = orient_fast(x, y, z, certain);
    if (!certain && orient2d_sign(x, y, z) == 0) return 0.0;
    return 2.0 * std::abs(det) / (dxy * dxz * dyz);
}

}  // namespace

int orient2d_sign(const Point& a, const Point& b, const Point& c) {
    // (bx - ax)(cy - ay) - (by - ay)(cx - ax) expanded into six exact products.
    const double f[6][2] = {{b[0], c[1]}, {-b[0], a[1]}, {-a[0], c[1]},
                            {-b[1], c[0]}, {b[1], a[0]}, {a[1], c[0]}};
    double terms[12];
    for (int k = 0; k < 6; ++k) two_prod(f[k][0], f[k][1], terms[2 * k], terms[2 * k + 1]);
    return exact_sign(terms, 12);
}

double menger(const Point& x, const Point& y, const Point& z) {
    const double dxy = distance(x, y), dxz = distance(x, z), dyz = distance(y, z);
    if (dxy == 0.0 || dxz == 0.0 || dyz == 0.0) return 0.0;
    if (x.dim == 2) return menger_planar(x, y, z, dxy, dxz, dyz);
    // Twice the triangle area from the Lagrange identity in any dimension.
    const Point a = y - x, b = z - x;
    double s = 0.0;
    for (int i = 0; i < x.dim; ++i)
        for (int j = i + 1; j < x.dim; ++j) {
            const double t = a[i] * b[j] - a[j] * b[i];
            s += t * t;
        }
    return 2.0 * std::sqrt(s) / (dxy * dxz * dyz);
}

CurvatureReport curvature_total(const DiscreteMeasure& m, double eps, const CurvatureOptions& opt) {
    require_plane(m);
    if (!(eps >= 0.0)) throw std::invalid_argument("curvature: eps must be >= 0");
    CurvatureReport rep;
    rep.eps = eps;
    rep.mode = opt.mode;
    const std::size_t n = m.size();
    const auto& x = m.positions();
    const auto& w = m.weights();

    if (opt.mode == CurvatureMode::exact) {
        if (n > kExactLimit && !opt.force)
            throw std::invalid_argument("curvature: exact mode above 5000 atoms needs force");
        const bool table = n <= 4096;
        std::vector<double> dist;
        if (table) {
            dist.assign(n * n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j) dist[i * n + j] = dist[j * n + i] = distance(x[i], x[j]);
        }
        auto d = [&](std::size_t i, std::size_t j) { return table ? dist[i * n + j] : distance(x[i], x[j]); };
        std::vector<double> partial(n, 0.0);
        std::uint64_t count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = i + 1; j < n; ++j) {
                const double dij = d(i, j);
                if (!(dij > eps)) continue;
                double row = 0.0;
                for (std::size_t k = j + 1; k < n; ++k) {
                    const double dik = d(i, k), djk = d(j, k);
                    if (!(dik > eps && djk > eps)) continue;
                    ++count;
                    const double c = menger_planar(x[i], x[j], x[k], dij, dik, djk);
                    row += c * c * w[k];
                }
                acc += row * w[j];
            }
            partial[i] = acc * w[i];
        }
        rep.c2 = 6.0 * pairwise_sum(partial);
        rep.triples_evaluated = 6 * count;
        return rep;
    }

    rep.samples = opt.samples;
    rep.seed = opt.seed;
    if (n < 3 || opt.samples == 0) return rep;
    const AliasTable alias(w);
    Rng rng(opt.seed);
    const double W = m.total_mass();
    double mean = 0.0, m2 = 0.0;  // Welford
    for (std::uint64_t s = 0; s < opt.samples; ++s) {
        const std::size_t i = alias.sample(rng), j = alias.sample(rng), k = alias.sample(rng);
        double v = 0.0;
        if (i == j || i == k || j == k) {
            ++rep.degenerate_triples;
        } else {
            const double dij = distance(x[i], x[j]), dik = distance(x[i], x[k]), djk = distance(x[j], x[k]);
            if (dij > eps && dik > eps && djk > eps) {
                ++rep.triples_evaluated;
                const double c = menger_planar(x[i], x[j], x[k], dij, dik, djk);
                v = c * c;
            }
        }
        const double delta = v - mean;
        mean += delta / static_cast<double>(s + 1);
        m2 += delta * (v - mean);
    }
    const double scale = W * W * W;
    rep.c2 = scale * mean;
    const double var = opt.samples > 1 ? m2 / static_cast<double>(opt.samples - 1) : 0.0;
    rep.std_error = scale * std::sqrt(var / static_cast<double>(opt.samples));
    return rep;
}

std::complex<double> cauchy_transform(const DiscreteMeasure& m, const std::vector<double>& f, const Point& z,
                                      double eps) {
    require_plane(m);
    if (!(eps > 0.0)) throw std::invalid_argument("cauchy_transform: eps must be > 0");
    if (!f.empty() && f.size() != m.size()) throw std::invalid_argument("cauchy_transform: f size mismatch");
    double re = 0.0, im = 0.0;
    for (std::size_t j = 0; j < m.size(); ++j) {
        const Point& p = m.position(j);
        const double dx = z[0] - p[0], dy = z[1] - p[1];
        const double r2 = dx * dx + dy * dy;
        if (!(std::sqrt(r2) > eps)) continue;
        const double a = (f.empty() ? 1.0 : f[j]) * m.weight(j) / r2;
        re += a * dx;
        im -= a * dy;
    }
    return {re, im};
}

double growth_constant(const DiscreteMeasure& m, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("growth_constant: eps must be > 0");
    double best = 0.0;
    std::vector<std::pair<double, double>> row;
    for (std::size_t i = 0; i < m.size(); ++i) {
        row.clear();
        for (std::size_t j = 0; j < m.size(); ++j) row.emplace_back(distance(m.position(i), m.position(j)), m.weight(j));
        std::sort(row.begin(), row.end());
        // mass(r)/r is decreasing between jumps, so the sup over r >= eps sits at eps or at a jump.
        double mass = 0.0;
        std::size_t k = 0;
        while (k < row.size() && row[k].first <= eps) mass += row[k++].second;
        best = std::max(best, mass / eps);
        while (k < row.size()) {
            const double r = row[k].first;
            while (k < row.size() && row[k].first == r) mass += row[k++].second;
            best = std::max(best, mass / r);
        }
    }
    return best;
}

MVReport mv_identity(const DiscreteMeasure& m, double eps) {
    require_plane(m);
    MVReport rep;
    rep.eps = eps;
    std::vector<double> terms(m.size());
    for (std::size_t j = 0; j < m.size(); ++j) terms[j] = m.weight(j) * std::norm(cauchy_transform(m, {}, m.position(j), eps));
    rep.lhs = pairwise_sum(terms);
    rep.rhs_curv = curvature_total(m, eps).c2 / 6.0;
    rep.residual = rep.lhs - rep.rhs_curv;
    rep.growth_const = growth_constant(m, eps);
    return rep;
}

double energy_cancellation(const DiscreteMeasure& m, double eps) {
    require_plane(m);
    std::vector<double> re(m.size()), im(m.size());
    for (std::size_t j = 0; j < m.size(); ++j) {
        const auto c = cauchy_transform(m, {}, m.position(j), eps);
        re[j] = m.weight(j) * c.real();
        im[j] = m.weight(j) * c.imag();
    }
    return std::hypot(pairwise_sum(re), pairwise_sum(im));
}

}  // namespace gmt
