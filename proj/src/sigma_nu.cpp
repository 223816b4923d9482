#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "gmt/curve.hpp"
#include "gmt/multiscale.hpp"
#include "gmt/numeric.hpp"

namespace gmt {

namespace {

// Parameter interval of [a, b] (arclength from a) inside the open ball; empty if lo >= hi.
std::pair<double, double> clip(const Point& a, const Point& b, const Point& c, double r) {
    const double len = distance(a, b);
    if (len == 0.0) return {0.0, 0.0};
    const Point u = (1.0 / len) * (b - a);
    const double along = dot(c - a, u);
    const Point perp = (c - a) - along * u;
    const double h2 = dot(perp, perp);
    if (h2 >= r * r) return {0.0, 0.0};
    const double s = std::sqrt(r * r - h2);
    return {std::max(0.0, along - s), std::min(len, along + s)};
}

PolylineMeasure extended_polyline(const CurveChain& chain, int k, std::vector<double> density) {
    Chain c;
    c.vertices = chain.extended_vertices(k);
    c.density = std::move(density);
    return PolylineMeasure(chain.zA.dim, {std::move(c)});
}

// 8-point Gauss-Legendre on [0, 1].
constexpr double kGLx[8] = {0.019855071751231856, 0.10166676129318664, 0.2372337950418355, 0.4082826787521751,
                            0.5917173212478249,   0.7627662049581645,  0.8983332387068134, 0.9801449282487681};
constexpr double kGLw[8] = {0.05061426814518813, 0.11119051722668724, 0.15685332293894363, 0.18134189168918100,
                            0.18134189168918100, 0.15685332293894363, 0.11119051722668724, 0.05061426814518813};

struct PhiSums {
    double weighted = 0.0;  // phi_r * (g sigma)
    double plain = 0.0;     // phi_r * sigma
};

// phi_r convolutions at x over the listed segments of one chain. The interval is split where
// |y - x| = r/2 so each Gauss panel sees one branch of phi.
PhiSums phi_sums(const Chain& ch, const std::vector<double>& g, const std::vector<std::size_t>& ids, const Point& x,
                 double r) {
    static const SmoothProfile phi{1.0};
    std::vector<double> w_parts, p_parts;
    for (std::size_t s : ids) {
        const Point &a = ch.vertices[s], &b = ch.vertices[s + 1];
        const auto [lo, hi] = clip(a, b, x, r);
        if (!(hi > lo)) continue;
        const double len = distance(a, b);
        const Point u = (1.0 / len) * (b - a);
        const auto [ilo, ihi] = clip(a, b, x, 0.5 * r);
        std::vector<double> cuts{lo};
        if (ihi > ilo) {
            cuts.push_back(ilo);
            cuts.push_back(ihi);
        }
        cuts.push_back(hi);
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            const double t0 = cuts[i], t1 = cuts[i + 1];
            if (!(t1 > t0)) continue;
            for (int q = 0; q < 8; ++q) {
                const double t = t0 + (t1 - t0) * kGLx[q];
                acc += (t1 - t0) * kGLw[q] * phi.phi(distance(a + t * u, x) / r) / r;
            }
        }
        p_parts.push_back(ch.density[s] * acc);
        w_parts.push_back(g[s] * ch.density[s] * acc);
    }
    return {pairwise_sum(w_parts), pairwise_sum(p_parts)};
}

std::vector<std::size_t> all_ids(const Chain& ch) {
    std::vector<std::size_t> ids(ch.density.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    return ids;
}

const Chain& single_chain(const PolylineMeasure& m) {
    if (m.chains().size() != 1) throw std::invalid_argument("expected a polyline with one chain");
    return m.chains().front();
}

}  // namespace

NuMeasure build_nu(const CurveChain& chain, int k, const DiscreteMeasure& m) {
    const PolyCurve& curve = chain.gen(k);
    const PartitionOfUnity pou(curve);
    const std::size_t n = curve.size();
    const std::vector<Point> ext = chain.extended_vertices(k);

    NuMeasure out;
    out.c.assign(n + 1, 0.0);
    out.atom_mass.assign(n + 1, 0.0);
    out.line_integral.assign(n + 1, 0.0);

    // Line integrals of theta_j over Gamma_ex, piece by piece inside 3/2 B_j.
    for (std::size_t j = 1; j <= n; ++j) {
        const Point& z = pou.center(j);
        const double r = 1.5 * pou.ell(j);
        std::vector<double> parts;
        for (std::size_t s = 0; s + 1 < ext.size(); ++s) {
            const Point &a = ext[s], &b = ext[s + 1];
            const auto [lo, hi] = clip(a, b, z, r);
            if (!(hi > lo)) continue;
            const Point u = (1.0 / distance(a, b)) * (b - a);
            parts.push_back(adaptive_simpson([&](double t) { return pou.theta(j, a + t * u); }, lo, hi,
                                             1e-8 * pou.ell(j)));
        }
        out.line_integral[j] = pairwise_sum(parts);
    }

    // Atom side in one pass.
    std::vector<std::vector<double>> per_j(n + 1);
    std::vector<double> lost;
    for (std::size_t i = 0; i < m.size(); ++i) {
        double covered = 0.0;
        for (const auto& [j, t] : pou.thetas(m.position(i))) {
            per_j[j].push_back(t * m.weight(i));
            covered += t;
        }
        lost.push_back((1.0 - covered) * m.weight(i));
    }
    out.uncovered_mass = pairwise_sum(lost);
    for (std::size_t j = 1; j <= n; ++j) {
        out.atom_mass[j] = pairwise_sum(per_j[j]);
        if (out.line_integral[j] > 0.0) {
            out.c[j] = out.atom_mass[j] / out.line_integral[j];
        } else if (out.atom_mass[j] > 0.0) {
            throw std::runtime_error("build_nu: bump with atom mass but no curve length (degenerate geometry)");
        }
    }
    out.c[0] = out.c[1];

    // Density sampled at midpoints of the refined pieces.
    const PolylineMeasure base = extended_polyline(chain, k, std::vector<double>(ext.size() - 1, 1.0));
    Chain fine = base.refine(NuMeasure::kRefine).chains().front();
    for (std::size_t s = 0; s < fine.density.size(); ++s) {
        const Point x = lerp(fine.vertices[s], fine.vertices[s + 1], 0.5);
        std::vector<double> parts;
        double rest = 1.0;
        for (const auto& [j, t] : pou.thetas(x)) {
            parts.push_back(out.c[j] * t);
            rest -= t;
        }
        parts.push_back(out.c[0] * std::max(0.0, rest));
        fine.density[s] = pairwise_sum(parts);
    }
    out.nu = PolylineMeasure(chain.zA.dim, {std::move(fine)});
    return out;
}

SigmaMeasure build_sigma(const CurveChain& chain, int k) {
    SigmaMeasure out;
    std::vector<double> g{1.0}, has{0.0};
    out.generation_mass.push_back(chain.gen(1).length(0));
    for (int m = 1; m < k; ++m) {
        const PolyCurve &cur = chain.gen(m), &nxt = chain.gen(m + 1);
        std::vector<double> ng(nxt.size()), nh(nxt.size());
        std::vector<std::vector<double>> pieces(cur.size());
        for (std::size_t h = 0; h < nxt.size(); ++h) {
            const Segment& s = nxt.segments[h];
            const std::size_t p = s.parent;
            if (s.origin == SegmentOrigin::copy) {
                ng[h] = g[p];
                nh[h] = has[p];
            } else {
                // Pi_k is affine from the parent onto this piece, stretching by 1/cos.
                const Point u = (1.0 / nxt.length(h)) * (nxt.b(h) - nxt.a(h));
                const Point v = (1.0 / cur.length(p)) * (cur.b(p) - cur.a(p));
                const double cs = dot(u, v);
                const double ang = std::acos(std::clamp(cs, -1.0, 1.0));
                ng[h] = g[p] * cs;
                nh[h] = has[p] + 0.5 * ang * ang;
            }
            pieces[p].push_back(ng[h] * nxt.length(h));
        }
        for (std::size_t p = 0; p < cur.size(); ++p) {
            const double before = g[p] * cur.length(p);
            out.max_ledger_error = std::max(out.max_ledger_error, std::abs(pairwise_sum(pieces[p]) - before) / before);
        }
        g = std::move(ng);
        has = std::move(nh);
        std::vector<double> mass(g.size());
        for (std::size_t h = 0; h < g.size(); ++h) mass[h] = g[h] * nxt.length(h);
        out.generation_mass.push_back(pairwise_sum(mass));
    }
    std::vector<double> dens{1.0};
    dens.insert(dens.end(), g.begin(), g.end());
    dens.push_back(1.0);
    out.sigma = extended_polyline(chain, k, std::move(dens));
    out.density.g = std::move(g);
    out.density.half_angle_sq = std::move(has);
    return out;
}

double sampled_growth(const PolylineMeasure& m, const PolyCurve& curve, int samples, std::uint64_t seed, double r_min,
                      double r_max) {
    if (!(r_min > 0.0 && r_max >= r_min)) throw std::invalid_argument("sampled_growth: need 0 < r_min <= r_max");
    std::vector<double> len(curve.size());
    for (std::size_t j = 0; j < len.size(); ++j) len[j] = curve.length(j);
    AliasTable pick(len);
    Rng rng(seed);
    double sup = 0.0;
    for (int s = 0; s < samples; ++s) {
        const std::size_t j = pick.sample(rng);
        const Point x = lerp(curve.a(j), curve.b(j), rng.uniform());
        const double r = std::exp(rng.uniform(std::log(r_min), std::log(r_max)));
        sup = std::max(sup, m.ball_mass(Ball{x, r}) / r);
    }
    return sup;
}

double smoothed_average(const PolylineMeasure& sigma, const std::vector<double>& g, const Point& x, double r) {
    const Chain& ch = single_chain(sigma);
    if (g.size() != ch.density.size()) throw std::invalid_argument("smoothed_average: one g value per segment");
    const PhiSums s = phi_sums(ch, g, all_ids(ch), x, r);
    return s.weighted / s.plain;
}

double d_operator(const PolylineMeasure& sigma, const std::vector<double>& g, const Point& x, double r) {
    return smoothed_average(sigma, g, x, r) - smoothed_average(sigma, g, x, 2.0 * r);
}

DensityRatioStats density_ratio_stats(const PolylineMeasure& nu, const PolylineMeasure& sigma, double c0,
                                      const DensityRatioOptions& opt) {
    const Chain& cn = single_chain(nu);
    const Chain& cs0 = single_chain(sigma);
    const std::size_t factor = cn.density.size() / cs0.density.size();
    if (factor == 0 || factor * cs0.density.size() != cn.density.size())
        throw std::invalid_argument("density_ratio_stats: nu must refine sigma");
    const Chain cs = sigma.refine(static_cast<int>(factor)).chains().front();
    for (std::size_t i = 0; i < cs.vertices.size(); ++i)
        if (distance(cs.vertices[i], cn.vertices[i]) > 1e-12 * (1.0 + norm(cn.vertices[i])))
            throw std::invalid_argument("density_ratio_stats: nu and sigma live on different polylines");

    const std::size_t n = cs.density.size();
    DensityRatioStats st;
    std::vector<double> f(n), dev(n), mass(n), len(n);
    st.f_min = std::numeric_limits<double>::infinity();
    st.f_max = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        if (!(cs.density[s] > 0.0)) throw std::invalid_argument("density_ratio_stats: sigma density must be positive");
        len[s] = distance(cs.vertices[s], cs.vertices[s + 1]);
        f[s] = cn.density[s] / cs.density[s];
        mass[s] = cs.density[s] * len[s];
        dev[s] = (f[s] - c0) * (f[s] - c0) * mass[s];
        st.f_min = std::min(st.f_min, f[s]);
        st.f_max = std::max(st.f_max, f[s]);
    }
    st.l2_deviation = pairwise_sum(dev);
    st.sigma_mass = pairwise_sum(mass);

    double r_min = opt.r_min, r_max = opt.r_max;
    if (r_min <= 0.0) {
        double shortest = std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < cs0.density.size(); ++s)
            shortest = std::min(shortest, distance(cs0.vertices[s], cs0.vertices[s + 1]));
        r_min = 0.25 * shortest;
    }
    if (r_max <= 0.0) r_max = pairwise_sum(len) / 3.0;
    if (opt.samples <= 0 || !(r_max > r_min)) return st;

    const int steps = std::max(1, static_cast<int>(std::ceil(opt.per_octave * std::log2(r_max / r_min))));
    const double dlog = std::log(r_max / r_min) / steps;

    // Sample points at sigma-mass quantiles.
    std::vector<double> cum(n + 1, 0.0);
    for (std::size_t s = 0; s < n; ++s) cum[s + 1] = cum[s] + mass[s];
    std::vector<double> rows;
    for (int i = 0; i < opt.samples; ++i) {
        const double target = (i + 0.5) / opt.samples * cum[n];
        const std::size_t s = std::min<std::size_t>(
            n - 1, static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), target) - cum.begin()) - 1);
        const double frac = mass[s] > 0.0 ? (target - cum[s]) / mass[s] : 0.5;
        const Point x = lerp(cs.vertices[s], cs.vertices[s + 1], std::clamp(frac, 0.0, 1.0));

        // Segments by distance from x so each radius scans a prefix.
        std::vector<std::pair<double, std::size_t>> near(n);
        for (std::size_t t = 0; t < n; ++t)
            near[t] = {point_segment_distance(x, cs.vertices[t], cs.vertices[t + 1]), t};
        std::sort(near.begin(), near.end());
        auto within = [&](double r) {
            std::vector<std::size_t> ids;
            for (const auto& [dd, t] : near) {
                if (dd >= r) break;
                ids.push_back(t);
            }
            std::sort(ids.begin(), ids.end());
            return ids;
        };
        auto S = [&](double r) {
            const PhiSums p = phi_sums(cs, f, within(r), x, r);
            return p.weighted / p.plain;
        };
        std::vector<double> vals;
        for (int q = 0; q <= steps; ++q) {
            const double r = r_min * std::exp(q * dlog);
            const double D = S(r) - S(2.0 * r);
            st.max_abs_D = std::max(st.max_abs_D, std::abs(D));
            const double w = (q == 0 || q == steps) ? 0.5 : 1.0;
            vals.push_back(w * D * D * dlog);
        }
        rows.push_back(pairwise_sum(vals) * cum[n] / opt.samples);
    }
    st.sqfn_mass = pairwise_sum(rows);
    return st;
}

}  // namespace gmt
