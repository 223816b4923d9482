#include "gmt/curve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "gmt/flatness.hpp"
#include "gmt/numeric.hpp"
#include "json.hpp"

namespace gmt {

namespace {

Point unit(const Point& v) { return (1.0 / norm(v)) * v; }

// Angle between two nonzero vectors, stable near 0 and pi.
double vector_angle(const Point& u, const Point& v) {
    const Point a = unit(u), b = unit(v);
    return 2.0 * std::atan2(norm(a - b), norm(a + b));
}

// Angle between the lines spanned by u and v, in [0, pi/2].
double line_angle(const Point& u, const Point& v) {
    const double t = vector_angle(u, v);
    return std::min(t, std::numbers::pi - t);
}

}  // namespace

const char* rule_name(SegmentRule r) {
    switch (r) {
        case SegmentRule::none: return "none";
        case SegmentRule::A: return "A";
        case SegmentRule::B: return "B";
        case SegmentRule::C: return "C";
        case SegmentRule::frozen: return "frozen";
    }
    return "?";
}

const char* origin_name(SegmentOrigin o) {
    switch (o) {
        case SegmentOrigin::root: return "root";
        case SegmentOrigin::copy: return "copy";
        case SegmentOrigin::c_left: return "C-left";
        case SegmentOrigin::c_right: return "C-right";
    }
    return "?";
}

double PolyCurve::total_length() const {
    std::vector<double> parts(segments.size());
    for (std::size_t j = 0; j < segments.size(); ++j) parts[j] = length(j);
    return pairwise_sum(parts);
}

std::size_t PolyCurve::locate(const Point& x, double tol) const {
    for (std::size_t j = 0; j < segments.size(); ++j)
        if (point_segment_distance(x, a(j), b(j)) <= tol) return j;
    return SIZE_MAX;
}

Point CurveChain::axis() const { return unit(zB - zA); }

std::vector<Point> CurveChain::extended_vertices(int k) const {
    const PolyCurve& c = gen(k);
    const Point u = axis();
    std::vector<Point> v;
    v.reserve(c.vertices.size() + 2);
    v.push_back(zA - d0 * u);
    v.insert(v.end(), c.vertices.begin(), c.vertices.end());
    v.push_back(zB + d0 * u);
    return v;
}

CurveChain build_curves(const DiscreteMeasure& m, const std::vector<StopCell>& stop_cells, double eps0, int k_max) {
    if (m.size() < 2) throw std::invalid_argument("build_curves: needs at least two atoms");
    if (!(eps0 > 0.0 && eps0 <= 0.1)) throw std::invalid_argument("build_curves: eps0 must lie in (0, 0.1]");
    if (k_max < 1) throw std::invalid_argument("build_curves: k_max must be >= 1");

    CurveChain ch;
    ch.eps0 = eps0;
    const auto [ia, ib] = m.diameter_pair();
    ch.atom_A = ia;
    ch.atom_B = ib;
    ch.zA = m.position(ia);
    ch.zB = m.position(ib);
    ch.d0 = distance(ch.zA, ch.zB);

    PolyCurve g1;
    g1.k = 1;
    g1.vertices = {ch.zA, ch.zB};
    g1.vertex_atom = {ia, ib};
    g1.segments.resize(1);
    ch.gens.push_back(std::move(g1));

    const double lo_bound = 1.0 / 3.0, hi_bound = 1.0 / std::numbers::sqrt2;
    for (int k = 1; k < k_max; ++k) {
        PolyCurve& cur = ch.gens.back();
        PolyCurve next;
        next.k = k + 1;
        const double thr_a = std::pow(2.0, -(k + 1) / 2.0) * ch.d0;
        bool split = false;
        for (std::size_t j = 0; j < cur.size(); ++j) {
            Segment& s = cur.segments[j];
            const Point &a = cur.a(j), &b = cur.b(j);
            const double len = cur.length(j);
            next.vertices.push_back(a);
            next.vertex_atom.push_back(cur.vertex_atom[j]);

            if (len <= thr_a) {
                s.rule = SegmentRule::A;
            } else if (std::any_of(stop_cells.begin(), stop_cells.end(), [&](const StopCell& q) {
                           return point_segment_distance(q.center, a, b) <= q.radius && len <= q.ell;
                       })) {
                s.rule = SegmentRule::B;
            } else {
                const Point z = lerp(a, b, 0.5);
                const std::size_t p_id = m.nearest(z);
                const Point& p = m.position(p_id);
                s.split_offset = distance(p, z);
                const double t = dot(p - a, b - a) / (len * len);
                const bool at_end = p_id == cur.vertex_atom[j] || p_id == cur.vertex_atom[j + 1];
                if (s.split_offset > 10.0 * eps0 * len || at_end || !(t > 0.0 && t < 1.0)) {
                    s.rule = SegmentRule::frozen;
                    ++ch.frozen;
                } else {
                    s.rule = SegmentRule::C;
                    s.split_atom = p_id;
                    split = true;
                    next.segments.push_back(Segment{j, SegmentOrigin::c_left});
                    next.segments.push_back(Segment{j, SegmentOrigin::c_right});
                    next.vertices.push_back(p);
                    next.vertex_atom.push_back(p_id);
                    for (double r : {distance(a, p) / len, distance(p, b) / len}) {
                        ch.split_min = std::min(ch.split_min, r);
                        ch.split_max = std::max(ch.split_max, r);
                        if (!(r > lo_bound && r < hi_bound)) ++ch.split_violations;
                    }
                    continue;
                }
            }
            next.segments.push_back(Segment{j, SegmentOrigin::copy});
        }
        next.vertices.push_back(cur.vertices.back());
        next.vertex_atom.push_back(cur.vertex_atom.back());
        if (!split) break;
        ch.gens.push_back(std::move(next));
    }
    return ch;
}

Point pi_map(const CurveChain& chain, int k, const Point& x) {
    if (k < 1 || k >= chain.generations()) throw std::invalid_argument("pi_map: generation out of range");
    const PolyCurve& cur = chain.gen(k);
    const std::size_t j = cur.locate(x);
    if (j == SIZE_MAX) {
        // The two rays of Gamma_ex are fixed.
        const Point u = chain.axis();
        const double t = dot(x - chain.zA, u);
        const Point foot = chain.zA + t * u;
        if (distance(x, foot) <= 1e-9 && (t <= 0.0 || t >= chain.d0)) return x;
        throw std::invalid_argument("pi_map: point is not on the curve");
    }
    const Segment& s = cur.segments[j];
    if (s.rule != SegmentRule::C) return x;
    const PolyCurve& nxt = chain.gen(k + 1);
    std::size_t h = 0;
    while (nxt.segments[h].parent != j) ++h;
    const Point &a = cur.a(j), &b = cur.b(j), &p = nxt.b(h);
    if (x == a || x == b) return x;
    const double len = cur.length(j);
    const Point u = (1.0 / len) * (b - a);
    const double t = dot(x - a, u);
    if (t <= 0.0) return a;
    if (t >= len) return b;
    const double tp = dot(p - a, u);
    if (t <= tp) return a + (t / tp) * (p - a);
    return p + ((t - tp) / (len - tp)) * (b - p);
}

double distance_to_curve(const PolyCurve& c, const Point& x) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c.size(); ++j) best = std::min(best, point_segment_distance(x, c.a(j), c.b(j)));
    return best;
}

CurveDiagnostics curve_diagnostics(const CurveChain& chain, int k, const DiscreteMeasure* m, int ad_samples,
                                   std::uint64_t seed) {
    const PolyCurve& c = chain.gen(k);
    const std::size_t n = c.size();
    CurveDiagnostics d;
    d.k = k;
    d.segments = n;

    std::vector<double> len(n);
    for (std::size_t j = 0; j < n; ++j) len[j] = c.length(j);

    for (std::size_t j = 0; j < n; ++j) {
        const Point z = c.midpoint(j);
        const double half = 0.5 * len[j] * (1.0 - 1e-9);
        for (std::size_t h = 0; h < n; ++h)
            if (h != j && point_segment_distance(z, c.a(h), c.b(h)) < half) ++d.half_ball_violations;
        for (std::size_t h = j + 1; h < n; ++h)
            if (distance(z, c.midpoint(h)) < (len[j] + len[h]) / 6.0) ++d.sixth_ball_overlaps;
    }

    for (std::size_t i = 1; i + 1 < c.vertices.size(); ++i) {
        const double ang = vector_angle(c.vertices[i - 1] - c.vertices[i], c.vertices[i + 1] - c.vertices[i]);
        d.max_angle_dev = std::max(d.max_angle_dev, std::numbers::pi - ang);
    }

    const double floor = std::pow(2.0, -(k + 2) / 2.0) * chain.d0;
    d.min_floor_ratio = std::numeric_limits<double>::infinity();
    for (double l : len) {
        if (l < floor) ++d.length_floor_violations;
        d.min_floor_ratio = std::min(d.min_floor_ratio, l / floor);
    }

    if (k < chain.generations()) {
        for (std::size_t j = 0; j < n; ++j) {
            if (c.segments[j].rule != SegmentRule::C) continue;
            // The largest displacement is at the foot of the inserted vertex.
            const PolyCurve& nxt = chain.gen(k + 1);
            std::size_t h = 0;
            while (nxt.segments[h].parent != j) ++h;
            const Line line = line_through(c.a(j), c.b(j));
            d.max_pi_displacement =
                std::max(d.max_pi_displacement, line.distance_to(nxt.b(h)) / (chain.eps0 * len[j]));
        }
    }

    // Ancestry sums along the genealogy.
    std::vector<double> ang{0.0}, b4{0.0};
    for (int g = 1; g <= k; ++g) {
        const PolyCurve& cg = chain.gen(g);
        std::vector<double> na(cg.size(), 0.0), nb(cg.size(), 0.0);
        for (std::size_t j = 0; j < cg.size(); ++j) {
            double beta4 = 0.0;
            if (m) {
                const double bi = beta_at(*m, Ball{cg.midpoint(j), cg.length(j)}, line_through(cg.a(j), cg.b(j)),
                                          BetaKind::betainf);
                beta4 = bi * bi * bi * bi;
            }
            if (g == 1) {
                nb[j] = beta4;
                continue;
            }
            const std::size_t par = cg.segments[j].parent;
            const PolyCurve& pg = chain.gen(g - 1);
            const double a = line_angle(cg.b(j) - cg.a(j), pg.b(par) - pg.a(par));
            na[j] = ang[par] + a * a;
            nb[j] = b4[par] + beta4;
        }
        ang = std::move(na);
        b4 = std::move(nb);
    }
    d.max_ancestry_angle_sq = *std::max_element(ang.begin(), ang.end());
    d.max_ancestry_beta4 = *std::max_element(b4.begin(), b4.end());

    if (ad_samples > 0) {
        Rng rng(seed);
        AliasTable pick(len);
        const double r_lo = *std::min_element(len.begin(), len.end()) / 10.0, r_hi = chain.d0;
        d.ad_upper = 0.0;
        d.ad_lower = std::numeric_limits<double>::infinity();
        for (int s = 0; s < ad_samples; ++s) {
            const std::size_t j = pick.sample(rng);
            const Point x = lerp(c.a(j), c.b(j), rng.uniform());
            const double r = std::exp(rng.uniform(std::log(r_lo), std::log(r_hi)));
            std::vector<double> parts;
            for (std::size_t h = 0; h < n; ++h) {
                const double l = segment_ball_length(c.a(h), c.b(h), Ball{x, r});
                if (l > 0.0) parts.push_back(l);
            }
            const double ratio = pairwise_sum(parts) / (2.0 * r);
            d.ad_upper = std::max(d.ad_upper, ratio);
            d.ad_lower = std::min(d.ad_lower, ratio);
        }
    }
    return d;
}

double proximity_ratio(const CurveChain& chain, int k, const DiscreteMeasure& m, const std::vector<double>& d) {
    if (d.size() != m.size()) throw std::invalid_argument("proximity_ratio: one d value per atom required");
    const PolyCurve& c = chain.gen(k);
    const double floor = std::pow(2.0, -k / 2.0) * chain.d0;
    double worst = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
        worst = std::max(worst, distance_to_curve(c, m.position(i)) / (chain.eps0 * std::max(d[i], floor)));
    return worst;
}

// Partition of unity.

double PartitionOfUnity::bump(double s) {
    if (s <= 1.0) return 1.0;
    if (s >= 1.5) return 0.0;
    return 1.0 - smoothstep5((s - 1.0) / 0.5);
}

std::array<std::int64_t, 2> PartitionOfUnity::key(const Point& x) const {
    return {static_cast<std::int64_t>(std::floor(x[0] / cell_)), static_cast<std::int64_t>(std::floor(x[1] / cell_))};
}

PartitionOfUnity::PartitionOfUnity(const PolyCurve& curve) {
    const std::size_t n = curve.size();
    centers_.reserve(n);
    ell_.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        centers_.push_back(curve.midpoint(j));
        ell_.push_back(curve.length(j));
    }
    std::vector<double> sorted = ell_;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n / 2), sorted.end());
    cell_ = std::max(3.0 * sorted[n / 2], 1e-300);
    // Index on the first two coordinates; every ball goes into each cell its box meets.
    for (std::size_t j = 0; j < n; ++j) {
        const double r = 1.5 * ell_[j];
        Point lo = centers_[j], hi = centers_[j];
        lo[0] -= r;
        lo[1] -= r;
        hi[0] += r;
        hi[1] += r;
        const auto kl = key(lo), kh = key(hi);
        for (std::int64_t a = kl[0]; a <= kh[0]; ++a)
            for (std::int64_t b = kl[1]; b <= kh[1]; ++b) grid_[{a, b}].push_back(j);
    }
}

std::vector<std::size_t> PartitionOfUnity::candidates(const Point& x) const {
    std::vector<std::size_t> out;
    const auto it = grid_.find(key(x));
    if (it == grid_.end()) return out;
    for (std::size_t j : it->second)
        if (distance(x, centers_[j]) < 1.5 * ell_[j]) out.push_back(j);
    return out;
}

double PartitionOfUnity::theta_tilde(std::size_t j, const Point& x) const {
    return bump(distance(x, centers_.at(j - 1)) / ell_[j - 1]);
}

std::vector<std::pair<std::size_t, double>> PartitionOfUnity::thetas(const Point& x) const {
    std::vector<std::pair<std::size_t, double>> out;
    double rest = 1.0;  // 1 - sum of the thetas so far
    for (std::size_t h : candidates(x)) {
        const double t = bump(distance(x, centers_[h]) / ell_[h]);
        const double v = rest * t;
        if (v > 0.0) out.push_back({h + 1, v});
        rest *= 1.0 - t;
    }
    return out;
}

double PartitionOfUnity::theta(std::size_t j, const Point& x) const {
    double rest = 1.0;
    for (std::size_t h : candidates(x)) {
        const double t = bump(distance(x, centers_[h]) / ell_[h]);
        if (j != 0 && h + 1 == j) return rest * t;
        rest *= 1.0 - t;
    }
    return j == 0 ? rest : 0.0;
}

double PartitionOfUnity::sum(const Point& x) const {
    std::vector<double> v;
    for (const auto& [j, t] : thetas(x)) v.push_back(t);
    return pairwise_sum(v);
}

bool PartitionOfUnity::covered(const Point& x) const {
    for (std::size_t h : candidates(x))
        if (distance(x, centers_[h]) < ell_[h]) return true;
    return false;
}

std::string curves_to_json_text(const CurveChain& chain) {
    using ojson = nlohmann::ordered_json;
    auto pt = [](const Point& p) {
        ojson a = ojson::array();
        for (int i = 0; i < p.dim; ++i) a.push_back(p[i]);
        return a;
    };
    ojson j;
    j["d0"] = chain.d0;
    j["eps0"] = chain.eps0;
    j["atom_A"] = chain.atom_A;
    j["atom_B"] = chain.atom_B;
    j["frozen"] = chain.frozen;
    j["split_min"] = chain.split_min;
    j["split_max"] = chain.split_max;
    ojson gens = ojson::array();
    for (const PolyCurve& c : chain.gens) {
        ojson g;
        g["k"] = c.k;
        ojson verts = ojson::array();
        for (const Point& v : c.vertices) verts.push_back(pt(v));
        g["vertices"] = std::move(verts);
        g["vertex_atoms"] = c.vertex_atom;
        ojson segs = ojson::array();
        for (const Segment& s : c.segments) {
            ojson e;
            e["parent"] = s.parent == SIZE_MAX ? ojson(nullptr) : ojson(s.parent);
            e["origin"] = origin_name(s.origin);
            e["rule"] = rule_name(s.rule);
            if (s.split_atom != SIZE_MAX) e["split_atom"] = s.split_atom;
            segs.push_back(std::move(e));
        }
        g["segments"] = std::move(segs);
        gens.push_back(std::move(g));
    }
    j["generations"] = std::move(gens);
    return j.dump(1);
}

}  // namespace gmt
