#include "gmt/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "gmt/numeric.hpp"

namespace gmt {

Point::Point(std::initializer_list<double> xs) {
    if (xs.size() == 0 || xs.size() > static_cast<std::size_t>(kMaxDim))
        throw std::invalid_argument("Point: dimension must be in [1, 8]");
    dim = static_cast<int>(xs.size());
    std::copy(xs.begin(), xs.end(), c.begin());
}

bool operator==(const Point& a, const Point& b) {
    if (a.dim != b.dim) return false;
    for (int i = 0; i < a.dim; ++i)
        if (a[i] != b[i]) return false;
    return true;
}

Point operator+(const Point& a, const Point& b) {
    Point r(a.dim);
    for (int i = 0; i < a.dim; ++i) r[i] = a[i] + b[i];
    return r;
}

Point operator-(const Point& a, const Point& b) {
    Point r(a.dim);
    for (int i = 0; i < a.dim; ++i) r[i] = a[i] - b[i];
    return r;
}

Point operator*(double s, const Point& a) {
    Point r(a.dim);
    for (int i = 0; i < a.dim; ++i) r[i] = s * a[i];
    return r;
}

double dot(const Point& a, const Point& b) {
    double s = 0.0;
    for (int i = 0; i < a.dim; ++i) s += a[i] * b[i];
    return s;
}

double norm(const Point& a) { return std::sqrt(dot(a, a)); }

double distance(const Point& a, const Point& b) {
    double s = 0.0;
    for (int i = 0; i < a.dim; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

Point lerp(const Point& a, const Point& b, double t) {
    Point r(a.dim);
    for (int i = 0; i < a.dim; ++i) r[i] = a[i] + t * (b[i] - a[i]);
    return r;
}

bool ball_inside(const Ball& a, const Ball& b) {
    return distance(a.center, b.center) + a.radius <= b.radius;
}

void ScaleRange::validate() const {
    if (!(r_min > 0.0) || !std::isfinite(r_min))
        throw std::invalid_argument("ScaleRange: r_min must be positive and finite");
    if (!(r_max > r_min)) throw std::invalid_argument("ScaleRange: r_max must exceed r_min");
}

// ---------------------------------------------------------------------------

std::size_t DiscreteMeasure::CellHash::operator()(const CellKey& key) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (auto v : key.k) {
        h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
}

DiscreteMeasure::DiscreteMeasure(int dim, const std::vector<Point>& positions,
                                 const std::vector<double>& weights)
    : dim_(dim) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("measure: dim must be in [1, 8]");
    if (positions.size() != weights.size())
        throw std::invalid_argument("measure: positions/weights size mismatch");
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (positions[i].dim != dim) throw std::invalid_argument("measure: atom dimension mismatch");
        for (int k = 0; k < dim; ++k)
            if (!std::isfinite(positions[i][k]))
                throw std::invalid_argument("measure: non-finite coordinate");
        if (!(weights[i] > 0.0) || !std::isfinite(weights[i]))
            throw std::invalid_argument("measure: weights must be positive and finite");
    }

    // Merge coincident atoms; keep first-occurrence order.
    std::vector<std::size_t> order(positions.size());
    std::iota(order.begin(), order.end(), 0);
    auto less = [&](std::size_t a, std::size_t b) {
        for (int k = 0; k < dim; ++k) {
            if (positions[a][k] < positions[b][k]) return true;
            if (positions[b][k] < positions[a][k]) return false;
        }
        return a < b;
    };
    std::sort(order.begin(), order.end(), less);
    std::vector<std::size_t> rep(positions.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i > 0 && positions[order[i]] == positions[order[i - 1]])
            rep[order[i]] = rep[order[i - 1]];
        else
            rep[order[i]] = order[i];
    }
    std::vector<std::size_t> slot(positions.size(), SIZE_MAX);
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (rep[i] == i) {
            slot[i] = positions_.size();
            positions_.push_back(positions[i]);
            weights_.push_back(weights[i]);
        }
    }
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (rep[i] != i) {
            weights_[slot[rep[i]]] += weights[i];
            ++merged_;
        }
    }
    total_mass_ = pairwise_sum(weights_);
    build_index();
}

DiscreteMeasure::CellKey DiscreteMeasure::key_of(const Point& p, double cell) const {
    CellKey key;
    for (int k = 0; k < dim_; ++k) key.k[static_cast<std::size_t>(k)] =
        static_cast<std::int64_t>(std::floor(p[k] / cell));
    return key;
}

void DiscreteMeasure::build_index() {
    grid_.clear();
    const std::size_t n = size();
    if (n == 0) return;
    // Provisional cell from the bounding box, used to find nearest-neighbor spacings.
    double extent = 0.0;
    for (int k = 0; k < dim_; ++k) {
        double lo = positions_[0][k], hi = lo;
        for (const auto& p : positions_) {
            lo = std::min(lo, p[k]);
            hi = std::max(hi, p[k]);
        }
        extent = std::max(extent, hi - lo);
    }
    if (n == 1 || extent == 0.0) {
        cell_ = 1.0;
    } else {
        cell_ = extent / std::ceil(std::pow(static_cast<double>(n), 1.0 / dim_));
    }
    for (std::size_t i = 0; i < n; ++i) grid_[key_of(positions_[i], cell_)].push_back(i);
    if (n == 1) return;

    std::vector<double> nn(n);
    for (std::size_t i = 0; i < n; ++i) nn[i] = distance(positions_[i], positions_[nearest(positions_[i], i)]);
    std::nth_element(nn.begin(), nn.begin() + static_cast<std::ptrdiff_t>(n / 2), nn.end());
    const double median = nn[n / 2];
    if (median > 0.0 && std::isfinite(median)) {
        cell_ = median;
        grid_.clear();
        for (std::size_t i = 0; i < n; ++i) grid_[key_of(positions_[i], cell_)].push_back(i);
    }
}

template <class Visit>
void DiscreteMeasure::visit_candidates(const Ball& b, Visit&& visit) const {
    if (grid_.empty()) return;
    std::array<std::int64_t, kMaxDim> lo{}, hi{};
    double count = 1.0;
    bool huge = false;
    for (int k = 0; k < dim_; ++k) {
        const double l = std::floor((b.center[k] - b.radius) / cell_) - 1.0;
        const double h = std::floor((b.center[k] + b.radius) / cell_) + 1.0;
        if (!(h - l < 1e15)) huge = true;
        count *= (h - l + 1.0);
        if (!huge) {
            lo[static_cast<std::size_t>(k)] = static_cast<std::int64_t>(l);
            hi[static_cast<std::size_t>(k)] = static_cast<std::int64_t>(h);
        }
    }
    if (huge || count > static_cast<double>(grid_.size())) {
        for (const auto& [key, ids] : grid_) {
            bool in = true;
            if (!huge) {
                for (int k = 0; k < dim_ && in; ++k) {
                    const auto kk = static_cast<std::size_t>(k);
                    in = key.k[kk] >= lo[kk] && key.k[kk] <= hi[kk];
                }
            }
            if (in)
                for (auto id : ids) visit(id);
        }
        return;
    }
    CellKey cur;
    cur.k = lo;
    while (true) {
        auto it = grid_.find(cur);
        if (it != grid_.end())
            for (auto id : it->second) visit(id);
        int k = 0;
        for (; k < dim_; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            if (++cur.k[kk] <= hi[kk]) break;
            cur.k[kk] = lo[kk];
        }
        if (k == dim_) break;
    }
}

std::vector<std::size_t> DiscreteMeasure::ball_query(const Ball& b) const {
    std::vector<std::size_t> ids;
    visit_candidates(b, [&](std::size_t id) {
        if (distance(positions_[id], b.center) <= b.radius) ids.push_back(id);
    });
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::vector<std::size_t> DiscreteMeasure::ball_query_brute(const Ball& b) const {
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < size(); ++i)
        if (distance(positions_[i], b.center) <= b.radius) ids.push_back(i);
    return ids;
}

double DiscreteMeasure::mass_of(const std::vector<std::size_t>& ids) const {
    std::vector<double> w;
    w.reserve(ids.size());
    for (auto id : ids) w.push_back(weights_[id]);
    return pairwise_sum(w);
}

double DiscreteMeasure::ball_mass(const Ball& b) const { return mass_of(ball_query(b)); }

double DiscreteMeasure::ball_mass_brute(const Ball& b) const { return mass_of(ball_query_brute(b)); }

std::size_t DiscreteMeasure::nearest(const Point& p, std::size_t exclude) const {
    const std::size_t n = size();
    if (n == 0 || (n == 1 && exclude == 0)) throw std::invalid_argument("nearest: no candidate atoms");
    std::size_t best = SIZE_MAX;
    double best_d = std::numeric_limits<double>::infinity();
    auto consider = [&](std::size_t id) {
        if (id == exclude) return;
        const double d = distance(positions_[id], p);
        if (d < best_d || (d == best_d && id < best)) {
            best_d = d;
            best = id;
        }
    };
    const CellKey kp = key_of(p, cell_);
    for (std::int64_t ring = 0;; ++ring) {
        const double cube = std::pow(2.0 * static_cast<double>(ring) + 1.0, dim_);
        if (cube > 4.0 * static_cast<double>(grid_.size()) + 64.0) {
            for (std::size_t i = 0; i < n; ++i) consider(i);
            return best;
        }
        // Enumerate the shell at Chebyshev distance `ring`.
        std::array<std::int64_t, kMaxDim> off{};
        for (int k = 0; k < dim_; ++k) off[static_cast<std::size_t>(k)] = -ring;
        while (true) {
            std::int64_t cheb = 0;
            for (int k = 0; k < dim_; ++k) cheb = std::max(cheb, std::abs(off[static_cast<std::size_t>(k)]));
            if (cheb == ring) {
                CellKey key = kp;
                for (int k = 0; k < dim_; ++k) key.k[static_cast<std::size_t>(k)] += off[static_cast<std::size_t>(k)];
                auto it = grid_.find(key);
                if (it != grid_.end())
                    for (auto id : it->second) consider(id);
            }
            int k = 0;
            for (; k < dim_; ++k) {
                const auto kk = static_cast<std::size_t>(k);
                if (++off[kk] <= ring) break;
                off[kk] = -ring;
            }
            if (k == dim_) break;
        }
        // Anything outside this shell is at least ring*cell away.
        if (best != SIZE_MAX && best_d < static_cast<double>(ring) * cell_) return best;
    }
}

double DiscreteMeasure::distance_to_support(const Point& p) const {
    return distance(p, positions_[nearest(p)]);
}

std::pair<std::size_t, std::size_t> DiscreteMeasure::diameter_pair() const {
    if (empty()) throw std::invalid_argument("diameter_pair: empty measure");
    std::pair<std::size_t, std::size_t> best{0, 0};
    double best_d = -1.0;
    for (std::size_t i = 0; i < size(); ++i)
        for (std::size_t j = i + 1; j < size(); ++j) {
            const double d = distance(positions_[i], positions_[j]);
            if (d > best_d) {
                best_d = d;
                best = {i, j};
            }
        }
    return best;
}

double DiscreteMeasure::diameter() const {
    auto [a, b] = diameter_pair();
    return distance(positions_[a], positions_[b]);
}

DiscreteMeasure DiscreteMeasure::restrict_to(const std::vector<std::size_t>& ids) const {
    std::vector<Point> pos;
    std::vector<double> w;
    for (auto id : ids) {
        pos.push_back(positions_.at(id));
        w.push_back(weights_.at(id));
    }
    return DiscreteMeasure(dim_, pos, w);
}

// ---------------------------------------------------------------------------

double segment_ball_length(const Point& a, const Point& b, const Ball& ball) {
    const Point ab = b - a;
    const double len = norm(ab);
    if (len == 0.0) return 0.0;
    const Point u = (1.0 / len) * ab;
    const Point v = ball.center - a;
    const double along = dot(v, u);
    const Point perp = v - along * u;
    const double h2 = dot(perp, perp);
    const double r2 = ball.radius * ball.radius;
    if (h2 > r2) return 0.0;
    const double s = std::sqrt(r2 - h2);
    // Whole chord inside the segment: 2s avoids cancellation in (along + s) - (along - s).
    if (along - s >= 0.0 && along + s <= len) return 2.0 * s;
    const double lo = std::max(0.0, along - s);
    const double hi = std::min(len, along + s);
    return hi > lo ? hi - lo : 0.0;
}

double point_segment_distance(const Point& p, const Point& a, const Point& b) {
    const Point ab = b - a;
    const double l2 = dot(ab, ab);
    if (l2 == 0.0) return distance(p, a);
    const double t = std::clamp(dot(p - a, ab) / l2, 0.0, 1.0);
    return distance(p, lerp(a, b, t));
}

PolylineMeasure::PolylineMeasure(int dim, std::vector<Chain> chains) : dim_(dim), chains_(std::move(chains)) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("polyline: dim must be in [1, 8]");
    for (const auto& ch : chains_) {
        if (ch.vertices.size() < 2) throw std::invalid_argument("polyline: chain needs at least two vertices");
        if (ch.density.size() + 1 != ch.vertices.size())
            throw std::invalid_argument("polyline: one density per segment required");
        for (const auto& v : ch.vertices)
            if (v.dim != dim) throw std::invalid_argument("polyline: vertex dimension mismatch");
        for (double d : ch.density)
            if (!(d >= 0.0) || !std::isfinite(d)) throw std::invalid_argument("polyline: density must be >= 0");
    }
}

double PolylineMeasure::total_mass() const {
    std::vector<double> parts;
    for (const auto& ch : chains_)
        for (std::size_t s = 0; s < ch.density.size(); ++s)
            parts.push_back(ch.density[s] * distance(ch.vertices[s], ch.vertices[s + 1]));
    return pairwise_sum(parts);
}

double PolylineMeasure::ball_mass(const Ball& b) const {
    std::vector<double> parts;
    for (const auto& ch : chains_)
        for (std::size_t s = 0; s < ch.density.size(); ++s) {
            if (ch.density[s] == 0.0) continue;
            const double l = segment_ball_length(ch.vertices[s], ch.vertices[s + 1], b);
            if (l > 0.0) parts.push_back(ch.density[s] * l);
        }
    return pairwise_sum(parts);
}

PolylineMeasure PolylineMeasure::refine(int factor) const {
    if (factor < 1) throw std::invalid_argument("refine: factor must be >= 1");
    std::vector<Chain> out;
    for (const auto& ch : chains_) {
        Chain c;
        c.vertices.push_back(ch.vertices.front());
        for (std::size_t s = 0; s < ch.density.size(); ++s) {
            for (int k = 1; k <= factor; ++k) {
                c.vertices.push_back(k == factor ? ch.vertices[s + 1]
                                                 : lerp(ch.vertices[s], ch.vertices[s + 1],
                                                        static_cast<double>(k) / factor));
                c.density.push_back(ch.density[s]);
            }
        }
        out.push_back(std::move(c));
    }
    return PolylineMeasure(dim_, std::move(out));
}

double theta(double mass, const Ball& b) { return mass / b.radius; }

double theta_n(double mass, const Ball& b, int n) { return mass / std::pow(b.radius, n); }

}  // namespace gmt
