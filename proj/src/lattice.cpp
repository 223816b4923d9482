#include "gmt/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "gmt/numeric.hpp"
#include "json.hpp"

namespace gmt {

namespace {

// Hash grid over a set of center atoms, cell size h.
class CenterGrid {
public:
    CenterGrid(const DiscreteMeasure& m, double h) : m_(m), h_(h) {}

    void insert(std::size_t atom) { cells_[key(m_.position(atom))].push_back(atom); }

    // Visits every stored atom whose grid cell touches the cube of half-width h around p.
    template <class F>
    void near(const Point& p, F&& f) const {
        const Key base = key(p);
        const int d = m_.dim();
        int total = 1;
        for (int i = 0; i < d; ++i) total *= 3;
        for (int code = 0; code < total; ++code) {
            Key k = base;
            int c = code;
            for (int i = 0; i < d; ++i) {
                k[static_cast<std::size_t>(i)] += c % 3 - 1;
                c /= 3;
            }
            auto it = cells_.find(k);
            if (it == cells_.end()) continue;
            for (std::size_t a : it->second) f(a);
        }
    }

private:
    using Key = std::array<std::int64_t, kMaxDim>;
    struct Hash {
        std::size_t operator()(const Key& k) const {
            std::uint64_t h = 1469598103934665603ull;
            for (auto v : k) h = (h ^ static_cast<std::uint64_t>(v)) * 1099511628211ull;
            return static_cast<std::size_t>(h);
        }
    };
    Key key(const Point& p) const {
        Key k{};
        for (int i = 0; i < m_.dim(); ++i) k[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(std::floor(p[i] / h_));
        return k;
    }

    const DiscreteMeasure& m_;
    double h_;
    std::unordered_map<Key, std::vector<std::size_t>, Hash> cells_;
};

// Greedy centers for radius rho: heaviest B(x, rho) first, accepted if 5-dilated balls stay disjoint.
std::vector<std::size_t> select_centers(const DiscreteMeasure& m, double rho) {
    const std::size_t n = m.size();
    std::vector<double> mass(n);
    for (std::size_t i = 0; i < n; ++i) mass[i] = m.ball_mass(Ball{m.position(i), rho});
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mass[a] > mass[b]; });
    CenterGrid grid(m, 10.0 * rho);
    std::vector<std::size_t> centers;
    for (std::size_t x : order) {
        bool blocked = false;
        grid.near(m.position(x), [&](std::size_t z) {
            if (!(distance(m.position(x), m.position(z)) > 10.0 * rho)) blocked = true;
        });
        if (blocked) continue;
        grid.insert(x);
        centers.push_back(x);
    }
    std::sort(centers.begin(), centers.end());
    return centers;
}

// Nearest center (ties: lowest index). Every atom lies within 10 rho of some center by maximality.
std::vector<std::size_t> nearest_center(const DiscreteMeasure& m, const std::vector<std::size_t>& centers,
                                        double rho, const std::vector<std::size_t>& queries) {
    CenterGrid grid(m, 10.0 * rho);
    for (std::size_t z : centers) grid.insert(z);
    std::vector<std::size_t> out(queries.size());
    for (std::size_t q = 0; q < queries.size(); ++q) {
        const Point& p = m.position(queries[q]);
        std::size_t best = kNoCell;
        double bd = 0.0;
        grid.near(p, [&](std::size_t z) {
            const double d = distance(p, m.position(z));
            if (best == kNoCell || d < bd || (d == bd && z < best)) {
                best = z;
                bd = d;
            }
        });
        if (best == kNoCell) throw std::logic_error("lattice: atom not covered by any center");
        out[q] = best;
    }
    return out;
}

}  // namespace

void LatticeParams::validate() const {
    if (!(A0 >= 10.0)) throw std::invalid_argument("lattice: A0 must be >= 10");
    if (!(C0 >= 1.0)) throw std::invalid_argument("lattice: C0 must be >= 1");
    if (depth < 1) throw std::invalid_argument("lattice: depth must be >= 1");
    if (!(scale >= 0.0) || !std::isfinite(scale)) throw std::invalid_argument("lattice: scale must be >= 0");
}

double Lattice::rho(int k) const { return std::pow(params.A0, -static_cast<double>(k)) * scale; }

double Lattice::side_length(int k) const { return 56.0 * params.C0 * std::pow(params.A0, -static_cast<double>(k)) * scale; }

bool Lattice::is_descendant(std::size_t a, std::size_t b) const {
    const int lb = cells.at(b).level;
    while (a != kNoCell && cells[a].level > lb) a = cells[a].parent;
    return a == b;
}

std::vector<std::size_t> Lattice::descendants(std::size_t q, bool strict) const {
    std::vector<std::size_t> out, stack{q};
    while (!stack.empty()) {
        const std::size_t c = stack.back();
        stack.pop_back();
        if (c != q || !strict) out.push_back(c);
        for (auto it = cells[c].children.rbegin(); it != cells[c].children.rend(); ++it) stack.push_back(*it);
    }
    return out;
}

Lattice build_lattice(const DiscreteMeasure& m, const LatticeParams& params) {
    params.validate();
    if (m.empty()) throw std::invalid_argument("lattice: empty measure");
    Lattice lat;
    lat.params = params;
    const double diam = m.diameter();
    lat.scale = params.scale > 0.0 ? params.scale : (diam > 0.0 ? diam : 1.0);
    const std::size_t n = m.size();

    // Centers per level until every atom is its own center or the depth is reached.
    std::vector<std::vector<std::size_t>> centers;
    for (int k = 0; k <= params.depth; ++k) {
        centers.push_back(select_centers(m, lat.rho(k)));
        if (centers.back().size() == n) break;
    }
    const int K = static_cast<int>(centers.size()) - 1;
    lat.effective_depth = K;

    // owner[k][atom] = level-k center atom of the atom's cell, built from the finest level up.
    std::vector<std::vector<std::size_t>> owner(static_cast<std::size_t>(K + 1), std::vector<std::size_t>(n));
    {
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), 0);
        owner[static_cast<std::size_t>(K)] = nearest_center(m, centers[static_cast<std::size_t>(K)], lat.rho(K), all);
    }
    for (int k = K - 1; k >= 0; --k) {
        const auto& fine = centers[static_cast<std::size_t>(k + 1)];
        const auto up = nearest_center(m, centers[static_cast<std::size_t>(k)], lat.rho(k), fine);
        std::unordered_map<std::size_t, std::size_t> parent_of;
        for (std::size_t i = 0; i < fine.size(); ++i) parent_of[fine[i]] = up[i];
        for (std::size_t a = 0; a < n; ++a)
            owner[static_cast<std::size_t>(k)][a] = parent_of.at(owner[static_cast<std::size_t>(k + 1)][a]);
    }

    // Cells level by level; children ordered by center atom index.
    lat.levels.resize(static_cast<std::size_t>(K + 1));
    lat.atom_cell.assign(static_cast<std::size_t>(K + 1), std::vector<std::size_t>(n, kNoCell));
    std::unordered_map<std::size_t, std::size_t> prev_id;  // center atom -> cell id on the level above
    for (int k = 0; k <= K; ++k) {
        const auto& own = owner[static_cast<std::size_t>(k)];
        std::unordered_map<std::size_t, std::size_t> id_of;
        std::vector<std::size_t> order = centers[static_cast<std::size_t>(k)];
        auto parent_cell = [&](std::size_t z) { return k == 0 ? kNoCell : prev_id.at(owner[static_cast<std::size_t>(k - 1)][z]); };
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return k > 0 && parent_cell(a) < parent_cell(b); });
        for (std::size_t z : order) {
            Cell c;
            c.id = lat.cells.size();
            c.level = k;
            c.center_atom = z;
            c.center = m.position(z);
            c.r = lat.rho(k);
            c.ell = lat.side_length(k);
            c.parent = parent_cell(z);
            if (c.parent != kNoCell) lat.cells[c.parent].children.push_back(c.id);
            id_of[z] = c.id;
            lat.levels[static_cast<std::size_t>(k)].push_back(c.id);
            lat.cells.push_back(std::move(c));
        }
        for (std::size_t a = 0; a < n; ++a) {
            const std::size_t id = id_of.at(own[a]);
            lat.cells[id].atoms.push_back(a);
            lat.atom_cell[static_cast<std::size_t>(k)][a] = id;
        }
        prev_id = std::move(id_of);
    }

    for (Cell& c : lat.cells) {
        c.mass = m.mass_of(c.atoms);
        c.doubling = m.ball_mass(c.ball().dilate(100.0)) <= params.C0 * m.ball_mass(c.ball());
        for (std::size_t a : c.atoms) {
            const double ratio = distance(m.position(a), c.center) / c.r;
            lat.max_containment_ratio = std::max(lat.max_containment_ratio, ratio);
            if (!(ratio <= 28.0)) throw std::logic_error("lattice: atom outside 28B(Q)");
        }
    }
    return lat;
}

bool is_doubling(const DiscreteMeasure& m, const Lattice& lat, std::size_t q) {
    const Cell& c = lat.cell(q);
    return m.ball_mass(c.ball().dilate(100.0)) <= lat.params.C0 * m.ball_mass(c.ball());
}

BoundaryMass boundary_mass(const DiscreteMeasure& m, const Lattice& lat, std::size_t q, int l) {
    if (l < 0) throw std::invalid_argument("boundary_mass: l must be >= 0");
    const Cell& c = lat.cell(q);
    const double t = lat.rho(c.level + l);
    std::vector<char> inside(m.size(), 0), ext(m.size(), 0);
    for (std::size_t a : c.atoms) inside[a] = 1;
    std::vector<std::size_t> int_ids, ext_ids;
    for (std::size_t a : c.atoms) {
        bool near_outside = false;
        for (std::size_t b : m.ball_query(Ball{m.position(a), t})) {
            if (inside[b] || !(distance(m.position(a), m.position(b)) < t)) continue;
            near_outside = true;
            if (!ext[b]) {
                ext[b] = 1;
                ext_ids.push_back(b);
            }
        }
        if (near_outside) int_ids.push_back(a);
    }
    std::sort(ext_ids.begin(), ext_ids.end());
    BoundaryMass out;
    out.int_mass = m.mass_of(int_ids);
    out.ext_mass = m.mass_of(ext_ids);
    out.nl_mass = out.int_mass + out.ext_mass;
    const double base = std::pow(lat.params.C0, -3.0 * m.dim() - 1.0) * lat.params.A0;
    out.bound_rhs = std::pow(base, -static_cast<double>(l)) * m.ball_mass(c.ball().dilate(90.0));
    return out;
}

std::vector<std::size_t> maximal_doubling(const Lattice& lat, std::size_t q) {
    const Cell& top = lat.cell(q);
    const Ball outer{top.center, 1.1 * 28.0 * top.r};
    std::vector<std::size_t> out, stack(top.children.rbegin(), top.children.rend());
    while (!stack.empty()) {
        const std::size_t p = stack.back();
        stack.pop_back();
        const Cell& c = lat.cells[p];
        if (c.doubling && ball_inside(Ball{c.center, 2.0 * 28.0 * c.r}, outer)) {
            out.push_back(p);
            continue;
        }
        for (auto it = c.children.rbegin(); it != c.children.rend(); ++it) stack.push_back(*it);
    }
    return out;
}

std::vector<double> doubling_coverage(const Lattice& lat, const DiscreteMeasure& m) {
    const std::size_t levels = lat.levels.size();
    std::vector<double> out(levels);
    // covered_from[a] = shallowest level k such that some cell of the atom at level >= k is doubling,
    // i.e. the deepest doubling level along its chain.
    std::vector<int> deepest(m.size(), -1);
    for (std::size_t a = 0; a < m.size(); ++a)
        for (std::size_t k = 0; k < levels; ++k)
            if (lat.cells[lat.atom_cell[k][a]].doubling) deepest[a] = static_cast<int>(k);
    for (std::size_t k = 0; k < levels; ++k) {
        std::vector<std::size_t> ids;
        for (std::size_t a = 0; a < m.size(); ++a)
            if (deepest[a] >= static_cast<int>(k)) ids.push_back(a);
        out[k] = m.mass_of(ids) / m.total_mass();
    }
    return out;
}

std::string lattice_to_json_text(const Lattice& lat) {
    using ojson = nlohmann::ordered_json;
    ojson j;
    j["A0"] = lat.params.A0;
    j["C0"] = lat.params.C0;
    j["scale"] = lat.scale;
    j["effective_depth"] = lat.effective_depth;
    j["max_containment_ratio"] = lat.max_containment_ratio;
    ojson cells = ojson::array();
    for (const Cell& c : lat.cells) {
        ojson e;
        e["id"] = c.id;
        e["level"] = c.level;
        ojson ctr = ojson::array();
        for (int i = 0; i < c.center.dim; ++i) ctr.push_back(c.center[i]);
        e["center"] = ctr;
        e["center_atom"] = c.center_atom;
        e["r"] = c.r;
        e["ell"] = c.ell;
        e["mass"] = c.mass;
        if (c.parent == kNoCell)
            e["parent"] = nullptr;
        else
            e["parent"] = c.parent;
        e["children"] = c.children;
        e["atom_ids"] = c.atoms;
        e["doubling"] = c.doubling;
        cells.push_back(std::move(e));
    }
    j["cells"] = std::move(cells);
    return j.dump(1) + "\n";
}

}  // namespace gmt
