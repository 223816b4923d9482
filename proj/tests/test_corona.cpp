#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "gmt/corona.hpp"
#include "gmt/generators.hpp"
#include "gmt/multiscale.hpp"
#include "gmt/numeric.hpp"

using namespace gmt;

namespace {

DiscreteMeasure segment(std::size_t n) {
    GeneratorSpec g;
    g.kind = "segment";
    g.n = n;
    return generate(g);
}

DiscreteMeasure graph(std::size_t n, std::uint64_t seed = 1) {
    GeneratorSpec g;
    g.kind = "lipschitz_graph";
    g.n = n;
    g.seed = seed;
    return generate(g);
}

// Segment with one heavy atom in the middle.
DiscreteMeasure spiked(std::size_t n, double spike) {
    const auto base = segment(n);
    std::vector<Point> pos = base.positions();
    std::vector<double> w = base.weights();
    pos.push_back(Point{0.5003, 0.0});
    w.push_back(spike);
    return DiscreteMeasure(2, pos, w);
}

CoronaParams generous() {
    CoronaParams p;
    p.delta = 0.01;
    p.eta = 1e4;
    p.tau = 1e-6;
    p.A = 1e6;
    return p;
}

CoronaParams moderate() {
    CoronaParams p;
    p.delta = 0.05;
    p.eta = 0.5;
    p.tau = 0.05;
    p.A = 3.0;
    return p;
}

// Each id appears in at most one of the atom sets, i.e. the cells are pairwise disjoint.
bool disjoint_cells(const Lattice& lat, const std::vector<std::size_t>& ids) {
    std::set<std::size_t> seen;
    for (std::size_t c : ids)
        for (std::size_t a : lat.cell(c).atoms)
            if (!seen.insert(a).second) return false;
    return true;
}

void check_tree(const DiscreteMeasure& m, const Lattice& lat, const CoronaTree& t) {
    CHECK(disjoint_cells(lat, t.term));
    CHECK(disjoint_cells(lat, t.reg));
    CHECK(t.stop_outside_term == 0);
    std::set<std::size_t> reg(t.reg.begin(), t.reg.end()), stop(t.stop.begin(), t.stop.end());
    for (std::size_t s : t.stop) {
        CHECK(reg.count(s) == 1);
        CHECK(lat.is_descendant(s, t.root));
    }
    for (std::size_t r : t.reg)
        if (r != t.root && lat.is_descendant(r, t.root)) CHECK(stop.count(r) == 1);
    // Tree: cells of D(R) not strictly inside a Stop cell.
    std::set<std::size_t> tree(t.tree.begin(), t.tree.end());
    for (std::size_t c : lat.descendants(t.root, false)) {
        bool inside = false;
        for (std::size_t s : t.stop)
            if (s != c && lat.is_descendant(c, s)) inside = true;
        CHECK(tree.count(c) == (inside ? 0u : 1u));
    }
    for (std::size_t a = 0; a < m.size(); ++a) CHECK(t.d_atoms[a] > 0.0);
}

}  // namespace

TEST_CASE("window integrals from tables match the event sweep") {
    GeneratorSpec g;
    g.kind = "atom_cloud";
    g.n = 120;
    const auto m = generate(g);
    SquareFunctionTable table(m);
    Rng rng(3);
    for (int t = 0; t < 400; ++t) {
        const std::size_t a = rng.below(m.size());
        const double lo = std::exp(rng.uniform(-8.0, 1.0));
        const double hi = rng.uniform() < 0.1 ? std::numeric_limits<double>::infinity() : lo * std::exp(rng.uniform(0.0, 6.0));
        const double want = sqfn_integral(m, m.position(a), ScaleRange{lo, hi});
        CHECK(table.integral(a, lo, hi) == doctest::Approx(want).epsilon(1e-10));
    }
    CHECK(table.integral(0, 0.5, 0.5) == 0.0);
}

TEST_CASE("G membership of a two-atom step") {
    // Atom w at x and W at distance D: numerator w/2 below D/2, (w - W)/2 up to D, (w + W)/2 beyond.
    const double w = 1.0, W = 5.0, D = 0.2;
    DiscreteMeasure m(2, {Point{0.0, 0.0}, Point{D, 0.0}}, {w, W});
    LatticeParams lp;
    lp.depth = 2;
    const auto lat = build_lattice(m, lp);
    const std::size_t q = lat.atom_cell[1][0], R = lat.levels[0][0];
    const double delta = 0.01;
    const double lo = delta * lat.cell(q).ell, hi = lat.cell(R).ell / delta;
    auto piece = [](double c, double a, double b) { return 0.5 * c * c * (1.0 / (a * a) - 1.0 / (b * b)); };
    REQUIRE(lo < D / 2);
    const double closed = piece(w / 2, lo, D / 2) + piece((w - W) / 2, D / 2, D) + piece((w + W) / 2, D, hi);
    CHECK(sqfn_integral(m, Point{0.0, 0.0}, ScaleRange{lo, hi}) == doctest::Approx(closed).epsilon(1e-12));
    const double th = m.ball_mass(Ball{lat.cell(R).center, 56.0 * lat.cell(R).r}) / (56.0 * lat.cell(R).r);
    const double eta_edge = closed / (th * th);
    CHECK(g_membership(m, lat, Point{0.0, 0.0}, q, R, delta, 1.01 * eta_edge));
    CHECK_FALSE(g_membership(m, lat, Point{0.0, 0.0}, q, R, delta, 0.99 * eta_edge));
    CHECK_THROWS_AS(g_membership(m, lat, Point{0.0, 0.0}, R, q, delta, 1.0), std::invalid_argument);
}

TEST_CASE("G(Q, Q) is the single-cell window") {
    const auto m = graph(400);
    const auto lat = build_lattice(m, {});
    Rng rng(8);
    for (int t = 0; t < 50; ++t) {
        const std::size_t q = rng.below(lat.cells.size());
        const Cell& c = lat.cell(q);
        const Point x = m.position(rng.below(m.size()));
        const double v = sqfn_integral(m, x, ScaleRange{0.1 * c.ell, c.ell / 0.1});
        const double th = m.ball_mass(Ball{c.center, 56.0 * c.r}) / (56.0 * c.r);
        CHECK(g_membership(m, lat, x, q, q, 0.1, 1e-3) == (v <= 1e-3 * th * th));
    }
}

TEST_CASE("flat interior points have a small discretization floor") {
    // Lower window end well above the atom spacing.
    const auto m = segment(10000);
    LatticeParams lp;
    lp.depth = 3;
    const auto lat = build_lattice(m, lp);
    const double delta = 0.2;
    REQUIRE(delta * lat.side_length(3) > 5.0 / 10000.0);
    for (std::size_t q : lat.levels[3]) {
        const Cell& c = lat.cell(q);
        if (std::abs(c.center[0] - 0.5) > 0.1) continue;
        const Point x{c.center[0] + 0.5 / 10000.0, 0.0};  // between atoms
        const double v = sqfn_integral(m, x, ScaleRange{delta * c.ell, c.ell / delta});
        const double th = m.ball_mass(Ball{c.center, 56.0 * c.r}) / (56.0 * c.r);
        CHECK(v / (th * th) < 1e-2);
        CHECK(g_membership(m, lat, x, q, q, delta, 1e-2));
    }
}

TEST_CASE("classification follows the definitions") {
    const auto m = graph(500);
    const auto lat = build_lattice(m, {});
    const std::size_t R = lat.levels[0][0];
    const std::size_t q = lat.levels[2][lat.levels[2].size() / 2];
    const Cell &Q = lat.cell(q), &Rc = lat.cell(R);
    const double th_q = m.ball_mass(Ball{Q.center, 30.8 * Q.r}) / (30.8 * Q.r);
    const double th_BR = m.ball_mass(Ball{Rc.center, 28.0 * Rc.r}) / (28.0 * Rc.r);
    const double th_11R = m.ball_mass(Ball{Rc.center, 30.8 * Rc.r}) / (30.8 * Rc.r);

    CoronaParams p = generous();
    {
        CoronaContext ctx(m, lat, p);
        for (std::size_t c : lat.descendants(R, true)) CHECK(classify_cell(ctx, c, R) != Label::bcf);
    }
    p.tau = 2.0 * th_q / th_BR;  // Theta(1.1B_Q) = tau Theta(B_R) / 2
    {
        CoronaContext ctx(m, lat, p);
        CHECK(classify_cell(ctx, q, R) == Label::ld);
    }
    p = generous();
    p.A = 0.5 * th_q / th_11R;  // Theta(1.1B_Q) = 2 A Theta(1.1B_R)
    {
        CoronaContext ctx(m, lat, p);
        CHECK(classify_cell(ctx, q, R) == Label::hd);
    }
    p = generous();
    p.eta = 0.01;  // the BCF threshold is sqrt(eta)
    for (std::size_t a = 0; a < m.size(); ++a)
        if (std::find(Q.atoms.begin(), Q.atoms.end(), a) == Q.atoms.end()) p.F.push_back(a);
    {
        CoronaContext ctx(m, lat, p);
        CHECK(classify_cell(ctx, q, R) == Label::bcf);
        CHECK_FALSE(ctx.F_is_full());
    }
}

TEST_CASE("d is 1-Lipschitz and matches small hand cases") {
    std::vector<GoodBall> two{{Point{0.0, 0.0}, 1.0}, {Point{3.0, 0.0}, 0.25}};
    CHECK(d_function(Point{0.0, 0.0}, two) == 1.0);
    CHECK(d_function(Point{3.0, 0.0}, two) == 0.25);
    CHECK(d_function(Point{1.5, 0.0}, two) == 1.75);  // min(2.5, 1.75)
    CHECK(d_function(Point{1.0, 0.0}, two) == 2.0);   // min(2.0, 2.25)
    CHECK_THROWS_AS(d_function(Point{0.0, 0.0}, {}), std::invalid_argument);

    const auto m = graph(300);
    const auto lat = build_lattice(m, {});
    std::vector<GoodBall> good;
    for (const Cell& c : lat.cells)
        if (c.level >= 1) good.push_back({c.center, c.ell});
    Rng rng(5);
    for (int t = 0; t < 10000; ++t) {
        const Point x{rng.uniform(-1, 2), rng.uniform(-1, 1)}, y{rng.uniform(-1, 2), rng.uniform(-1, 1)};
        CHECK(std::abs(d_function(x, good) - d_function(y, good)) <= distance(x, y) * (1 + 1e-12) + 1e-15);
    }
}

TEST_CASE("flat measure with generous parameters stops nowhere") {
    // Cells and windows stay above the atom spacing, where the sample is not flat.
    const auto m = segment(1000);
    LatticeParams lp;
    lp.depth = 2;
    const auto lat = build_lattice(m, lp);
    const std::size_t R = lat.levels[0][0];
    CoronaParams p = generous();
    p.delta = 0.1;
    REQUIRE(p.delta * lat.side_length(2) > 10.0 / 1000.0);
    CoronaContext ctx(m, lat, p);
    const auto t = build_tree(ctx, R);
    check_tree(m, lat, t);
    CHECK(t.term.empty());
    CHECK(t.stop.empty());
    CHECK(t.tree.size() == lat.descendants(R, false).size());
    const auto tops = top_iteration(ctx, R, 5);
    REQUIRE(tops.size() == 1);
    CHECK(tops[0].cells == std::vector<std::size_t>{R});
    const auto rep = packing_report(ctx, tops);
    CHECK(rep.lhs <= rep.root_term);
}

TEST_CASE("a high density spike is cut off by a Term cell") {
    const auto m = spiked(1000, 0.2);
    const auto lat = build_lattice(m, {});
    const std::size_t R = lat.levels[0][0];
    const std::size_t spike = m.size() - 1;
    CoronaParams p = generous();
    p.A = 3.0;
    CoronaContext ctx(m, lat, p);
    const auto t = build_tree(ctx, R);
    check_tree(m, lat, t);
    std::size_t hd = kNoCell;
    for (std::size_t c : t.term)
        if (t.label[c] == Label::hd && std::binary_search(lat.cell(c).atoms.begin(), lat.cell(c).atoms.end(), spike)) hd = c;
    REQUIRE(hd != kNoCell);
    // Maximal: no HD strict ancestor below R.
    for (std::size_t a = lat.cell(hd).parent; a != R; a = lat.cell(a).parent) CHECK(t.label[a] == Label::good);
    MESSAGE("stop cells " << t.stop.size() << " term cells " << t.term.size());
    for (std::size_t s : t.stop) {
        bool in_term = false;
        for (std::size_t c : t.term) in_term = in_term || lat.is_descendant(s, c);
        CHECK(in_term);
    }
}

TEST_CASE("tree invariants and bad-mass inequality across measures") {
    std::vector<DiscreteMeasure> ms{graph(600), spiked(600, 0.1)};
    GeneratorSpec g;
    g.kind = "cantor4";
    g.generation = 4;
    ms.push_back(generate(g));
    g.kind = "atom_cloud";
    g.n = 300;
    ms.push_back(generate(g));
    std::size_t flagged = 0;
    for (const auto& m : ms) {
        const auto lat = build_lattice(m, {});
        CoronaContext ctx(m, lat, moderate());
        for (std::size_t R : {lat.levels[0][0], lat.levels[1][0]}) {
            const auto t = build_tree(ctx, R);
            check_tree(m, lat, t);
            if (!t.reg.empty()) CHECK(t.reg_min_ratio >= 0.0);
        }
        for (const Cell& c : lat.cells) {
            const auto chk = bad_mass_check(ctx, c.id);
            if (chk.flagged) ++flagged;
            CHECK(chk.holds);
        }
    }
    MESSAGE("flagged cells " << flagged);
    CHECK(flagged > 0);
}

TEST_CASE("top generations are antichains of doubling cells") {
    LatticeParams lp;
    lp.C0 = 200.0;
    for (const auto& m : {spiked(800, 0.1), graph(800, 2)}) {
        const auto lat = build_lattice(m, lp);
        CoronaContext ctx(m, lat, moderate());
        const auto tops = top_iteration(ctx, lat.levels[0][0], 6);
        CHECK(tops[0].cells == std::vector<std::size_t>{lat.levels[0][0]});
        for (std::size_t g = 1; g < tops.size(); ++g) {
            CHECK(disjoint_cells(lat, tops[g].cells));
            for (std::size_t c : tops[g].cells) CHECK(lat.cell(c).doubling);
        }
        const auto rep = packing_report(ctx, tops);
        MESSAGE("generations " << tops.size() << " lhs " << rep.lhs << " rhs " << rep.rhs << " ratio " << rep.ratio);
        CHECK(std::isfinite(rep.ratio));
    }
}

TEST_CASE("packing ratio is stable as the lattice deepens on graphs") {
    const auto m = graph(1000, 3);
    std::vector<double> ratios;
    for (int depth = 4; depth <= 8; ++depth) {
        LatticeParams lp;
        lp.C0 = 200.0;
        lp.depth = depth;
        const auto lat = build_lattice(m, lp);
        CoronaContext ctx(m, lat, moderate());
        const auto rep = packing_report(ctx, top_iteration(ctx, lat.levels[0][0], 8));
        ratios.push_back(rep.ratio);
    }
    for (double r : ratios) CHECK(std::abs(r / ratios.front() - 1.0) <= 0.5);
}

TEST_CASE("cantor packing grows with its square function") {
    double prev_lhs = 0.0, first_lhs = 0.0;
    for (int n = 2; n <= 5; ++n) {
        GeneratorSpec g;
        g.kind = "cantor4";
        g.generation = n;
        const auto m = generate(g);
        LatticeParams lp;
        lp.A0 = 16.0;
        lp.scale = 0.17;
        lp.C0 = 200.0;
        lp.depth = 8;
        const auto lat = build_lattice(m, lp);
        CoronaContext ctx(m, lat, moderate());
        const auto rep = packing_report(ctx, top_iteration(ctx, lat.levels[0][0], 8));
        MESSAGE("n " << n << " lhs " << rep.lhs << " sqfn " << rep.sqfn_term << " ratio " << rep.ratio);
        if (n > 2) CHECK(rep.lhs >= prev_lhs);
        if (n == 2) first_lhs = rep.lhs;
        prev_lhs = rep.lhs;
    }
    CHECK(prev_lhs > first_lhs);
}

TEST_CASE("labels do not depend on atom order") {
    const auto m = graph(400, 4);
    const auto lat = build_lattice(m, {});
    // Reverse the atoms and carry the same cells over.
    const std::size_t n = m.size();
    std::vector<Point> pos(m.positions().rbegin(), m.positions().rend());
    std::vector<double> w(m.weights().rbegin(), m.weights().rend());
    DiscreteMeasure rev(2, pos, w);
    Lattice lat2 = lat;
    for (Cell& c : lat2.cells) {
        for (std::size_t& a : c.atoms) a = n - 1 - a;
        std::sort(c.atoms.begin(), c.atoms.end());
        c.center_atom = n - 1 - c.center_atom;
    }
    for (auto& level : lat2.atom_cell) std::reverse(level.begin(), level.end());
    CoronaContext a(m, lat, moderate()), b(rev, lat2, moderate());
    const auto ta = build_tree(a, lat.levels[0][0]), tb = build_tree(b, lat.levels[0][0]);
    CHECK(ta.label == tb.label);
    CHECK(ta.stop == tb.stop);
    CHECK(corona_to_json_text(a, ta) == corona_to_json_text(a, build_tree(a, lat.levels[0][0])));
}

TEST_CASE("parameter checks") {
    CoronaParams p;
    CHECK(p.ordering_warnings().empty());
    p.eta = 1.0;
    CHECK_FALSE(p.ordering_warnings().empty());
    p.delta = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
