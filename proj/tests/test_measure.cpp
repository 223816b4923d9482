#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "gmt/measure.hpp"
#include "gmt/numeric.hpp"

using namespace gmt;

namespace {

DiscreteMeasure random_cloud(int dim, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Point> pos;
    std::vector<double> w;
    for (std::size_t i = 0; i < n; ++i) {
        Point p(dim);
        for (int k = 0; k < dim; ++k) p[k] = rng.uniform(-1.0, 1.0);
        pos.push_back(p);
        w.push_back(rng.uniform(0.1, 2.0));
    }
    return DiscreteMeasure(dim, pos, w);
}

}  // namespace

TEST_CASE("closed ball includes atoms on the sphere") {
    DiscreteMeasure m(2, {Point{0.0, 0.0}, Point{3.0, 4.0}}, {1.0, 2.5});
    CHECK(m.ball_mass({Point{0.0, 0.0}, 5.0}) == 3.5);
    CHECK(m.ball_mass({Point{0.0, 0.0}, std::nextafter(5.0, 0.0)}) == 1.0);
    CHECK(m.ball_mass({Point{3.0, 4.0}, 0.0}) == 2.5);
}

TEST_CASE("grid index agrees with linear scan exactly") {
    for (int dim : {1, 2, 3}) {
        const auto m = random_cloud(dim, 1500, 7 + static_cast<std::uint64_t>(dim));
        Rng rng(99);
        for (int q = 0; q < 2000; ++q) {
            Point c(dim);
            for (int k = 0; k < dim; ++k) c[k] = rng.uniform(-1.3, 1.3);
            const double r = std::exp(rng.uniform(std::log(1e-4), std::log(4.0)));
            const Ball b{c, r};
            REQUIRE(m.ball_query(b) == m.ball_query_brute(b));
            REQUIRE(m.ball_mass(b) == m.ball_mass_brute(b));
        }
        // Radii equal to atom distances hit the closed boundary exactly.
        for (std::size_t i = 0; i < 200; ++i) {
            const Ball b{m.position(i), distance(m.position(i), m.position(i + 1))};
            REQUIRE(m.ball_mass(b) == m.ball_mass_brute(b));
        }
    }
}

TEST_CASE("nearest neighbour matches brute force with lowest-index ties") {
    const auto m = random_cloud(2, 800, 3);
    Rng rng(4);
    for (int q = 0; q < 500; ++q) {
        Point p{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
        std::size_t best = 0;
        for (std::size_t i = 1; i < m.size(); ++i)
            if (distance(m.position(i), p) < distance(m.position(best), p)) best = i;
        REQUIRE(m.nearest(p) == best);
    }
    DiscreteMeasure tie(1, {Point{1.0}, Point{-1.0}}, {1.0, 1.0});
    CHECK(tie.nearest(Point{0.0}) == 0);
}

TEST_CASE("coincident atoms are merged at construction") {
    DiscreteMeasure m(2, {Point{1.0, 1.0}, Point{0.0, 0.0}, Point{1.0, 1.0}}, {1.0, 2.0, 0.5});
    REQUIRE(m.size() == 2);
    CHECK(m.merged_count() == 1);
    CHECK(m.weight(0) == 1.5);
    CHECK(m.position(1) == Point{0.0, 0.0});
    CHECK(m.total_mass() == 3.5);
}

TEST_CASE("invalid measures are rejected") {
    CHECK_THROWS_AS(DiscreteMeasure(2, {Point{0.0, 0.0}}, {0.0}), std::invalid_argument);
    CHECK_THROWS_AS(DiscreteMeasure(2, {Point{0.0, 0.0}}, {-1.0}), std::invalid_argument);
    CHECK_THROWS_AS(DiscreteMeasure(3, {Point{0.0, 0.0}}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(measure_from_json_text(R"({"dim":2,"atoms":[{"x":[0,0],"w":0}]})"), std::invalid_argument);
    CHECK_THROWS_AS(measure_from_json_text(R"({"dim":2,"atoms":[{"x":[0],"w":1}]})"), std::invalid_argument);
    CHECK_THROWS_AS(measure_from_json_text("{not json"), std::invalid_argument);
}

TEST_CASE("json round trip is byte identical") {
    const auto m = random_cloud(3, 50, 11);
    const std::string a = measure_to_json_text(m);
    const auto back = measure_from_json_text(a);
    CHECK(measure_to_json_text(back) == a);
    for (std::size_t i = 0; i < m.size(); ++i) {
        CHECK(back.position(i) == m.position(i));
        CHECK(back.weight(i) == m.weight(i));
    }
    PolylineMeasure pl(2, {Chain{{Point{0.0, 0.0}, Point{0.1, 0.3}, Point{1.0 / 3.0, 2.0}}, {1.0, 0.25}}});
    const std::string s = polyline_to_json_text(pl);
    CHECK(polyline_to_json_text(polyline_from_json_text(s)) == s);
}

TEST_CASE("segment chord length against fine sampling") {
    Rng rng(5);
    for (int q = 0; q < 200; ++q) {
        Point a{rng.uniform(-1, 1), rng.uniform(-1, 1)}, b{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        Ball ball{Point{rng.uniform(-1, 1), rng.uniform(-1, 1)}, rng.uniform(0.05, 1.5)};
        const int N = 200000;
        const double len = distance(a, b);
        int inside = 0;
        for (int k = 0; k < N; ++k)
            if (ball.contains(lerp(a, b, (k + 0.5) / N))) ++inside;
        CHECK(std::abs(segment_ball_length(a, b, ball) - inside * len / N) <= 2.0 * len / N);
    }
}

TEST_CASE("straight polyline ball mass equals 2r times density in the interior") {
    PolylineMeasure pl(2, {Chain{{Point{0.0, 0.0}, Point{0.3, 0.0}, Point{1.0, 0.0}}, {2.0, 2.0}}});
    Rng rng(6);
    for (int q = 0; q < 1000; ++q) {
        const double x = rng.uniform(0.1, 0.9);
        const double r = rng.uniform(0.0, std::min(x, 1.0 - x));
        CHECK(std::abs(pl.ball_mass({Point{x, 0.0}, r}) - 4.0 * r) <= 1e-15);
    }
    CHECK(pl.total_mass() == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(pl.refine(16).total_mass() == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("diameter pair and theta") {
    DiscreteMeasure m(2, {Point{0.0, 0.0}, Point{1.0, 0.0}, Point{0.0, 2.0}, Point{1.0, 2.0}}, {1, 1, 1, 1});
    auto [i, j] = m.diameter_pair();
    CHECK(i == 0);
    CHECK(j == 3);
    CHECK(m.diameter() == doctest::Approx(std::sqrt(5.0)));
    CHECK(theta(m, Ball{Point{0.0, 0.0}, 1.0}) == 2.0);
    CHECK(theta_n(8.0, Ball{Point{0.0, 0.0}, 2.0}, 3) == 1.0);
}

TEST_CASE("pairwise sum is order-fixed and accurate") {
    std::vector<double> v(1 << 16, 0.1);
    CHECK(pairwise_sum(v) == doctest::Approx(6553.6).epsilon(1e-14));
    CHECK(pairwise_sum(v) == pairwise_sum(v));
}

TEST_CASE("worked ball-mass examples") {
    DiscreteMeasure line(1, {Point{0.0}, Point{3.0}}, {1.0, 1.0});
    CHECK(line.ball_mass({Point{0.0}, 1.0}) == 1.0);
    CHECK(line.ball_mass({Point{0.0}, 3.0}) == 2.0);
    DiscreteMeasure corners(2, {Point{0.0, 0.0}, Point{1.0, 0.0}, Point{0.0, 1.0}, Point{1.0, 1.0}},
                            {0.25, 0.25, 0.25, 0.25});
    CHECK(corners.ball_mass({Point{0.0, 0.0}, 0.3}) == 0.25);

    PolylineMeasure seg(2, {Chain{{Point{0.0, 0.0}, Point{10.0, 0.0}}, {1.0}}});
    CHECK(seg.ball_mass({Point{5.0, 0.0}, 2.0}) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(seg.ball_mass({Point{5.0, 3.0}, 1.0}) == 0.0);
    PolylineMeasure corner(2, {Chain{{Point{0.0, 0.0}, Point{1.0, 0.0}, Point{1.0, 1.0}}, {1.0, 1.0}}});
    CHECK(corner.ball_mass({Point{1.0, 0.0}, 0.5}) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("ball mass is monotone and right-continuous in the radius") {
    const auto m = random_cloud(2, 300, 91);
    Rng rng(92);
    for (int q = 0; q < 200; ++q) {
        const Point c{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        double prev = 0.0;
        for (int k = 1; k <= 60; ++k) {
            const double mass = m.ball_mass({c, 0.05 * k});
            CHECK(mass >= prev);
            prev = mass;
        }
        // At an atom distance the closed ball already holds the atom.
        const std::size_t id = m.nearest(c);
        const double d = distance(c, m.position(id));
        if (d > 0) CHECK(m.ball_mass({c, d}) > m.ball_mass({c, std::nextafter(d, 0.0)}));
    }
}

TEST_CASE("index agrees with brute force on ten thousand random queries") {
    const auto m = random_cloud(2, 2000, 93);
    Rng rng(94);
    int mismatches = 0;
    for (int q = 0; q < 10000; ++q) {
        const Ball b{Point{rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2)}, std::exp(rng.uniform(-6.0, 0.5))};
        if (m.ball_mass(b) != m.ball_mass_brute(b)) ++mismatches;
    }
    CHECK(mismatches == 0);
}

TEST_CASE("ball mass is invariant under rigid motions") {
    const auto m = random_cloud(2, 500, 95);
    const double a = 0.83, c = std::cos(a), s = std::sin(a);
    const Point shift{2.5, -7.25};
    auto move = [&](const Point& p) { return Point{c * p[0] - s * p[1] + shift[0], s * p[0] + c * p[1] + shift[1]}; };
    std::vector<Point> pos;
    for (const auto& p : m.positions()) pos.push_back(move(p));
    DiscreteMeasure moved(2, pos, m.weights());
    Rng rng(96);
    for (int q = 0; q < 500; ++q) {
        // Keep atoms away from the sphere so rounding of the motion cannot flip membership.
        const Point ctr{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        double r = rng.uniform(0.05, 1.0);
        bool near = true;
        for (int t = 0; t < 20 && near; ++t) {
            near = false;
            for (const auto& p : m.positions())
                if (std::abs(distance(p, ctr) - r) < 1e-9) near = true;
            if (near) r *= 1.001;
        }
        CHECK(moved.ball_mass({move(ctr), r}) == doctest::Approx(m.ball_mass({ctr, r})).epsilon(1e-12));
    }
}

TEST_CASE("polyline ball mass agrees with dense sampling") {
    Rng rng(97);
    std::vector<Point> vs;
    std::vector<double> dens;
    for (int k = 0; k < 8; ++k) vs.push_back(Point{rng.uniform(-1, 1), rng.uniform(-1, 1)});
    for (int k = 0; k < 7; ++k) dens.push_back(rng.uniform(0.5, 2.0));
    PolylineMeasure poly(2, {Chain{vs, dens}});
    for (int q = 0; q < 20; ++q) {
        const Ball b{Point{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)}, rng.uniform(0.2, 1.0)};
        const double h = b.radius / 1e4;
        double sampled = 0.0;
        for (int s = 0; s < 7; ++s) {
            const double len = distance(vs[s], vs[s + 1]);
            const int n = static_cast<int>(std::ceil(len / h));
            for (int k = 0; k < n; ++k)
                if (b.contains(lerp(vs[s], vs[s + 1], (k + 0.5) / n))) sampled += dens[s] * len / n;
        }
        const double exact = poly.ball_mass(b);
        CHECK(std::abs(exact - sampled) <= 1e-3 * std::max(exact, 1e-12));
    }
}

TEST_CASE("theta examples") {
    const double h = 1e-3;
    std::vector<Point> pos;
    std::vector<double> w;
    for (int k = -2000; k <= 2000; ++k) {
        pos.push_back(Point{k * h, 0.0});
        w.push_back(h);
    }
    DiscreteMeasure line(2, pos, w);
    const double r = 100 * h;
    CHECK(std::abs(theta(line, Ball{Point{0.0, 0.0}, r}) - 2.0) <= 2 * h / r);
    DiscreteMeasure one(2, {Point{0.0, 0.0}}, {3.0});
    CHECK(theta(one, Ball{Point{0.1, 0.0}, 0.5}) == doctest::Approx(6.0));
    // Dilating by lambda and scaling weights by s multiplies theta by s / lambda.
    const double lambda = 4.0, s = 0.5;
    DiscreteMeasure scaled(2, {Point{0.0, 0.0}}, {3.0 * s});
    CHECK(theta(scaled, Ball{Point{0.1 * lambda, 0.0}, 0.5 * lambda}) == doctest::Approx(6.0 * s / lambda));
}
