// Prints the suite maxima that tests/fixtures.hpp freezes. Uses only the oracles.
#include <cmath>
#include <cstdio>
#include <algorithm>
#include <map>
#include <string>

#include "fixtures.hpp"
#include "gmt/curvature.hpp"
#include "gmt/curve.hpp"
#include "gmt/experiments.hpp"
#include "gmt/generators.hpp"
#include "gmt/numeric.hpp"
#include "oracles.hpp"

using namespace gmt;

int main() {
    GeneratorSpec circ;
    circ.kind = "circle";
    circ.n = 200;
    circ.radius = 2.0;
    circ.norm = Normalization::probability;
    GeneratorSpec line;
    line.kind = "perturbed_line";
    line.n = 300;
    line.noise = fixtures::kMVLineNoise;
    line.seed = fixtures::kMVLineSeed;
    double worst = 0.0;
    for (const auto& spec : {circ, line}) {
        const auto m = generate(spec);
        for (double eps : fixtures::kMVEps) {
            const auto ex = oracle::mv_expansion(m, eps);
            const double c0 = growth_constant(m, eps);
            const double ratio = std::abs(ex.residual()) / (c0 * c0 * m.total_mass());
            std::printf("%-16s eps %.3f  diag %.6e  near %.6e  c0 %.6f  ratio %.6e\n", spec.kind.c_str(), eps,
                        ex.diagonal, ex.near_triple, c0, ratio);
            worst = std::max(worst, ratio);
        }
    }
    std::printf("kMVConstant = %.6e (2x of %.6e)\n", 2.0 * worst, worst);

    // Turning angles of the curve construction on graphs, in units of eps0.
    double c_ang = 0.0;
    for (std::uint64_t seed = 1; seed <= fixtures::kCurveSeeds; ++seed) {
        GeneratorSpec g;
        g.kind = "lipschitz_graph";
        g.n = fixtures::kCurveAtoms;
        g.lip = fixtures::kCurveLip;
        g.seed = seed;
        const auto m = generate(g);
        const auto chain = build_curves(m, {}, fixtures::kCurveEps0, fixtures::kCurveKMax);
        for (int k = 1; k <= chain.generations(); ++k) {
            // Independent scan over vertex triples.
            const auto& v = chain.gen(k).vertices;
            for (std::size_t i = 1; i + 1 < v.size(); ++i) {
                const Point a = v[i - 1] - v[i], b = v[i + 1] - v[i];
                const double cosang = dot(a, b) / (norm(a) * norm(b));
                const double dev = M_PI - std::acos(std::clamp(cosang, -1.0, 1.0));
                c_ang = std::max(c_ang, dev / fixtures::kCurveEps0);
            }
        }
    }
    std::printf("kCAngle = %.6e (2x of %.6e)\n", 2.0 * c_ang, c_ang);

    // Cotlar scan: recompute both sides of every sampled (x, ell, f) with the brute oracles.
    const auto rep = run_experiment("cotlar_scan", {{"ceilings", nlohmann::json::object()}});
    const auto& samp = rep.table("samples");
    GeneratorSpec ring;
    ring.kind = "circle";
    ring.n = 256;
    GeneratorSpec seg;
    seg.kind = "segment";
    seg.n = 256;
    GeneratorSpec cant;
    cant.kind = "cantor4";
    cant.generation = 4;
    const std::map<std::string, DiscreteMeasure> suite{
        {"segment", generate(seg)}, {"circle", generate(ring)}, {"cantor4", generate(cant)}};
    std::map<std::string, double> ceil;
    double agree = 0.0;
    std::map<std::string, std::vector<double>> t_cache;
    for (std::size_t row = 0; row < samp.rows.size(); ++row) {
        const std::string& name = samp.rows[row][0];
        const bool sgn = samp.rows[row][2] == "signed";
        const DiscreteMeasure& m = suite.at(name);
        std::vector<double> f(m.size(), 1.0);
        if (sgn) {
            Rng rng(1);
            for (double& v : f) v = rng.uniform(-1.0, 1.0);
        }
        const Point x{samp.number(row, "x0"), samp.number(row, "x1")};
        const double ell = samp.number(row, "ell");
        const std::string key = name + samp.rows[row][2] + samp.rows[row][5];
        auto it = t_cache.find(key);
        if (it == t_cache.end()) {
            std::vector<double> g(m.size());
            for (std::size_t i = 0; i < m.size(); ++i) g[i] = oracle::t_brute(m, f, ell, m.position(i));
            it = t_cache.emplace(key, std::move(g)).first;
        }
        const double lhs = oracle::t_brute(m, f, ell, x);
        const double rhs = oracle::maximal_brute(m, it->second, ell, x, false) + oracle::maximal_brute(m, f, ell, x, true);
        const double ratio = lhs > 0.0 ? lhs / rhs : 0.0;
        ceil[name] = std::max(ceil[name], ratio);
        agree = std::max(agree, std::abs(ratio - samp.number(row, "ratio")) / std::max(ratio, 1e-300));
    }
    for (const auto& [name, w] : ceil) std::printf("kCotlarCeiling[%s] = %.6e (2x of %.6e)\n", name.c_str(), 2.0 * w, w);
    std::printf("cotlar library vs oracle max relative gap %.3e\n", agree);
}
