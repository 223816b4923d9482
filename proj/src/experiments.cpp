#include "gmt/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>

#include "gmt/calibration.hpp"
#include "gmt/corona.hpp"
#include "gmt/curvature.hpp"
#include "gmt/curve.hpp"
#include "gmt/generators.hpp"
#include "gmt/lattice.hpp"
#include "gmt/multiscale.hpp"
#include "gmt/numeric.hpp"

namespace gmt {

using nlohmann::json;

// ---------------------------------------------------------------------------------------------
// Report plumbing

std::string ReportTable::to_csv() const {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + row[i];
        out += '\n';
    }
    return out;
}

double ReportTable::number(std::size_t row, const std::string& column) const {
    const auto it = std::find(columns.begin(), columns.end(), column);
    if (it == columns.end()) throw std::out_of_range("report table " + name + ": no column " + column);
    const std::string& cell = rows.at(row).at(static_cast<std::size_t>(it - columns.begin()));
    if (cell == "inf") return std::numeric_limits<double>::infinity();
    if (cell == "-inf") return -std::numeric_limits<double>::infinity();
    if (cell == "nan") return std::numeric_limits<double>::quiet_NaN();
    return std::stod(cell);
}

bool ExperimentReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const ReportCheck& c) { return c.passed; });
}

const ReportTable& ExperimentReport::table(const std::string& name) const {
    for (const auto& t : tables)
        if (t.name == name) return t;
    throw std::out_of_range("report: no table " + name);
}

const ReportCheck& ExperimentReport::check(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return c;
    throw std::out_of_range("report: no check " + name);
}

std::string ExperimentReport::rows_text() const {
    std::string out;
    for (const auto& t : tables) out += "# " + t.name + "\n" + t.to_csv();
    out += "# checks\n";
    for (const auto& c : checks) out += c.name + "," + (c.passed ? "pass" : "fail") + "," + c.detail + "\n";
    return out;
}

std::string ExperimentReport::to_json_text() const {
    nlohmann::ordered_json j;
    j["experiment"] = id;
    j["inputs_hash"] = inputs_hash;
    j["quick"] = quick;
    j["environment"] = environment;
    j["config"] = nlohmann::ordered_json::parse(config_text);
    j["tables"] = nlohmann::ordered_json::array();
    for (const auto& t : tables) j["tables"].push_back({{"name", t.name}, {"columns", t.columns}, {"rows", t.rows}});
    j["checks"] = nlohmann::ordered_json::array();
    for (const auto& c : checks) j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    j["passed"] = passed();
    return j.dump(1) + "\n";
}

namespace {

std::string fmt(double v) { return format_double(v); }
std::string fmt(std::size_t v) { return std::to_string(v); }
std::string fmt(int v) { return std::to_string(v); }

ReportCheck make_check(std::string name, bool ok, std::string detail) {
    return ReportCheck{std::move(name), ok, std::move(detail)};
}

DiscreteMeasure make(const std::string& kind, std::size_t n, std::uint64_t seed = 1, double lip = 0.1) {
    GeneratorSpec g;
    g.kind = kind;
    g.n = n;
    g.seed = seed;
    g.lip = lip;
    return generate(g);
}

DiscreteMeasure cantor(int generation) {
    GeneratorSpec g;
    g.kind = "cantor4";
    g.generation = generation;
    return generate(g);
}

// Mass-weighted mean of the exact square function over [lo, hi] at the atoms.
double mean_sqfn(const DiscreteMeasure& m, double lo, double hi) {
    std::vector<double> parts(m.size());
    for (std::size_t i = 0; i < m.size(); ++i)
        parts[i] = m.weight(i) * sqfn_integral(m, m.position(i), ScaleRange{lo, hi});
    return pairwise_sum(parts) / m.total_mass();
}

// ---------------------------------------------------------------------------------------------

ExperimentReport cantor_divergence(const json& cfg) {
    ExperimentReport rep;
    const int n_min = cfg["n_min"], n_max = cfg["n_max"];
    if (n_min < 1 || n_max < n_min + 2) throw std::invalid_argument("cantor_divergence: need n_max >= n_min + 2 >= 3");
    const double lip = cfg["lip"], growth = cfg["growth_factor"], tol = cfg["flat_tolerance"];
    const int flat_from = cfg["flat_from"];
    const std::uint64_t seed = cfg["graph_seed"];

    ReportTable t{"S", {"family", "n", "atoms", "r_min", "S"}, {}};
    std::map<std::string, std::vector<double>> S;
    for (int n = n_min; n <= n_max; ++n) {
        const double lo = std::pow(4.0, -n);
        const std::size_t atoms = static_cast<std::size_t>(std::llround(std::pow(4.0, n)));
        const std::pair<std::string, DiscreteMeasure> fams[] = {
            {"cantor4", cantor(n)}, {"segment", make("segment", atoms)},
            {"lipschitz_graph", make("lipschitz_graph", atoms, seed, lip)}};
        for (const auto& [name, m] : fams) {
            const double s = mean_sqfn(m, lo, 1.0);
            S[name].push_back(s);
            t.rows.push_back({name, fmt(n), fmt(m.size()), fmt(lo), fmt(s)});
        }
    }
    rep.tables.push_back(t);

    // Least-squares line S = a n + b.
    ReportTable fit{"fit", {"family", "slope", "intercept"}, {}};
    for (const auto& [name, v] : S) {
        double sn = 0, ss = 0, snn = 0, sns = 0;
        const double cnt = static_cast<double>(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double n = n_min + static_cast<double>(i);
            sn += n;
            ss += v[i];
            snn += n * n;
            sns += n * v[i];
        }
        const double slope = (cnt * sns - sn * ss) / (cnt * snn - sn * sn);
        fit.rows.push_back({name, fmt(slope), fmt((ss - slope * sn) / cnt)});
    }
    rep.tables.push_back(fit);

    const auto& c = S["cantor4"];
    bool ok = true;
    std::string detail;
    for (std::size_t i = 1; i + 1 < c.size(); ++i) {
        const double prev = c[i] - c[i - 1], next = c[i + 1] - c[i];
        ok = ok && prev > 0.0 && next >= growth * prev;
        detail += (i > 1 ? ";" : "") + fmt(next / prev);
    }
    rep.checks.push_back(make_check("cantor_growth", ok, "increment ratios " + detail));
    for (const char* name : {"segment", "lipschitz_graph"}) {
        const auto& v = S[name];
        const auto first = v.begin() + std::max(0, flat_from - n_min);
        if (first >= v.end()) throw std::invalid_argument("cantor_divergence: flat_from beyond n_max");
        const auto [lo, hi] = std::minmax_element(first, v.end());
        const double var = *hi / *lo - 1.0;
        rep.checks.push_back(make_check(std::string(name) + "_bounded", *lo > 0.0 && var < tol, "variation " + fmt(var)));
    }
    return rep;
}

// ---------------------------------------------------------------------------------------------

ExperimentReport mv_identity_exp(const json& cfg) {
    ExperimentReport rep;
    GeneratorSpec circ;
    circ.kind = "circle";
    circ.n = cfg["circle_n"];
    circ.radius = cfg["circle_radius"];
    circ.norm = Normalization::probability;
    GeneratorSpec line;
    line.kind = "perturbed_line";
    line.n = cfg["line_n"];
    line.noise = cfg["line_noise"];
    line.seed = cfg["line_seed"];
    const double cprime = cfg["constant"];

    ReportTable t{"identity",
                  {"measure", "eps", "lhs", "rhs", "residual", "growth", "bound", "ratio", "cancellation"},
                  {}};
    bool bound_ok = true, cancel_ok = true;
    double worst = 0.0, worst_cancel = 0.0;
    for (const auto& spec : {circ, line}) {
        const auto m = generate(spec);
        for (double eps : cfg["eps"]) {
            const auto r = mv_identity(m, eps);
            const double bound = cprime * r.growth_const * r.growth_const * m.total_mass();
            const double ratio = std::abs(r.residual) / (r.growth_const * r.growth_const * m.total_mass());
            const double cancel = energy_cancellation(m, eps);
            const double rel = cancel / (std::max(r.lhs, 1e-300) * m.total_mass());
            t.rows.push_back({spec.kind, fmt(eps), fmt(r.lhs), fmt(r.rhs_curv), fmt(r.residual), fmt(r.growth_const),
                              fmt(bound), fmt(ratio), fmt(rel)});
            bound_ok = bound_ok && std::abs(r.residual) <= bound;
            cancel_ok = cancel_ok && rel <= 1e-9;
            worst = std::max(worst, ratio);
            worst_cancel = std::max(worst_cancel, rel);
        }
    }
    rep.tables.push_back(t);
    rep.checks.push_back(make_check("residual_bound", bound_ok, "max ratio " + fmt(worst) + " ceiling " + fmt(cprime)));
    rep.checks.push_back(make_check("energy_cancellation", cancel_ok, "max relative " + fmt(worst_cancel)));
    return rep;
}

// ---------------------------------------------------------------------------------------------

// Composite 5-point Gauss-Legendre along a polyline, panels no longer than h.
template <class F>
double polyline_quadrature(const std::vector<Point>& v, double h, F&& f) {
    static const double x5[5] = {0.0469100770306680, 0.2307653449471585, 0.5, 0.7692346550528415,
                                 0.9530899229693320};
    static const double w5[5] = {0.1184634425280945, 0.2393143352496832, 0.2844444444444444, 0.2393143352496832,
                                 0.1184634425280945};
    std::vector<double> parts;
    for (std::size_t s = 0; s + 1 < v.size(); ++s) {
        const double len = distance(v[s], v[s + 1]);
        const int panels = std::max(1, static_cast<int>(std::ceil(len / h)));
        for (int p = 0; p < panels; ++p)
            for (int q = 0; q < 5; ++q)
                parts.push_back(len / panels * w5[q] * f(lerp(v[s], v[s + 1], (p + x5[q]) / panels)));
    }
    return pairwise_sum(parts);
}

ExperimentReport curve_pipeline(const json& cfg) {
    ExperimentReport rep;
    const std::uint64_t seed = cfg["seed"];
    const auto m = make("lipschitz_graph", cfg["atoms"], seed, cfg["lip"]);
    const double eps0 = cfg["eps0"];
    const int kmax = cfg["kmax"];
    const int ad_samples = cfg["ad_samples"];
    const double c_ang = cfg["angle_constant"];

    // Stop cells from one corona pass over the root cell.
    std::vector<StopCell> stops;
    std::size_t stop_count = 0, term_count = 0;
    const json& cc = cfg["corona"];
    if (cc["enabled"]) {
        LatticeParams lp;
        lp.A0 = cc["A0"];
        lp.C0 = cc["C0"];
        lp.depth = cc["depth"];
        const auto lat = build_lattice(m, lp);
        CoronaParams p;
        p.delta = cc["delta"];
        p.eta = cc["eta"];
        p.tau = cc["tau"];
        p.A = cc["A"];
        CoronaContext ctx(m, lat, p);
        const auto tree = build_tree(ctx, lat.levels[0][0]);
        for (std::size_t s : tree.stop) {
            const Cell& c = lat.cell(s);
            stops.push_back(StopCell{c.center, 2.0 * c.big_ball().radius, c.ell});
        }
        stop_count = tree.stop.size();
        term_count = tree.term.size();
    }

    const auto chain = build_curves(m, stops, eps0, kmax);
    const int K = chain.generations();

    ReportTable gens{"generations",
                     {"k", "segments", "half_ball_violations", "max_angle_dev", "angle_over_eps0", "sixth_ball_overlaps",
                      "ad_upper", "ad_lower", "length_floor_violations", "min_floor_ratio", "max_pi_displacement",
                      "ancestry_angle_sq", "ancestry_beta4"},
                     {}};
    std::size_t half = 0, sixth = 0, floor_bad = 0;
    double angle = 0.0, floor_ratio = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= K; ++k) {
        const auto d = curve_diagnostics(chain, k, &m, ad_samples, seed);
        gens.rows.push_back({fmt(k), fmt(d.segments), fmt(d.half_ball_violations), fmt(d.max_angle_dev),
                             fmt(d.max_angle_dev / eps0), fmt(d.sixth_ball_overlaps), fmt(d.ad_upper), fmt(d.ad_lower),
                             fmt(d.length_floor_violations), fmt(d.min_floor_ratio), fmt(d.max_pi_displacement),
                             fmt(d.max_ancestry_angle_sq), fmt(d.max_ancestry_beta4)});
        half += d.half_ball_violations;
        sixth += d.sixth_ball_overlaps;
        floor_bad += d.length_floor_violations;
        angle = std::max(angle, d.max_angle_dev);
        floor_ratio = std::min(floor_ratio, d.min_floor_ratio);
    }
    rep.tables.push_back(gens);

    ReportTable summary{"summary", {"metric", "value"}, {}};
    auto put = [&](const std::string& k, const std::string& v) { summary.rows.push_back({k, v}); };
    put("atoms", fmt(m.size()));
    put("d0", fmt(chain.d0));
    put("generations", fmt(K));
    put("term_cells", fmt(term_count));
    put("stop_cells", fmt(stop_count));
    put("frozen", fmt(chain.frozen));
    put("split_min", fmt(chain.split_min));
    put("split_max", fmt(chain.split_max));
    put("split_violations", fmt(chain.split_violations));

    // sigma^K.
    const auto sig = build_sigma(chain, K);
    double mass_dev = 0.0;
    for (double gm : sig.generation_mass) mass_dev = std::max(mass_dev, std::abs(gm - sig.generation_mass[0]));
    mass_dev /= sig.generation_mass[0];
    const double r_lo = chain.gen(K).length(0) / 4.0, r_hi = chain.d0;
    const int gs = cfg["growth_samples"];
    const double g1 = sampled_growth(build_sigma(chain, 1).sigma, chain.gen(1), gs, seed, r_lo, r_hi);
    const double gK = sampled_growth(sig.sigma, chain.gen(K), gs, seed, r_lo, r_hi);
    put("sigma_generation_mass_rel_dev", fmt(mass_dev));
    put("sigma_ledger_error", fmt(sig.max_ledger_error));
    put("sigma_growth_k1", fmt(g1));
    put("sigma_growth_kK", fmt(gK));

    // Partition of unity at sampled points around Gamma^K.
    const PolyCurve& cK = chain.gen(K);
    const PartitionOfUnity pou(cK);
    Rng rng(seed);
    double pou_range = 0.0, pou_cover = 0.0;
    std::size_t covered = 0;
    const int pou_samples = cfg["pou_samples"];
    for (int t = 0; t < pou_samples; ++t) {
        const std::size_t j = rng.below(cK.size());
        Point x = lerp(cK.a(j), cK.b(j), rng.uniform());
        const double spread = (t % 4 == 0 ? 3.0 : 1.0) * cK.length(j);
        x[0] += rng.uniform(-spread, spread);
        x[1] += rng.uniform(-spread, spread);
        const double s = pou.sum(x);
        pou_range = std::max({pou_range, -s, s - 1.0});
        if (pou.covered(x)) {
            ++covered;
            pou_cover = std::max(pou_cover, std::abs(s - 1.0));
        }
    }
    put("pou_samples", fmt(pou_samples));
    put("pou_covered", fmt(covered));
    put("pou_range_excess", fmt(pou_range));
    put("pou_cover_error", fmt(pou_cover));

    // nu^K mass accounting against composite quadrature of sum c_j theta_j.
    const auto nu = build_nu(chain, K, m);
    const auto ext = chain.extended_vertices(K);
    double shortest = chain.d0;
    for (std::size_t j = 0; j < cK.size(); ++j) shortest = std::min(shortest, cK.length(j));
    const double line_side = polyline_quadrature(ext, shortest / 64.0, [&](const Point& x) {
        double s = 0.0;
        for (const auto& [j, t] : pou.thetas(x)) s += nu.c[j] * t;
        return s;
    });
    const std::vector<double> atom_parts(nu.atom_mass.begin() + 1, nu.atom_mass.end());
    const double atom_side = pairwise_sum(atom_parts);
    const double accounting = std::abs(line_side - atom_side) / atom_side;
    put("nu_atom_mass", fmt(atom_side));
    put("nu_line_mass", fmt(line_side));
    put("nu_accounting_rel_error", fmt(accounting));
    put("nu_uncovered_mass", fmt(nu.uncovered_mass));
    put("nu_c0", fmt(nu.c[0]));

    DensityRatioOptions opt;
    opt.samples = cfg["density_samples"];
    const auto dr = density_ratio_stats(nu.nu, sig.sigma, nu.c[0], opt);
    put("density_l2_deviation", fmt(dr.l2_deviation));
    put("density_sqfn_mass", fmt(dr.sqfn_mass));
    put("density_f_min", fmt(dr.f_min));
    put("density_f_max", fmt(dr.f_max));

    // Collinear control.
    const auto seg = make("segment", cfg["collinear_atoms"]);
    const auto sch = build_curves(seg, {}, eps0, kmax);
    const Point axis = sch.axis();
    double off_axis = 0.0, length_dev = 0.0;
    for (int k = 1; k <= sch.generations(); ++k) {
        const PolyCurve& c = sch.gen(k);
        for (const Point& v : c.vertices) {
            const Point d = v - sch.zA;
            off_axis = std::max(off_axis, norm(d - dot(d, axis) * axis));
        }
        length_dev = std::max(length_dev, std::abs(c.total_length() - sch.d0));
    }
    put("collinear_generations", fmt(sch.generations()));
    put("collinear_off_axis", fmt(off_axis));
    put("collinear_length_dev", fmt(length_dev));
    rep.tables.push_back(summary);

    rep.checks.push_back(make_check("split_bounds", chain.split_violations == 0,
                                    "range [" + fmt(chain.split_min) + ", " + fmt(chain.split_max) + "] violations " +
                                        fmt(chain.split_violations)));
    rep.checks.push_back(make_check("length_floor", floor_bad == 0,
                                    "violations " + fmt(floor_bad) + " min ratio " + fmt(floor_ratio)));
    rep.checks.push_back(make_check("sixth_ball_disjoint", sixth == 0, "overlaps " + fmt(sixth)));
    rep.checks.push_back(make_check("half_ball", half == 0, "violations " + fmt(half)));
    rep.checks.push_back(make_check("angle", angle <= c_ang * eps0,
                                    "max angle / eps0 " + fmt(angle / eps0) + " ceiling " + fmt(c_ang)));
    rep.checks.push_back(make_check("collinear", off_axis <= 1e-12 && length_dev <= 1e-12 * sch.d0,
                                    "off axis " + fmt(off_axis) + " length " + fmt(length_dev)));
    rep.checks.push_back(make_check("sigma_mass", mass_dev <= 1e-12 && sig.max_ledger_error <= 1e-12,
                                    "generation " + fmt(mass_dev) + " ledger " + fmt(sig.max_ledger_error)));
    rep.checks.push_back(make_check("sigma_growth", gK <= 3.0 * g1, "ratio " + fmt(gK / g1)));
    rep.checks.push_back(make_check("partition_of_unity", pou_range <= 1e-9 && pou_cover <= 1e-9,
                                    "range " + fmt(pou_range) + " cover " + fmt(pou_cover)));
    rep.checks.push_back(make_check("nu_accounting", accounting <= 1e-6, "relative " + fmt(accounting)));
    return rep;
}

// ---------------------------------------------------------------------------------------------

ExperimentReport corona_packing(const json& cfg) {
    ExperimentReport rep;
    CoronaParams p;
    p.delta = cfg["delta"];
    p.eta = cfg["eta"];
    p.tau = cfg["tau"];
    p.A = cfg["A"];
    const int rounds = cfg["rounds"];
    ReportTable t{"packing",
                  {"measure", "param", "atoms", "effective_depth", "generations", "lhs", "root_term", "sqfn_term", "rhs", "ratio"},
                  {}};
    auto run = [&](const DiscreteMeasure& m, const LatticeParams& lp, const std::string& name, int param) {
        const auto lat = build_lattice(m, lp);
        CoronaContext ctx(m, lat, p);
        const auto tops = top_iteration(ctx, lat.levels[0][0], rounds);
        const auto r = packing_report(ctx, tops);
        t.rows.push_back({name, fmt(param), fmt(m.size()), fmt(lat.effective_depth), fmt(tops.size()), fmt(r.lhs), fmt(r.root_term),
                          fmt(r.sqfn_term), fmt(r.rhs), fmt(r.ratio)});
        return r;
    };

    const auto g = make("lipschitz_graph", cfg["graph_atoms"], cfg["graph_seed"], 0.1);
    std::vector<double> ratios;
    for (int depth : cfg["graph_depths"]) {
        LatticeParams lp;
        lp.A0 = cfg["graph_A0"];
        lp.C0 = cfg["C0"];
        lp.depth = depth;
        ratios.push_back(run(g, lp, "lipschitz_graph", depth).ratio);
    }
    std::vector<double> lhs;
    for (int n : cfg["cantor_generations"]) {
        LatticeParams lp;
        lp.A0 = cfg["cantor_A0"];
        lp.scale = cfg["cantor_scale"];
        lp.C0 = cfg["C0"];
        lp.depth = cfg["cantor_depth"];
        lhs.push_back(run(cantor(n), lp, "cantor4", n).lhs);
    }
    rep.tables.push_back(t);

    bool finite = true;
    for (std::size_t r = 0; r < t.rows.size(); ++r) finite = finite && std::isfinite(t.number(r, "ratio"));
    rep.checks.push_back(make_check("finite", finite, fmt(t.rows.size()) + " runs"));
    double spread = 0.0;
    for (double r : ratios) spread = std::max(spread, std::abs(r / ratios.front() - 1.0));
    rep.checks.push_back(make_check("graph_ratio_stable", spread <= 0.5, "max relative change " + fmt(spread)));
    bool grows = lhs.size() < 2 || lhs.back() > lhs.front();
    for (std::size_t i = 1; i < lhs.size(); ++i) grows = grows && lhs[i] >= lhs[i - 1];
    rep.checks.push_back(make_check("cantor_lhs_grows", grows, "generations " + fmt(lhs.size())));
    return rep;
}

// ---------------------------------------------------------------------------------------------

double median_spacing(const DiscreteMeasure& m) {
    std::vector<double> d(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) d[i] = distance(m.position(i), m.position(m.nearest(m.position(i), i)));
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2), d.end());
    return d[d.size() / 2];
}

// max over atoms and log-spaced r in [h, diam] of mu(B(x, 2r)) / mu(B(x, r)).
double doubling_estimate(const DiscreteMeasure& m, double h) {
    const double diam = m.diameter();
    double worst = 1.0;
    const int steps = 64;
    for (std::size_t i = 0; i < m.size(); ++i)
        for (int s = 0; s <= steps; ++s) {
            const double r = h * std::pow(diam / h, static_cast<double>(s) / steps);
            worst = std::max(worst, m.ball_mass({m.position(i), 2.0 * r}) / m.ball_mass({m.position(i), r}));
        }
    return worst;
}

ExperimentReport cotlar_scan(const json& cfg) {
    ExperimentReport rep;
    const std::size_t atoms = cfg["atoms"];
    const int samples = cfg["samples"], levels = cfg["ell_levels"];
    const std::uint64_t seed = cfg["seed"];
    if (levels < 2 || samples < 1) throw std::invalid_argument("cotlar_scan: need ell_levels >= 2 and samples >= 1");
    const json& ceilings = cfg["ceilings"];

    GeneratorSpec circ;
    circ.kind = "circle";
    circ.n = atoms;
    const std::pair<std::string, DiscreteMeasure> suite[] = {
        {"segment", make("segment", atoms)}, {"circle", generate(circ)}, {"cantor4", cantor(cfg["cantor_generation"])}};

    ReportTable samp{"samples", {"measure", "sample", "f", "x0", "x1", "ell", "lhs", "max_T", "max_power", "ratio"}, {}};
    ReportTable sum{"summary", {"measure", "atoms", "doubling", "ell_min", "ell_max", "max_ratio", "ceiling"}, {}};
    bool finite = true, below = true;
    std::string detail;
    for (const auto& [name, m] : suite) {
        const double h = median_spacing(m), diam = m.diameter();
        Rng rng(seed);
        std::vector<double> signed_f(m.size());
        for (double& v : signed_f) v = rng.uniform(-1.0, 1.0);
        const std::vector<double> one(m.size(), 1.0);
        const std::vector<double>* fs[2] = {&one, &signed_f};
        std::vector<double> ells(static_cast<std::size_t>(levels));
        for (int i = 0; i < levels; ++i) ells[static_cast<std::size_t>(i)] = h * std::pow(diam / h, i / (levels - 1.0));
        // T_{mu,ell} f at every atom, per (f, level), filled on first use.
        std::map<std::pair<int, int>, std::vector<double>> cache;
        auto T_atoms = [&](int fi, int li) -> const std::vector<double>& {
            auto it = cache.find({fi, li});
            if (it != cache.end()) return it->second;
            std::vector<double> g(m.size());
            for (std::size_t i = 0; i < m.size(); ++i)
                g[i] = t_transform(m, *fs[fi], 1, ells[static_cast<std::size_t>(li)], m.position(i));
            return cache.emplace(std::pair{fi, li}, std::move(g)).first->second;
        };

        double worst = 0.0;
        for (int s = 0; s < samples; ++s) {
            const int fi = s % 2;
            const int li = static_cast<int>(rng.below(static_cast<std::size_t>(levels)));
            const double ell = ells[static_cast<std::size_t>(li)];
            // Mostly on or near the support, some well off it.
            Point x = m.position(rng.below(m.size()));
            if (rng.uniform() < 0.5) {
                const double u = rng.uniform();
                const double rad = 0.5 * diam * u * u;
                const double a = 2.0 * std::numbers::pi * rng.uniform();
                x[0] += rad * std::cos(a);
                x[1] += rad * std::sin(a);
            }
            const double lhs = t_transform(m, *fs[fi], 1, ell, x);
            const double mt = maximal_op(m, T_atoms(fi, li), MaxKind::ratio, 1, ell, x);
            const double mp = maximal_op(m, *fs[fi], MaxKind::power, 1, ell, x);
            const double ratio = lhs > 0.0 ? lhs / (mt + mp) : 0.0;
            finite = finite && std::isfinite(ratio);
            worst = std::max(worst, ratio);
            samp.rows.push_back({name, fmt(s), fi == 0 ? "one" : "signed", fmt(x[0]), fmt(x[1]), fmt(ell), fmt(lhs),
                                 fmt(mt), fmt(mp), fmt(ratio)});
        }
        const double ceiling = ceilings.contains(name) ? ceilings[name].get<double>()
                                                        : std::numeric_limits<double>::infinity();
        below = below && worst <= ceiling;
        sum.rows.push_back({name, fmt(m.size()), fmt(doubling_estimate(m, h)), fmt(h), fmt(diam), fmt(worst),
                            fmt(ceiling)});
        detail += (detail.empty() ? "" : "; ") + name + " " + fmt(worst) + " <= " + fmt(ceiling);
    }
    rep.tables.push_back(sum);
    rep.tables.push_back(samp);
    rep.checks.push_back(make_check("finite", finite, "all ratios finite"));
    rep.checks.push_back(make_check("ceiling", below, detail));
    return rep;
}

// ---------------------------------------------------------------------------------------------

json defaults_for(const std::string& name, bool quick) {
    if (name == "cantor_divergence")
        return {{"n_min", 2}, {"n_max", 5}, {"lip", 0.1}, {"graph_seed", 1}, {"growth_factor", 0.5},
                {"flat_tolerance", 0.2}, {"flat_from", 3}};
    if (name == "mv_identity") {
        json eps = json::array();
        for (double e : calibration::kMVEps) eps.push_back(e);
        return {{"circle_n", 200}, {"circle_radius", 2.0}, {"line_n", 300}, {"line_noise", calibration::kMVLineNoise},
                {"line_seed", calibration::kMVLineSeed}, {"eps", eps}, {"constant", calibration::kMVConstant}};
    }
    if (name == "curve_pipeline")
        return {{"atoms", calibration::kCurveAtoms},
                {"lip", calibration::kCurveLip},
                {"seed", 1},
                {"eps0", calibration::kCurveEps0},
                {"kmax", calibration::kCurveKMax},
                {"ad_samples", quick ? 200 : 1000},
                {"growth_samples", 1000},
                {"pou_samples", 10000},
                {"density_samples", quick ? 40 : 200},
                {"collinear_atoms", 2000},
                {"angle_constant", calibration::kCAngle},
                {"corona",
                 {{"enabled", true}, {"A0", 32.0}, {"C0", 200.0}, {"depth", 6}, {"delta", 0.01}, {"eta", 1e4},
                  {"tau", 1e-6}, {"A", 1e6}}}};
    if (name == "corona_packing")
        return {{"graph_atoms", 1000},
                {"graph_seed", 3},
                {"graph_A0", 12.0},
                {"graph_depths", quick ? json{3, 4} : json{3, 4, 5, 6}},
                {"cantor_generations", {2, 3, 4, 5}},
                {"cantor_A0", 16.0},
                {"cantor_scale", 0.17},
                {"cantor_depth", 8},
                {"C0", 200.0},
                {"delta", 0.05},
                {"eta", 0.5},
                {"tau", 0.05},
                {"A", 3.0},
                {"rounds", 8}};
    if (name == "cotlar_scan") {
        json ceil = json::object();
        for (std::size_t i = 0; i < std::size(calibration::kCotlarMeasures); ++i)
            ceil[calibration::kCotlarMeasures[i]] = calibration::kCotlarCeiling[i];
        return {{"atoms", 256}, {"cantor_generation", 4}, {"samples", quick ? 200 : 1000}, {"ell_levels", 24},
                {"seed", 1}, {"ceilings", ceil}};
    }
    throw std::invalid_argument("unknown experiment: " + name);
}

void merge(json& base, const json& user, const std::string& path) {
    if (!user.is_object()) throw std::invalid_argument("experiment config" + path + " must be an object");
    for (auto it = user.begin(); it != user.end(); ++it) {
        if (!base.contains(it.key())) throw std::invalid_argument("unknown config key " + path + "/" + it.key());
        json& slot = base[it.key()];
        if (slot.is_object() && it.key() != "ceilings") merge(slot, it.value(), path + "/" + it.key());
        else slot = it.value();
    }
}

}  // namespace

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"cantor_divergence", "mv_identity", "curve_pipeline", "corona_packing",
                                                "cotlar_scan"};
    return names;
}

json default_config(const std::string& name, bool quick) { return defaults_for(name, quick); }

ExperimentReport run_experiment(const std::string& name, const json& config, bool quick) {
    json cfg = defaults_for(name, quick);
    merge(cfg, config, "");
    ExperimentReport rep;
    try {
        if (name == "cantor_divergence") rep = cantor_divergence(cfg);
        else if (name == "mv_identity") rep = mv_identity_exp(cfg);
        else if (name == "curve_pipeline") rep = curve_pipeline(cfg);
        else if (name == "corona_packing") rep = corona_packing(cfg);
        else rep = cotlar_scan(cfg);
    } catch (const json::exception& e) {
        throw std::invalid_argument(name + ": bad config value: " + e.what());
    }
    rep.id = name;
    rep.quick = quick;
    rep.config_text = cfg.dump();
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(name + "\n" + rep.config_text + (quick ? "\nquick" : ""))));
    rep.inputs_hash = hash;
#ifdef NDEBUG
    rep.environment = std::string(__VERSION__) + ", C++" + std::to_string(__cplusplus) + ", release";
#else
    rep.environment = std::string(__VERSION__) + ", C++" + std::to_string(__cplusplus) + ", debug";
#endif
    return rep;
}

}  // namespace gmt
