// gmtkit: command-line front end. Exit 0 = assertions passed, 2 = assertion failure, 1 = usage or IO error.
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "gmt/corona.hpp"
#include "gmt/curvature.hpp"
#include "gmt/curve.hpp"
#include "gmt/experiments.hpp"
#include "gmt/generators.hpp"
#include "gmt/lattice.hpp"
#include "gmt/measure.hpp"
#include "gmt/multiscale.hpp"
#include "gmt/numeric.hpp"

using namespace gmt;
using nlohmann::json;

namespace {

constexpr int kPass = 0, kUsage = 1, kAssert = 2;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Empty path or "-" writes to stdout.
void write_out(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("write failed: " + path);
}

DiscreteMeasure read_measure(const std::string& path) {
    try {
        return measure_from_json_text(read_file(path));
    } catch (const IoError&) {
        throw;
    } catch (const std::exception& e) {
        throw IoError(path + ": " + e.what());
    }
}

int report_checks(const std::vector<ReportCheck>& checks) {
    bool ok = true;
    for (const auto& c : checks) {
        std::cerr << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
        ok = ok && c.passed;
    }
    return ok ? kPass : kAssert;
}

ScaleRange parse_range(const std::string& s) {
    const auto comma = s.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("--range expects a,b");
    const std::string hi = s.substr(comma + 1);
    ScaleRange r{std::stod(s.substr(0, comma)),
                 hi == "inf" ? std::numeric_limits<double>::infinity() : std::stod(hi)};
    r.validate();
    return r;
}

struct LatticeArgs {
    double A0 = 32.0, C0 = 2.0, scale = 0.0;
    int depth = 6;

    void add(CLI::App* app) {
        app->add_option("--A0", A0, "scale ratio between levels");
        app->add_option("--C0", C0, "doubling constant");
        app->add_option("--depth", depth, "deepest level");
        app->add_option("--scale", scale, "top scale; 0 uses the diameter");
    }
    LatticeParams params() const {
        LatticeParams p;
        p.A0 = A0;
        p.C0 = C0;
        p.depth = depth;
        p.scale = scale;
        return p;
    }
};

bool pairwise_disjoint(const Lattice& lat, const std::vector<std::size_t>& ids) {
    std::set<std::size_t> seen;
    for (std::size_t c : ids)
        for (std::size_t a : lat.cell(c).atoms)
            if (!seen.insert(a).second) return false;
    return true;
}

std::vector<StopCell> read_stop_cells(const std::string& path) {
    std::vector<StopCell> out;
    try {
        for (const auto& s : json::parse(read_file(path))) {
            Point c(static_cast<int>(s.at("center").size()));
            for (std::size_t i = 0; i < s.at("center").size(); ++i) c[static_cast<int>(i)] = s.at("center")[i];
            out.push_back(StopCell{c, s.at("radius"), s.at("ell")});
        }
    } catch (const json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gmtkit: multiscale analysis of discrete measures"};
    app.require_subcommand(1);
    bool quick = false;
    app.add_flag("--quick", quick, "reduced sizes for experiments");

    // gen
    auto* gen = app.add_subcommand("gen", "generate a measure");
    GeneratorSpec spec;
    std::string gen_out, norm = "h1";
    gen->add_option("kind", spec.kind, "segment|circle|lipschitz_graph|cantor4|perturbed_line|atom_cloud")->required();
    gen->add_option("--n", spec.n, "atoms");
    gen->add_option("--generation", spec.generation, "cantor4 generation");
    gen->add_option("--length", spec.length);
    gen->add_option("--radius", spec.radius);
    gen->add_option("--lip", spec.lip);
    gen->add_option("--noise", spec.noise);
    gen->add_option("--seed", spec.seed);
    gen->add_option("--norm", norm, "h1|probability")->check(CLI::IsMember({"h1", "probability"}));
    gen->add_option("--out", gen_out, "output JSON (stdout if omitted)");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "square function at every atom");
    std::string an_measure, an_range, an_mode = "exact", an_out;
    int an_q = 32;
    analyze->add_option("--measure", an_measure)->required();
    analyze->add_option("--range", an_range, "r_min,r_max (r_max may be inf)")->required();
    analyze->add_option("--mode", an_mode)->check(CLI::IsMember({"exact", "grid"}));
    analyze->add_option("--q", an_q, "grid points per octave");
    analyze->add_option("--out", an_out, "output CSV");

    // curvature
    auto* curv = app.add_subcommand("curvature", "Menger curvature and the Cauchy identity");
    std::string cv_measure, cv_mode = "exact", cv_out;
    double cv_eps = 0.0;
    std::uint64_t cv_samples = 1000000, cv_seed = 1;
    bool cv_force = false;
    curv->add_option("--measure", cv_measure)->required();
    curv->add_option("--eps", cv_eps, "separation threshold");
    curv->add_option("--mode", cv_mode)->check(CLI::IsMember({"exact", "sampled"}));
    curv->add_option("--samples", cv_samples);
    curv->add_option("--seed", cv_seed);
    curv->add_flag("--force", cv_force, "allow exact mode on large measures");
    curv->add_option("--out", cv_out, "output CSV");

    // lattice
    auto* lat_cmd = app.add_subcommand("lattice", "dyadic lattice");
    std::string la_measure, la_out, la_csv;
    LatticeArgs la;
    lat_cmd->add_option("--measure", la_measure)->required();
    la.add(lat_cmd);
    lat_cmd->add_option("--out", la_out, "lattice JSON");
    lat_cmd->add_option("--csv", la_csv, "per-cell CSV");

    // corona
    auto* cor = app.add_subcommand("corona", "stopping-time tree from the top cell");
    std::string co_measure, co_out, co_stop_out;
    LatticeArgs co_lat;
    CoronaParams co_p;
    int co_root_level = 0;
    cor->add_option("--measure", co_measure)->required();
    co_lat.add(cor);
    cor->add_option("--delta", co_p.delta);
    cor->add_option("--eta", co_p.eta);
    cor->add_option("--tau", co_p.tau);
    cor->add_option("--A", co_p.A);
    cor->add_option("--root-level", co_root_level, "level of the root cell (first cell of that level)");
    cor->add_option("--out", co_out, "tree JSON");
    cor->add_option("--stop-out", co_stop_out, "Stop cells for `curve --stop-cells`");

    // curve
    auto* crv = app.add_subcommand("curve", "curve approximation");
    std::string cu_measure, cu_stop, cu_out, cu_csv;
    double cu_eps0 = 0.05;
    int cu_kmax = 12, cu_ad = 1000;
    crv->add_option("--measure", cu_measure)->required();
    crv->add_option("--eps0", cu_eps0);
    crv->add_option("--kmax", cu_kmax);
    crv->add_option("--stop-cells", cu_stop, "JSON array of {center, radius, ell}");
    crv->add_option("--ad-samples", cu_ad);
    crv->add_option("--out", cu_out, "curves JSON");
    crv->add_option("--csv", cu_csv, "per-generation diagnostics CSV");

    // experiment
    auto* exp = app.add_subcommand("experiment", "run a named experiment");
    std::string ex_name, ex_config, ex_out, ex_csv_dir;
    exp->add_option("name", ex_name)->required()->check(CLI::IsMember(experiment_names()));
    exp->add_option("--config", ex_config, "JSON config overriding the defaults");
    exp->add_option("--out", ex_out, "report JSON");
    exp->add_option("--csv-dir", ex_csv_dir, "one CSV per report table");
    exp->add_flag("--quick", quick, "reduced sizes");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kPass : kUsage;
    }

    try {
        if (gen->parsed()) {
            spec.norm = norm == "h1" ? Normalization::h1 : Normalization::probability;
            write_out(gen_out, measure_to_json_text(generate(spec)));
            return kPass;
        }

        if (analyze->parsed()) {
            const auto m = read_measure(an_measure);
            const ScaleRange range = parse_range(an_range);
            const QuadMode mode = an_mode == "exact" ? QuadMode::exact : QuadMode::grid;
            ReportTable t{"sqfn", {"atom", "weight", "sqfn"}, {}};
            for (int d = m.dim() - 1; d >= 0; --d) t.columns.insert(t.columns.begin() + 1, "x" + std::to_string(d));
            bool ok = true;
            for (std::size_t i = 0; i < m.size(); ++i) {
                const double v = sqfn_integral(m, m.position(i), range, mode, an_q);
                ok = ok && std::isfinite(v) && v >= 0.0;
                std::vector<std::string> row{std::to_string(i)};
                for (int d = 0; d < m.dim(); ++d) row.push_back(format_double(m.position(i)[d]));
                row.push_back(format_double(m.weight(i)));
                row.push_back(format_double(v));
                t.rows.push_back(row);
            }
            write_out(an_out, t.to_csv());
            return report_checks({{"finite_nonnegative", ok, std::to_string(m.size()) + " atoms"}});
        }

        if (curv->parsed()) {
            const auto m = read_measure(cv_measure);
            CurvatureOptions opt;
            opt.mode = cv_mode == "exact" ? CurvatureMode::exact : CurvatureMode::sampled;
            opt.samples = cv_samples;
            opt.seed = cv_seed;
            opt.force = cv_force;
            const auto c = curvature_total(m, cv_eps, opt);
            ReportTable t{"curvature",
                          {"mode", "eps", "c2", "std_error", "triples", "lhs", "rhs", "residual", "growth",
                           "cancellation"},
                          {}};
            std::vector<ReportCheck> checks{{"c2_nonnegative", c.c2 >= 0.0, format_double(c.c2)}};
            if (m.dim() == 2 && cv_eps > 0.0) {
                const auto mv = mv_identity(m, cv_eps);
                const double cancel = energy_cancellation(m, cv_eps);
                t.rows.push_back({cv_mode, format_double(cv_eps), format_double(c.c2), format_double(c.std_error),
                                  std::to_string(c.triples_evaluated), format_double(mv.lhs),
                                  format_double(mv.rhs_curv), format_double(mv.residual),
                                  format_double(mv.growth_const), format_double(cancel)});
                checks.push_back({"energy_cancellation", cancel <= 1e-9 * std::max(mv.lhs, 1e-300) * m.total_mass(),
                                  format_double(cancel)});
            } else {
                t.rows.push_back({cv_mode, format_double(cv_eps), format_double(c.c2), format_double(c.std_error),
                                  std::to_string(c.triples_evaluated), "", "", "", "", ""});
            }
            write_out(cv_out, t.to_csv());
            return report_checks(checks);
        }

        if (lat_cmd->parsed()) {
            const auto m = read_measure(la_measure);
            const auto lat = build_lattice(m, la.params());
            if (!la_out.empty()) write_out(la_out, lattice_to_json_text(lat));
            ReportTable t{"cells", {"id", "level", "center_atom", "r", "ell", "mass", "atoms", "parent", "doubling"}, {}};
            for (const Cell& c : lat.cells)
                t.rows.push_back({std::to_string(c.id), std::to_string(c.level), std::to_string(c.center_atom),
                                  format_double(c.r), format_double(c.ell), format_double(c.mass),
                                  std::to_string(c.atoms.size()),
                                  c.parent == kNoCell ? "" : std::to_string(c.parent), c.doubling ? "1" : "0"});
            if (!la_csv.empty()) write_out(la_csv, t.to_csv());
            if (la_out.empty() && la_csv.empty()) write_out("", t.to_csv());
            bool partition = true, disjoint = true;
            for (const auto& ids : lat.levels) {
                std::vector<double> masses;
                std::size_t count = 0;
                for (std::size_t id : ids) {
                    masses.push_back(lat.cell(id).mass);
                    count += lat.cell(id).atoms.size();
                }
                partition = partition && count == m.size() && pairwise_disjoint(lat, ids) &&
                            std::abs(pairwise_sum(masses) - m.total_mass()) <= 1e-12 * m.total_mass();
                for (std::size_t a = 0; a < ids.size(); ++a)
                    for (std::size_t b = a + 1; b < ids.size(); ++b) {
                        const Cell &p = lat.cell(ids[a]), &q = lat.cell(ids[b]);
                        disjoint = disjoint && distance(p.center, q.center) > 5.0 * p.r + 5.0 * q.r;
                    }
            }
            return report_checks({{"mass_partition", partition, std::to_string(lat.levels.size()) + " levels"},
                                  {"5B_disjoint", disjoint, std::to_string(lat.cells.size()) + " cells"}});
        }

        if (cor->parsed()) {
            const auto m = read_measure(co_measure);
            const auto lat = build_lattice(m, co_lat.params());
            if (co_root_level < 0 || co_root_level >= static_cast<int>(lat.levels.size()))
                throw std::invalid_argument("--root-level beyond the lattice depth");
            CoronaContext ctx(m, lat, co_p);
            for (const auto& w : co_p.ordering_warnings()) std::cerr << "warning: " << w << "\n";
            const auto tree = build_tree(ctx, lat.levels[static_cast<std::size_t>(co_root_level)].front());
            write_out(co_out, corona_to_json_text(ctx, tree));
            if (!co_stop_out.empty()) {
                nlohmann::ordered_json cells = nlohmann::ordered_json::array();
                for (std::size_t s : tree.stop) {
                    const Cell& c = lat.cell(s);
                    std::vector<double> center(c.center.c.begin(), c.center.c.begin() + c.center.dim);
                    cells.push_back({{"cell", s}, {"center", center}, {"radius", 2.0 * c.big_ball().radius},
                                     {"ell", c.ell}});
                }
                write_out(co_stop_out, cells.dump(1) + "\n");
            }
            return report_checks({{"term_disjoint", pairwise_disjoint(lat, tree.term), std::to_string(tree.term.size())},
                                  {"reg_disjoint", pairwise_disjoint(lat, tree.reg), std::to_string(tree.reg.size())},
                                  {"stop_inside_term", tree.stop_outside_term == 0,
                                   std::to_string(tree.stop_outside_term) + " outside"}});
        }

        if (crv->parsed()) {
            const auto m = read_measure(cu_measure);
            const auto stops = cu_stop.empty() ? std::vector<StopCell>{} : read_stop_cells(cu_stop);
            const auto chain = build_curves(m, stops, cu_eps0, cu_kmax);
            if (!cu_out.empty()) write_out(cu_out, curves_to_json_text(chain));
            ReportTable t{"generations",
                          {"k", "segments", "half_ball_violations", "max_angle_dev", "sixth_ball_overlaps", "ad_upper",
                           "ad_lower", "length_floor_violations", "min_floor_ratio", "max_pi_displacement"},
                          {}};
            std::size_t half = 0, sixth = 0, floor_bad = 0;
            for (int k = 1; k <= chain.generations(); ++k) {
                const auto d = curve_diagnostics(chain, k, &m, cu_ad);
                t.rows.push_back({std::to_string(k), std::to_string(d.segments), std::to_string(d.half_ball_violations),
                                  format_double(d.max_angle_dev), std::to_string(d.sixth_ball_overlaps),
                                  format_double(d.ad_upper), format_double(d.ad_lower),
                                  std::to_string(d.length_floor_violations), format_double(d.min_floor_ratio),
                                  format_double(d.max_pi_displacement)});
                half += d.half_ball_violations;
                sixth += d.sixth_ball_overlaps;
                floor_bad += d.length_floor_violations;
            }
            if (!cu_csv.empty() || cu_out.empty()) write_out(cu_csv, t.to_csv());
            return report_checks({{"split_bounds", chain.split_violations == 0,
                                   std::to_string(chain.split_violations) + " violations"},
                                  {"half_ball", half == 0, std::to_string(half) + " violations"},
                                  {"sixth_ball_disjoint", sixth == 0, std::to_string(sixth) + " overlaps"},
                                  {"length_floor", floor_bad == 0, std::to_string(floor_bad) + " violations"}});
        }

        if (exp->parsed()) {
            json cfg = json::object();
            if (!ex_config.empty()) {
                try {
                    cfg = json::parse(read_file(ex_config));
                } catch (const json::exception& e) {
                    throw IoError(ex_config + ": " + e.what());
                }
            }
            const auto rep = run_experiment(ex_name, cfg, quick);
            write_out(ex_out, rep.to_json_text());
            if (!ex_csv_dir.empty()) {
                std::filesystem::create_directories(ex_csv_dir);
                for (const auto& t : rep.tables)
                    write_out((std::filesystem::path(ex_csv_dir) / (ex_name + "_" + t.name + ".csv")).string(),
                              t.to_csv());
            }
            return report_checks(rep.checks);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
