#include "gmt/corona.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "gmt/multiscale.hpp"
#include "gmt/numeric.hpp"
#include "json.hpp"

namespace gmt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double theta_ball(const DiscreteMeasure& m, const Point& c, double r) { return m.ball_mass(Ball{c, r}) / r; }

}  // namespace

void CoronaParams::validate() const {
    for (double v : {delta, eta, tau, A, K, M})
        if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("corona: parameters must be positive");
    if (!(delta < 1.0)) throw std::invalid_argument("corona: delta must be < 1");
}

std::vector<std::string> CoronaParams::ordering_warnings() const {
    std::vector<std::string> w;
    if (!(eta < delta)) w.push_back("eta >= delta");
    if (!(delta < tau)) w.push_back("delta >= tau");
    if (!(tau < 1.0 / A)) w.push_back("tau >= 1/A");
    if (!(1.0 / A < 1.0 / K)) w.push_back("1/A >= 1/K");
    if (!(1.0 / K < 1.0)) w.push_back("1/K >= 1");
    return w;
}

const char* label_name(Label l) {
    switch (l) {
        case Label::none: return "none";
        case Label::good: return "Good";
        case Label::bcf: return "BCF";
        case Label::ld: return "LD";
        case Label::hd: return "HD";
        case Label::bcg: return "BCG";
        case Label::bsdelta: return "BSDelta";
    }
    return "?";
}

const SquareFunctionTable::Table& SquareFunctionTable::table(std::size_t atom) {
    Table& t = tables_.at(atom);
    if (!t.e.empty()) return t;
    const Point& x = m_.position(atom);
    const std::size_t n = m_.size();
    std::vector<std::pair<double, double>> dw(n);
    for (std::size_t j = 0; j < n; ++j) dw[j] = {distance(x, m_.position(j)), m_.weight(j)};
    std::sort(dw.begin(), dw.end());
    std::vector<double> dist(n), prefix(n + 1, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        dist[j] = dw[j].first;
        prefix[j + 1] = prefix[j] + dw[j].second;
    }
    auto mass_within = [&](double r) {
        return prefix[static_cast<std::size_t>(std::upper_bound(dist.begin(), dist.end(), r) - dist.begin())];
    };
    t.e.push_back(0.0);
    for (double d : dist)
        if (d > 0.0) {
            t.e.push_back(d);
            t.e.push_back(0.5 * d);
        }
    std::sort(t.e.begin(), t.e.end());
    t.e.erase(std::unique(t.e.begin(), t.e.end()), t.e.end());
    const std::size_t m = t.e.size();
    t.c.resize(m);
    for (std::size_t k = 0; k < m; ++k) t.c[k] = mass_within(t.e[k]) - 0.5 * mass_within(2.0 * t.e[k]);
    t.g.assign(m + 1, 0.0);
    for (std::size_t k = m; k-- > 1;) {
        const double upper = k + 1 < m ? 1.0 / (t.e[k + 1] * t.e[k + 1]) : 0.0;
        t.g[k] = t.g[k + 1] + 0.5 * t.c[k] * t.c[k] * (1.0 / (t.e[k] * t.e[k]) - upper);
    }
    return t;
}

double SquareFunctionTable::integral(std::size_t atom, double lo, double hi) {
    if (!(lo > 0.0)) throw std::invalid_argument("square function window must start above 0");
    if (!(hi > lo)) return 0.0;
    const Table& t = table(atom);
    const std::size_t m = t.e.size();
    auto piece = [&](double r) {
        return static_cast<std::size_t>(std::upper_bound(t.e.begin(), t.e.end(), r) - t.e.begin()) - 1;
    };
    auto inv2 = [](double r) { return std::isinf(r) ? 0.0 : 1.0 / (r * r); };
    const std::size_t klo = piece(lo), khi = std::isinf(hi) ? m - 1 : piece(hi);
    if (klo == khi) return 0.5 * t.c[klo] * t.c[klo] * (inv2(lo) - inv2(hi));
    // Head piece, whole pieces in between, tail piece.
    const double head = 0.5 * t.c[klo] * t.c[klo] * (inv2(lo) - inv2(t.e[klo + 1]));
    const double mid = t.g[klo + 1] - t.g[khi];
    const double tail = 0.5 * t.c[khi] * t.c[khi] * (inv2(t.e[khi]) - inv2(hi));
    return head + mid + tail;
}

CoronaContext::CoronaContext(const DiscreteMeasure& m, const Lattice& lat, CoronaParams p)
    : m_(m), lat_(lat), p_(std::move(p)), in_f_(m.size(), 1), sq_(m), bs_cache_(lat.cells.size(), -1.0) {
    p_.validate();
    if (!p_.F.empty()) {
        std::fill(in_f_.begin(), in_f_.end(), 0);
        for (std::size_t a : p_.F) in_f_.at(a) = 1;
        f_full_ = std::all_of(in_f_.begin(), in_f_.end(), [](char c) { return c != 0; });
    }
}

double CoronaContext::ball_mass_F(const Ball& b) const {
    if (f_full_) return m_.ball_mass(b);
    std::vector<std::size_t> ids;
    for (std::size_t a : m_.ball_query(b))
        if (in_f_[a]) ids.push_back(a);
    return m_.mass_of(ids);
}

double CoronaContext::theta_2BQ(std::size_t q) const {
    const Cell& c = lat_.cell(q);
    return theta_ball(m_, c.center, 56.0 * c.r);
}

double CoronaContext::bsdelta_term(std::size_t p) {
    if (bs_cache_[p] >= 0.0) return bs_cache_[p];
    const Cell& c = lat_.cell(p);
    const Ball b{c.center, 1.1 * 28.0 * c.r};
    std::vector<double> terms;
    for (std::size_t a : m_.ball_query(b))
        if (in_f_[a]) terms.push_back(m_.weight(a) * window(a, p_.delta * c.ell, c.ell / p_.delta));
    const double mass = m_.ball_mass(b);
    bs_cache_[p] = mass > 0.0 ? pairwise_sum(terms) / mass : 0.0;
    return bs_cache_[p];
}

bool g_membership(const DiscreteMeasure& m, const Lattice& lat, const Point& x, std::size_t q1, std::size_t q2,
                  double delta, double eta) {
    const Cell &a = lat.cell(q1), &b = lat.cell(q2);
    if (!(a.ell <= b.ell)) throw std::invalid_argument("g_membership: needs l(q1) <= l(q2)");
    const double integral = sqfn_integral(m, x, ScaleRange{delta * a.ell, b.ell / delta});
    const double th = theta_ball(m, b.center, 56.0 * b.r);
    return integral <= eta * th * th;
}

Label classify_cell(CoronaContext& ctx, std::size_t q, std::size_t R) {
    const Lattice& lat = ctx.lattice();
    const DiscreteMeasure& m = ctx.measure();
    const CoronaParams& p = ctx.params();
    if (!lat.is_descendant(q, R)) throw std::invalid_argument("classify_cell: q must lie in R");
    const Cell &Q = lat.cell(q), &Rc = lat.cell(R);

    // BCF: mu(Q \ F) or mu(lambda B_Q \ F) large for some 1.1 <= lambda <= delta^-1/2.
    if (!ctx.F_is_full()) {
        const double s = std::sqrt(p.eta);
        std::vector<std::size_t> outside;
        for (std::size_t a : Q.atoms)
            if (!ctx.in_F(a)) outside.push_back(a);
        if (m.mass_of(outside) >= s * Q.mass) return Label::bcf;
        const double rB = 28.0 * Q.r, lam_hi = 1.0 / std::sqrt(p.delta);
        std::vector<std::pair<double, std::size_t>> d;
        for (std::size_t a : m.ball_query(Ball{Q.center, lam_hi * rB})) d.push_back({distance(Q.center, m.position(a)), a});
        std::sort(d.begin(), d.end());
        double tot = 0.0, out = 0.0;
        std::size_t i = 0;
        auto absorb = [&](double radius) {
            while (i < d.size() && d[i].first <= radius) {
                tot += m.weight(d[i].second);
                if (!ctx.in_F(d[i].second)) out += m.weight(d[i].second);
                ++i;
            }
        };
        absorb(1.1 * rB);
        if (tot > 0.0 && out >= s * tot) return Label::bcf;
        while (i < d.size()) {
            absorb(d[i].first);
            if (out >= s * tot) return Label::bcf;
        }
    }

    const double th_q = theta_ball(m, Q.center, 1.1 * 28.0 * Q.r);
    if (th_q <= p.tau * theta_ball(m, Rc.center, 28.0 * Rc.r)) return Label::ld;
    if (th_q >= p.A * theta_ball(m, Rc.center, 1.1 * 28.0 * Rc.r)) return Label::hd;

    // BCG with G(Q, R, delta^1/2, eta).
    {
        const double sd = std::sqrt(p.delta);
        const double lo = sd * Q.ell, hi = Rc.ell / sd;
        const double th = ctx.theta_2BQ(R);
        const double thr = p.eta * th * th;
        std::vector<std::size_t> all, bad;
        for (std::size_t a : m.ball_query(Ball{Q.center, 28.0 * Q.r / sd})) {
            if (!ctx.in_F(a)) continue;
            all.push_back(a);
            if (!(ctx.window(a, lo, hi) <= thr)) bad.push_back(a);
        }
        if (m.mass_of(bad) >= p.eta * m.mass_of(all)) return Label::bcg;
    }

    // BS-Delta: sum over Q subset P subset R.
    {
        std::vector<double> terms;
        for (std::size_t c = q;; c = lat.cell(c).parent) {
            terms.push_back(ctx.bsdelta_term(c));
            if (c == R) break;
        }
        const double th = theta_ball(m, Rc.center, 28.0 * Rc.r);
        if (pairwise_sum(terms) >= p.eta * th * th) return Label::bsdelta;
    }
    return Label::good;
}

double d_function(const Point& x, const std::vector<GoodBall>& good) {
    if (good.empty()) throw std::invalid_argument("d_function: no Good cells");
    double best = kInf;
    for (const GoodBall& g : good) best = std::min(best, distance(x, g.center) + g.ell);
    return best;
}

CoronaTree build_tree(CoronaContext& ctx, std::size_t R) {
    const Lattice& lat = ctx.lattice();
    const DiscreteMeasure& m = ctx.measure();
    const CoronaParams& p = ctx.params();
    CoronaTree t;
    t.root = R;
    t.label.assign(lat.cells.size(), Label::none);
    const Cell& Rc = lat.cell(R);
    if (!Rc.doubling) t.warnings.push_back("root cell is not doubling");
    for (auto& w : p.ordering_warnings()) t.warnings.push_back("parameter ordering: " + w);

    const auto cells = lat.descendants(R, false);  // preorder, parents before children
    t.label[R] = Label::good;
    for (std::size_t i = 1; i < cells.size(); ++i) t.label[cells[i]] = classify_cell(ctx, cells[i], R);

    // Term: labelled cells without a labelled strict ancestor below R. Good: not inside any Term cell.
    std::vector<char> under_term(lat.cells.size(), 0);
    const double x0_r = p.K / 10.0 * 28.0 * Rc.r;
    for (std::size_t c : cells) {
        const std::size_t par = lat.cell(c).parent;
        const bool parent_under = c != R && under_term[par];
        const bool labelled = t.label[c] != Label::good;
        if (labelled && !parent_under) t.term.push_back(c);
        under_term[c] = parent_under || labelled;
        if (!under_term[c]) {
            const Cell& q = lat.cell(c);
            const bool inside = std::all_of(q.atoms.begin(), q.atoms.end(), [&](std::size_t a) {
                return distance(m.position(a), Rc.center) <= x0_r;
            });
            if (inside) t.good.push_back(c);
        }
    }
    std::sort(t.term.begin(), t.term.end());
    std::sort(t.good.begin(), t.good.end());

    std::vector<GoodBall> good;
    for (std::size_t c : t.good) good.push_back({lat.cell(c).center, lat.cell(c).ell});
    t.d_atoms.resize(m.size());
    for (std::size_t a = 0; a < m.size(); ++a) t.d_atoms[a] = d_function(m.position(a), good);

    // Reg: per atom the largest cell with l(Q) <= inf_Q d / 60.
    std::vector<double> min_d(lat.cells.size(), kInf);
    for (const Cell& c : lat.cells)
        for (std::size_t a : c.atoms) min_d[c.id] = std::min(min_d[c.id], t.d_atoms[a]);
    std::vector<char> is_reg(lat.cells.size(), 0);
    for (std::size_t a = 0; a < m.size(); ++a) {
        if (!(t.d_atoms[a] > 1e-12)) continue;
        for (const auto& level : lat.atom_cell) {
            const std::size_t c = level[a];
            if (lat.cell(c).ell <= min_d[c] / 60.0) {
                is_reg[c] = 1;
                break;
            }
        }
    }
    for (std::size_t c = 0; c < lat.cells.size(); ++c)
        if (is_reg[c]) {
            t.reg.push_back(c);
            if (c != R && lat.is_descendant(c, R)) t.stop.push_back(c);
        }

    std::vector<char> is_stop(lat.cells.size(), 0), is_term(lat.cells.size(), 0);
    for (std::size_t c : t.stop) is_stop[c] = 1;
    for (std::size_t c : t.term) is_term[c] = 1;
    for (std::size_t c : cells) {
        bool strictly_inside = false;
        for (std::size_t a = lat.cell(c).parent; c != R && a != kNoCell; a = lat.cell(a).parent) {
            if (is_stop[a]) strictly_inside = true;
            if (a == R) break;
        }
        if (!strictly_inside) t.tree.push_back(c);
    }
    std::sort(t.tree.begin(), t.tree.end());

    for (std::size_t s : t.stop) {
        bool covered = false;
        for (std::size_t a = s; a != kNoCell; a = lat.cell(a).parent) {
            if (is_term[a]) covered = true;
            if (a == R) break;
        }
        if (!covered) ++t.stop_outside_term;
    }

    bool first = true;
    for (std::size_t c : t.reg) {
        const Cell& P = lat.cell(c);
        for (std::size_t a : m.ball_query(Ball{P.center, 50.0 * P.ell})) {
            const double ratio = t.d_atoms[a] / P.ell;
            if (first) {
                t.reg_min_ratio = t.reg_max_ratio = ratio;
                first = false;
            }
            t.reg_min_ratio = std::min(t.reg_min_ratio, ratio);
            t.reg_max_ratio = std::max(t.reg_max_ratio, ratio);
            if (ratio < 10.0) ++t.reg_below_10;
        }
    }
    return t;
}

std::vector<TopGeneration> top_iteration(CoronaContext& ctx, std::size_t root, int max_rounds) {
    const Lattice& lat = ctx.lattice();
    auto packing = [&](const std::vector<std::size_t>& cells) {
        std::vector<double> terms;
        for (std::size_t c : cells) {
            const double th = ctx.theta_2BQ(c);
            terms.push_back(th * th * lat.cell(c).mass);
        }
        return pairwise_sum(terms);
    };
    std::vector<TopGeneration> out;
    out.push_back({{root}, packing({root})});
    for (int round = 0; round < max_rounds; ++round) {
        std::vector<std::size_t> next;
        for (std::size_t R : out.back().cells) {
            const CoronaTree t = build_tree(ctx, R);
            for (std::size_t q : t.stop) {
                const auto md = maximal_doubling(lat, q);
                next.insert(next.end(), md.begin(), md.end());
            }
        }
        if (next.empty()) break;
        std::sort(next.begin(), next.end());
        next.erase(std::unique(next.begin(), next.end()), next.end());
        out.push_back({next, packing(next)});
    }
    return out;
}

PackingReport packing_report(CoronaContext& ctx, const std::vector<TopGeneration>& tops) {
    if (tops.empty() || tops.front().cells.empty()) throw std::invalid_argument("packing_report: no Top cells");
    const Lattice& lat = ctx.lattice();
    const DiscreteMeasure& m = ctx.measure();
    const CoronaParams& p = ctx.params();
    PackingReport r;
    std::vector<double> gens;
    for (const auto& g : tops) gens.push_back(g.packing_sum);
    r.lhs = pairwise_sum(gens);
    const std::size_t R0 = tops.front().cells.front();
    const double th = ctx.theta_2BQ(R0);
    r.root_term = 2.0 * th * th * lat.cell(R0).mass;
    const double lo = p.delta * lat.side_length(lat.effective_depth), hi = lat.cell(R0).ell / p.delta;
    std::vector<double> terms;
    for (std::size_t a = 0; a < m.size(); ++a)
        if (ctx.in_F(a)) terms.push_back(m.weight(a) * ctx.window(a, lo, hi));
    r.sqfn_term = pairwise_sum(terms);
    r.rhs = r.root_term + r.sqfn_term;
    r.ratio = r.rhs > 0.0 ? r.lhs / r.rhs : kInf;
    return r;
}

BadMassCheck bad_mass_check(CoronaContext& ctx, std::size_t R) {
    const Lattice& lat = ctx.lattice();
    const DiscreteMeasure& m = ctx.measure();
    const CoronaParams& p = ctx.params();
    const Cell& Rc = lat.cell(R);
    const double lo = p.delta * Rc.ell, hi = Rc.ell / p.delta;
    const double th = ctx.theta_2BQ(R);
    std::vector<std::size_t> bad, in_rf;
    std::vector<double> integrals;
    for (std::size_t a : m.ball_query(Ball{Rc.center, 28.0 * Rc.r / p.delta})) {
        if (!ctx.in_F(a)) continue;
        const double v = ctx.window(a, lo, hi);
        integrals.push_back(m.weight(a) * v);
        if (!(v <= p.eta * th * th)) bad.push_back(a);
    }
    for (std::size_t a : Rc.atoms)
        if (ctx.in_F(a)) in_rf.push_back(a);
    const double mu_rf = m.mass_of(in_rf);
    BadMassCheck c;
    c.flagged = m.mass_of(bad) > p.eta * mu_rf;
    c.lhs = th * th * mu_rf;
    c.rhs = pairwise_sum(integrals) / (p.eta * p.eta);
    c.holds = !c.flagged || c.lhs <= c.rhs * (1.0 + 1e-12);
    return c;
}

std::string corona_to_json_text(const CoronaContext& ctx, const CoronaTree& t) {
    using ojson = nlohmann::ordered_json;
    const Lattice& lat = ctx.lattice();
    const CoronaParams& p = ctx.params();
    ojson j;
    j["params"] = {{"delta", p.delta}, {"eta", p.eta}, {"tau", p.tau}, {"A", p.A}, {"K", p.K}, {"M", p.M},
                   {"F_size", ctx.F_is_full() ? ctx.measure().size() : p.F.size()}};
    j["root"] = t.root;
    ojson labels = ojson::array();
    for (std::size_t c = 0; c < lat.cells.size(); ++c)
        if (t.label[c] != Label::none)
            labels.push_back({{"cell", c}, {"level", lat.cell(c).level}, {"label", label_name(t.label[c])}});
    j["labels"] = labels;
    ojson families = ojson::object();
    for (Label l : {Label::bcf, Label::ld, Label::hd, Label::bcg, Label::bsdelta}) {
        ojson ids = ojson::array();
        for (std::size_t c : t.term)
            if (t.label[c] == l) ids.push_back(c);
        families[label_name(l)] = ids;
    }
    j["term"] = t.term;
    j["term_families"] = families;
    j["good"] = t.good;
    j["reg"] = t.reg;
    j["stop"] = t.stop;
    j["tree"] = t.tree;
    j["diagnostics"] = {{"reg_min_d_over_ell", t.reg_min_ratio},
                        {"reg_max_d_over_ell", t.reg_max_ratio},
                        {"reg_atoms_below_10_ell", t.reg_below_10},
                        {"stop_outside_term", t.stop_outside_term}};
    j["warnings"] = t.warnings;
    return j.dump(1) + "\n";
}

}  // namespace gmt
