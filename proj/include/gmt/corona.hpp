#pragma once

#include <string>
#include <vector>

#include "gmt/lattice.hpp"
#include "gmt/measure.hpp"

namespace gmt {

struct CoronaParams {
    double delta = 0.01;
    double eta = 0.001;
    double tau = 0.05;
    double A = 10.0;
    double K = 5.0;
    double M = 10.0;
    std::vector<std::size_t> F;  // atom ids; empty means every atom

    void validate() const;
    /// Violations of eta < delta < tau < 1/A < 1/K < 1 (advisory only).
    std::vector<std::string> ordering_warnings() const;
};

enum class Label { none, good, bcf, ld, hd, bcg, bsdelta };
const char* label_name(Label l);

/// Exact int_lo^hi Delta(x_i, r)^2 dr/r for every atom, from per-atom tables of the piecewise
/// constant numerator A(r) - A(2r)/2. Tables are built on first use.
class SquareFunctionTable {
public:
    explicit SquareFunctionTable(const DiscreteMeasure& m) : m_(m), tables_(m.size()) {}
    double integral(std::size_t atom, double lo, double hi);

private:
    struct Table {
        std::vector<double> e;  // piece starts, e[0] = 0
        std::vector<double> c;  // numerator on [e[k], e[k+1])
        std::vector<double> g;  // g[k] = integral from e[k] to infinity (k >= 1)
    };
    const Table& table(std::size_t atom);

    const DiscreteMeasure& m_;
    std::vector<Table> tables_;
};

class CoronaContext {
public:
    CoronaContext(const DiscreteMeasure& m, const Lattice& lat, CoronaParams p);

    const DiscreteMeasure& measure() const { return m_; }
    const Lattice& lattice() const { return lat_; }
    const CoronaParams& params() const { return p_; }
    bool in_F(std::size_t atom) const { return in_f_[atom] != 0; }
    bool F_is_full() const { return f_full_; }
    /// mu restricted to F on the closed ball.
    double ball_mass_F(const Ball& b) const;
    double window(std::size_t atom, double lo, double hi) { return sq_.integral(atom, lo, hi); }
    /// Theta over 2B_Q, B_Q, 1.1 B_Q.
    double theta_2BQ(std::size_t q) const;
    /// The BS-Delta term of one cell P (cached).
    double bsdelta_term(std::size_t p);

private:
    const DiscreteMeasure& m_;
    const Lattice& lat_;
    CoronaParams p_;
    std::vector<char> in_f_;
    bool f_full_ = true;
    SquareFunctionTable sq_;
    std::vector<double> bs_cache_;
};

/// x in G(q1, q2, delta, eta): int_{delta l(q1)}^{l(q2)/delta} Delta^2 dr/r <= eta Theta(2B_q2)^2.
bool g_membership(const DiscreteMeasure& m, const Lattice& lat, const Point& x, std::size_t q1, std::size_t q2,
                  double delta, double eta);

/// First matching stopping condition in the order BCF, LD, HD, BCG, BS-Delta; good otherwise.
Label classify_cell(CoronaContext& ctx, std::size_t q, std::size_t R);

struct GoodBall {
    Point center;
    double ell = 0.0;
};
/// min over cells of |x - z_Q| + l(Q).
double d_function(const Point& x, const std::vector<GoodBall>& good);

struct CoronaTree {
    std::size_t root = kNoCell;
    std::vector<Label> label;  // per lattice cell; none outside D(R)
    std::vector<std::size_t> term, good, reg, stop, tree;
    std::vector<double> d_atoms;  // d at every atom
    // Reg diagnostics over atoms of B(z_P, 50 l(P)): d(x) / l(P) range.
    double reg_min_ratio = 0.0, reg_max_ratio = 0.0;
    std::size_t reg_below_10 = 0;       // atoms with d(x) < 10 l(P)
    std::size_t stop_outside_term = 0;  // Stop cells not inside any Term cell
    std::vector<std::string> warnings;
};

CoronaTree build_tree(CoronaContext& ctx, std::size_t R);

struct TopGeneration {
    std::vector<std::size_t> cells;
    double packing_sum = 0.0;  // sum of Theta(2B_R)^2 mu(R)
};

std::vector<TopGeneration> top_iteration(CoronaContext& ctx, std::size_t root, int max_rounds);

struct PackingReport {
    double lhs = 0.0;
    double root_term = 0.0;  // 2 Theta(2B_R0)^2 mu(R0)
    double sqfn_term = 0.0;  // sum over F of w int Delta^2 dr/r on [delta l_floor, l(R0)/delta]
    double rhs = 0.0;
    double ratio = 0.0;
};

PackingReport packing_report(CoronaContext& ctx, const std::vector<TopGeneration>& tops);

struct BadMassCheck {
    bool flagged = false;  // mu(delta^-1 B_R cap F minus G(R)) > eta mu(R cap F)
    double lhs = 0.0;      // Theta(2B_R)^2 mu(R cap F)
    double rhs = 0.0;      // eta^-2 int over delta^-1 B_R cap F of the window integral
    bool holds = true;
};

BadMassCheck bad_mass_check(CoronaContext& ctx, std::size_t R);

std::string corona_to_json_text(const CoronaContext& ctx, const CoronaTree& tree);

}  // namespace gmt
