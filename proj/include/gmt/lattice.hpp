#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gmt/measure.hpp"

namespace gmt {

inline constexpr std::size_t kNoCell = static_cast<std::size_t>(-1);

struct LatticeParams {
    double A0 = 32.0;
    double C0 = 2.0;
    int depth = 6;
    double scale = 0.0;  // 0: diameter of the support (1 for a single atom)

    void validate() const;
};

struct Cell {
    std::size_t id = 0;
    int level = 0;
    std::size_t center_atom = 0;
    Point center;
    double r = 0.0;     // radius of B(Q)
    double ell = 0.0;   // side length 56 C0 A0^-k scale
    double mass = 0.0;
    std::vector<std::size_t> atoms;  // ascending
    std::size_t parent = kNoCell;
    std::vector<std::size_t> children;
    bool doubling = false;

    Ball ball() const { return Ball{center, r}; }        // B(Q)
    Ball big_ball() const { return Ball{center, 28.0 * r}; }  // B_Q
};

struct Lattice {
    LatticeParams params;
    double scale = 1.0;
    int effective_depth = 0;
    std::vector<Cell> cells;
    std::vector<std::vector<std::size_t>> levels;  // cell ids per level
    std::vector<std::vector<std::size_t>> atom_cell;  // atom_cell[k][atom] = level-k cell id
    double max_containment_ratio = 0.0;  // max |x - z_Q| / r_Q over all cells

    double rho(int k) const;
    double side_length(int k) const;
    const Cell& cell(std::size_t id) const { return cells.at(id); }
    /// True if a is b or one of its descendants.
    bool is_descendant(std::size_t a, std::size_t b) const;
    std::vector<std::size_t> descendants(std::size_t q, bool strict) const;
};

/// Greedy 5B-disjoint centers per level, then bottom-up parent assignment: every finer center joins
/// the nearest coarser center. Centers are 10 r apart, so one lying within 3 r of a finer center
/// always wins, which puts E \cap B(Q) inside Q.
Lattice build_lattice(const DiscreteMeasure& m, const LatticeParams& params);

/// mu(100 B(Q)) <= C0 mu(B(Q)).
bool is_doubling(const DiscreteMeasure& m, const Lattice& lat, std::size_t q);

struct BoundaryMass {
    double nl_mass = 0.0;
    double ext_mass = 0.0;
    double int_mass = 0.0;
    double bound_rhs = 0.0;
};

/// Atoms within A0^-(k+l) scale of the other side of the cell boundary.
BoundaryMass boundary_mass(const DiscreteMeasure& m, const Lattice& lat, std::size_t q, int l);

/// Maximal doubling strict descendants P of q with 2B_P inside 1.1B_q.
std::vector<std::size_t> maximal_doubling(const Lattice& lat, std::size_t q);

/// Per level, the fraction of mass lying in some doubling cell at that level or below.
std::vector<double> doubling_coverage(const Lattice& lat, const DiscreteMeasure& m);

std::string lattice_to_json_text(const Lattice& lat);

}  // namespace gmt
