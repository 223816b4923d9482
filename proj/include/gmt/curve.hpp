#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gmt/measure.hpp"

namespace gmt {

/// A cell handed to rule B: its ball 2B_Q and side length.
struct StopCell {
    Point center;
    double radius = 0.0;  // radius of 2B_Q
    double ell = 0.0;
};

/// Rule applied to a segment when building the next generation.
enum class SegmentRule { none, A, B, C, frozen };
/// How a segment arose from its parent.
enum class SegmentOrigin { root, copy, c_left, c_right };

const char* rule_name(SegmentRule r);
const char* origin_name(SegmentOrigin o);

struct Segment {
    std::size_t parent = SIZE_MAX;  // index in the previous generation
    SegmentOrigin origin = SegmentOrigin::root;
    SegmentRule rule = SegmentRule::none;
    std::size_t split_atom = SIZE_MAX;  // p_j^k for rule C
    double split_offset = 0.0;          // |p_j^k - z_j^k| for rules C and frozen
};

/// Generation k: segment j joins vertices[j] and vertices[j+1].
struct PolyCurve {
    int k = 1;
    std::vector<Point> vertices;
    std::vector<std::size_t> vertex_atom;
    std::vector<Segment> segments;

    std::size_t size() const { return segments.size(); }
    const Point& a(std::size_t j) const { return vertices[j]; }
    const Point& b(std::size_t j) const { return vertices[j + 1]; }
    double length(std::size_t j) const { return distance(vertices[j], vertices[j + 1]); }
    Point midpoint(std::size_t j) const { return lerp(vertices[j], vertices[j + 1], 0.5); }
    double total_length() const;
    /// Segment holding x within tol, or SIZE_MAX.
    std::size_t locate(const Point& x, double tol = 1e-9) const;
};

struct CurveChain {
    std::vector<PolyCurve> gens;  // gens[k-1] is Gamma^k
    std::size_t atom_A = 0, atom_B = 0;
    Point zA, zB;
    double d0 = 0.0;
    double eps0 = 0.0;
    std::size_t frozen = 0;
    // Ratios child / parent length over every rule C split.
    double split_min = 1.0, split_max = 0.0;
    std::size_t split_violations = 0;  // outside (1/3, 1/sqrt 2)

    const PolyCurve& gen(int k) const { return gens.at(static_cast<std::size_t>(k - 1)); }
    int generations() const { return static_cast<int>(gens.size()); }
    /// Unit direction of the line through zA and zB.
    Point axis() const;
    /// Gamma_ex^k with the two rays cut at length d0.
    std::vector<Point> extended_vertices(int k) const;
};

/// Rules A, B, C from the diameter segment on. A rule C segment whose nearest atom to the
/// midpoint lies farther than 10 eps0 l, is one of its endpoints, or projects outside the open
/// segment, is frozen.
CurveChain build_curves(const DiscreteMeasure& m, const std::vector<StopCell>& stop_cells, double eps0, int k_max);

/// Pi_k: Gamma^k -> Gamma^{k+1}. Points of the two rays are fixed.
Point pi_map(const CurveChain& chain, int k, const Point& x);

struct CurveDiagnostics {
    int k = 1;
    std::size_t segments = 0;
    std::size_t half_ball_violations = 0;  // foreign segment inside the open 1/2 B_j
    double max_angle_dev = 0.0;            // max |angle - pi| over consecutive vertices
    std::size_t sixth_ball_overlaps = 0;
    double ad_upper = 0.0;  // max H1(Gamma cap B(x,r)) / 2r over samples
    double ad_lower = 0.0;  // min of the same ratio
    double max_ancestry_angle_sq = 0.0;
    double max_ancestry_beta4 = 0.0;  // needs the measure; 0 otherwise
    std::size_t length_floor_violations = 0;
    double min_floor_ratio = 0.0;   // min l_j / (2^{-(k+2)/2} d0)
    double max_pi_displacement = 0.0;  // max |Pi_k(x) - x| / (eps0 l_j) over rule C segments
};

CurveDiagnostics curve_diagnostics(const CurveChain& chain, int k, const DiscreteMeasure* m = nullptr,
                                   int ad_samples = 1000, std::uint64_t seed = 1);

/// max over atoms of dist(x, Gamma^k) / (eps0 max(d(x), 2^{-k/2} d0)).
double proximity_ratio(const CurveChain& chain, int k, const DiscreteMeasure& m, const std::vector<double>& d);

/// Distance from x to Gamma^k.
double distance_to_curve(const PolyCurve& c, const Point& x);

/// Sequential partition of unity on the balls B_j = B(z_j, l_j) of one generation.
class PartitionOfUnity {
public:
    explicit PartitionOfUnity(const PolyCurve& curve);

    std::size_t size() const { return centers_.size(); }
    /// Radial bump: 1 on [0,1], C2 quintic to 0 at 3/2.
    static double bump(double s);
    double theta_tilde(std::size_t j, const Point& x) const;
    /// theta_j for j >= 1 (1-based like the curve segments), theta_0 for j == 0.
    double theta(std::size_t j, const Point& x) const;
    /// All theta_j(x), j >= 1, that are nonzero: (j, value), ascending j.
    std::vector<std::pair<std::size_t, double>> thetas(const Point& x) const;
    double sum(const Point& x) const;
    /// x in some open B_j.
    bool covered(const Point& x) const;
    const Point& center(std::size_t j) const { return centers_[j - 1]; }
    double ell(std::size_t j) const { return ell_[j - 1]; }

private:
    // Ids (0-based) of balls with |x - z| < 1.5 l, ascending.
    std::vector<std::size_t> candidates(const Point& x) const;

    std::vector<Point> centers_;
    std::vector<double> ell_;
    double cell_ = 1.0;
    std::map<std::array<std::int64_t, 2>, std::vector<std::size_t>> grid_;
    std::array<std::int64_t, 2> key(const Point& x) const;
};

struct NuMeasure {
    PolylineMeasure nu;          // on Gamma_ex^k, 16-fold refined
    std::vector<double> c;       // c_0 .. c_N
    std::vector<double> atom_mass;      // index j >= 1: sum over atoms of theta_j w
    std::vector<double> line_integral;  // index j >= 1: int theta_j dH1 on Gamma_ex
    double uncovered_mass = 0.0;        // sum of (1 - sum_j theta_j) w over atoms
    static constexpr int kRefine = 16;
};

NuMeasure build_nu(const CurveChain& chain, int k, const DiscreteMeasure& m);

struct SigmaDensity {
    std::vector<double> g;              // per segment of Gamma^k
    std::vector<double> half_angle_sq;  // per segment: sum over ancestry of angle^2 / 2
};

struct SigmaMeasure {
    PolylineMeasure sigma;  // on Gamma_ex^k, unrefined; density 1 on the rays
    SigmaDensity density;
    std::vector<double> generation_mass;  // ||sigma^m|| on Gamma^m, m = 1..k
    double max_ledger_error = 0.0;        // max relative |sum children g l - g l| per split
};

SigmaMeasure build_sigma(const CurveChain& chain, int k);

/// sup over sampled balls centred on Gamma^k of m(B(x,r)) / r, r log-uniform in [r_min, r_max].
double sampled_growth(const PolylineMeasure& m, const PolyCurve& curve, int samples, std::uint64_t seed,
                      double r_min, double r_max);

struct DensityRatioOptions {
    int samples = 200;      // evaluation points, spread by sigma mass
    int per_octave = 4;
    double r_min = 0.0;     // 0: a quarter of the shortest segment
    double r_max = 0.0;     // 0: a third of the polyline length
};

struct DensityRatioStats {
    double l2_deviation = 0.0;  // ||f - c0||^2 in L2(sigma)
    double sigma_mass = 0.0;
    double sqfn_mass = 0.0;     // int int |D_r f|^2 dr/r dsigma, sampled
    double max_abs_D = 0.0;
    double f_min = 0.0, f_max = 0.0;
};

/// Smoothed averaging S_r g(x) = phi_r * (g sigma)(x) / phi_r * sigma(x) on a shared polyline.
double smoothed_average(const PolylineMeasure& sigma, const std::vector<double>& g, const Point& x, double r);
/// D_r g = S_r g - S_2r g; g given per segment of sigma's single chain.
double d_operator(const PolylineMeasure& sigma, const std::vector<double>& g, const Point& x, double r);

/// f = d nu / d sigma on nu's polyline; sigma is refined to match.
DensityRatioStats density_ratio_stats(const PolylineMeasure& nu, const PolylineMeasure& sigma, double c0,
                                      const DensityRatioOptions& opt = {});

std::string curves_to_json_text(const CurveChain& chain);

}  // namespace gmt
