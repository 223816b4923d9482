#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace gmt {

inline constexpr int kMaxDim = 8;

struct Point {
    std::array<double, kMaxDim> c{};
    int dim = 0;

    Point() = default;
    explicit Point(int d) : dim(d) {}
    Point(std::initializer_list<double> xs);

    double& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
    double operator[](int i) const { return c[static_cast<std::size_t>(i)]; }

    friend bool operator==(const Point& a, const Point& b);
};

Point operator+(const Point& a, const Point& b);
Point operator-(const Point& a, const Point& b);
Point operator*(double s, const Point& a);
double dot(const Point& a, const Point& b);
double norm(const Point& a);
double distance(const Point& a, const Point& b);
Point lerp(const Point& a, const Point& b, double t);

struct Ball {
    Point center;
    double radius = 0.0;

    Ball dilate(double lambda) const { return Ball{center, lambda * radius}; }
    bool contains(const Point& p) const { return distance(p, center) <= radius; }
};

/// True if ball a is contained in ball b (closed balls).
bool ball_inside(const Ball& a, const Ball& b);

/// Scale window [r_min, r_max]; r_max may be +infinity.
struct ScaleRange {
    double r_min = 0.0;
    double r_max = 0.0;
    void validate() const;
};

/// Finite weighted atom cloud with a uniform-grid index.
class DiscreteMeasure {
public:
    DiscreteMeasure() = default;
    /// Coincident atoms are merged (weights summed, first occurrence kept).
    DiscreteMeasure(int dim, const std::vector<Point>& positions, const std::vector<double>& weights);

    int dim() const { return dim_; }
    std::size_t size() const { return weights_.size(); }
    bool empty() const { return weights_.empty(); }
    const Point& position(std::size_t i) const { return positions_[i]; }
    double weight(std::size_t i) const { return weights_[i]; }
    const std::vector<Point>& positions() const { return positions_; }
    const std::vector<double>& weights() const { return weights_; }
    double total_mass() const { return total_mass_; }
    std::size_t merged_count() const { return merged_; }
    double cell_size() const { return cell_; }

    /// Closed-ball mass through the index.
    double ball_mass(const Ball& b) const;
    /// Closed-ball mass by linear scan; equal to ball_mass bit for bit.
    double ball_mass_brute(const Ball& b) const;
    /// Atom ids in the closed ball, ascending.
    std::vector<std::size_t> ball_query(const Ball& b) const;
    std::vector<std::size_t> ball_query_brute(const Ball& b) const;
    /// Sum of weights for ids in ascending order (pairwise summation).
    double mass_of(const std::vector<std::size_t>& ids) const;

    /// Nearest atom (ties: lowest index); optionally excluding one id.
    std::size_t nearest(const Point& p, std::size_t exclude = SIZE_MAX) const;
    double distance_to_support(const Point& p) const;

    /// Diameter-realizing pair (lexicographically smallest ids among ties).
    std::pair<std::size_t, std::size_t> diameter_pair() const;
    double diameter() const;

    /// Sub-measure on the given ids (kept in the order given).
    DiscreteMeasure restrict_to(const std::vector<std::size_t>& ids) const;

private:
    struct CellKey {
        std::array<std::int64_t, kMaxDim> k{};
        bool operator==(const CellKey& o) const { return k == o.k; }
    };
    struct CellHash {
        std::size_t operator()(const CellKey& key) const;
    };

    void build_index();
    CellKey key_of(const Point& p, double cell) const;
    template <class Visit>
    void visit_candidates(const Ball& b, Visit&& visit) const;

    int dim_ = 0;
    std::vector<Point> positions_;
    std::vector<double> weights_;
    double total_mass_ = 0.0;
    std::size_t merged_ = 0;
    double cell_ = 1.0;
    std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> grid_;
};

/// Piecewise-linear chains with nonnegative constant density per segment.
struct Chain {
    std::vector<Point> vertices;
    std::vector<double> density;  // one entry per segment
};

class PolylineMeasure {
public:
    PolylineMeasure() = default;
    PolylineMeasure(int dim, std::vector<Chain> chains);

    int dim() const { return dim_; }
    const std::vector<Chain>& chains() const { return chains_; }
    double total_mass() const;
    double ball_mass(const Ball& b) const;
    /// Each segment split into `factor` equal pieces with the same density.
    PolylineMeasure refine(int factor) const;

private:
    int dim_ = 0;
    std::vector<Chain> chains_;
};

/// Length of segment [a,b] inside the closed ball.
double segment_ball_length(const Point& a, const Point& b, const Ball& ball);
/// Distance from p to the segment [a,b].
double point_segment_distance(const Point& p, const Point& a, const Point& b);

double theta(double mass, const Ball& b);
double theta_n(double mass, const Ball& b, int n);

template <class M>
double theta(const M& m, const Ball& b) {
    return theta(m.ball_mass(b), b);
}

// JSON interchange.
DiscreteMeasure measure_from_json_text(const std::string& text);
std::string measure_to_json_text(const DiscreteMeasure& m);
DiscreteMeasure load_measure(const std::string& path);
void save_measure(const DiscreteMeasure& m, const std::string& path);
PolylineMeasure polyline_from_json_text(const std::string& text);
std::string polyline_to_json_text(const PolylineMeasure& m);

}  // namespace gmt
