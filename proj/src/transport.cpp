#include "gmt/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace gmt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Balanced transportation problem. Left nodes: positive atoms, then the sphere
// (supplying what the negatives need). Right nodes: negative atoms, then the
// sphere (absorbing what the positives carry). Dual (u, v) with u_i + v_j <= c_ij.
struct Problem {
    std::size_t L = 0, R = 0;
    std::vector<double> supply, demand, cost;
    std::vector<std::size_t> left_id, right_id;  // input indices of the atom nodes
    double tol = 0.0;

    double c(std::size_t i, std::size_t j) const { return cost[i * R + j]; }
};

Problem build(const std::vector<Point>& points, const std::vector<double>& masses, const Ball& ball) {
    Problem pb;
    std::vector<double> bl, br;
    double tp = 0.0, tn = 0.0;
    for (std::size_t k = 0; k < points.size(); ++k) {
        const double dc = distance(points[k], ball.center);
        if (!(dc <= ball.radius) || masses[k] == 0.0) continue;
        if (masses[k] > 0.0) {
            pb.left_id.push_back(k);
            pb.supply.push_back(masses[k]);
            bl.push_back(ball.radius - dc);
            tp += masses[k];
        } else {
            pb.right_id.push_back(k);
            pb.demand.push_back(-masses[k]);
            br.push_back(ball.radius - dc);
            tn -= masses[k];
        }
    }
    pb.supply.push_back(tn);
    pb.demand.push_back(tp);
    pb.L = pb.supply.size();
    pb.R = pb.demand.size();
    pb.tol = 1e-14 * std::max(tp + tn, 1e-300);
    pb.cost.assign(pb.L * pb.R, 0.0);
    for (std::size_t i = 0; i + 1 < pb.L; ++i) {
        for (std::size_t j = 0; j + 1 < pb.R; ++j)
            pb.cost[i * pb.R + j] = distance(points[pb.left_id[i]], points[pb.right_id[j]]);
        pb.cost[i * pb.R + pb.R - 1] = bl[i];
    }
    for (std::size_t j = 0; j + 1 < pb.R; ++j) pb.cost[(pb.L - 1) * pb.R + j] = br[j];
    return pb;
}

// Successive shortest paths with a column-reduction warm start and dense
// Dijkstra on reduced costs, stopping at the first sink with unmet demand.
class SspSolver {
public:
    explicit SspSolver(const Problem& pb)
        : pb_(pb), supply_(pb.supply), demand_(pb.demand), flow_(pb.L * pb.R, 0.0), u_(pb.L, 0.0), v_(pb.R, 0.0) {}

    void solve() {
        warm_start();
        while (augment()) {
        }
    }
    double value() const {
        double total = 0.0;
        for (std::size_t k = 0; k < flow_.size(); ++k) total += flow_[k] * pb_.cost[k];
        return total;
    }
    // Potentials in the (u, v) convention: u = -pi_left, v = pi_right.
    std::vector<double> u() const {
        std::vector<double> out(u_);
        for (double& x : out) x = -x;
        return out;
    }
    const std::vector<double>& v() const { return v_; }

private:
    std::size_t idx(std::size_t i, std::size_t j) const { return i * pb_.R + j; }

    void warm_start() {
        for (std::size_t j = 0; j < pb_.R; ++j) {
            std::size_t arg = 0;
            for (std::size_t i = 1; i < pb_.L; ++i)
                if (pb_.c(i, j) < pb_.c(arg, j)) arg = i;
            v_[j] = pb_.c(arg, j);
            const double delta = std::min(demand_[j], supply_[arg]);
            if (delta > 0.0) {
                flow_[idx(arg, j)] += delta;
                demand_[j] -= delta;
                supply_[arg] -= delta;
            }
        }
    }

    bool augment() {
        const std::size_t L = pb_.L, R = pb_.R, V = L + R;
        dist_.assign(V, kInf);
        par_.assign(V, SIZE_MAX);
        done_.assign(V, 0);
        bool any = false;
        for (std::size_t i = 0; i < L; ++i)
            if (supply_[i] > pb_.tol) {
                dist_[i] = 0.0;
                any = true;
            }
        if (!any) return false;

        std::size_t target = SIZE_MAX;
        for (;;) {
            std::size_t node = SIZE_MAX;
            double d = kInf;
            for (std::size_t x = 0; x < V; ++x)
                if (!done_[x] && dist_[x] < d) {
                    d = dist_[x];
                    node = x;
                }
            if (node == SIZE_MAX) break;
            done_[node] = 1;
            if (node < L) {
                for (std::size_t j = 0; j < R; ++j) {
                    if (done_[L + j]) continue;
                    const double nd = d + std::max(0.0, pb_.c(node, j) + u_[node] - v_[j]);
                    if (nd < dist_[L + j]) {
                        dist_[L + j] = nd;
                        par_[L + j] = node;
                    }
                }
            } else {
                const std::size_t j = node - L;
                if (demand_[j] > pb_.tol) {
                    target = j;
                    break;
                }
                for (std::size_t i = 0; i < L; ++i) {
                    if (done_[i] || flow_[idx(i, j)] <= 0.0) continue;
                    const double nd = d + std::max(0.0, -pb_.c(i, j) + v_[j] - u_[i]);
                    if (nd < dist_[i]) {
                        dist_[i] = nd;
                        par_[i] = node;
                    }
                }
            }
        }
        if (target == SIZE_MAX) return false;

        const double D = dist_[L + target];
        for (std::size_t i = 0; i < L; ++i) u_[i] += std::min(dist_[i], D);
        for (std::size_t j = 0; j < R; ++j) v_[j] += std::min(dist_[L + j], D);

        double delta = demand_[target];
        std::size_t i = par_[L + target];
        while (par_[i] != SIZE_MAX) {
            const std::size_t jb = par_[i] - L;
            delta = std::min(delta, flow_[idx(i, jb)]);
            i = par_[L + jb];
        }
        delta = std::min(delta, supply_[i]);

        i = par_[L + target];
        flow_[idx(i, target)] += delta;
        while (par_[i] != SIZE_MAX) {
            const std::size_t jb = par_[i] - L;
            flow_[idx(i, jb)] -= delta;
            if (flow_[idx(i, jb)] < pb_.tol * 1e-3) flow_[idx(i, jb)] = 0.0;
            i = par_[L + jb];
            flow_[idx(i, jb)] += delta;
        }
        supply_[i] -= delta;
        demand_[target] -= delta;
        return true;
    }

    const Problem& pb_;
    std::vector<double> supply_, demand_, flow_;
    std::vector<double> u_, v_;  // pi_left, pi_right during the solve
    std::vector<double> dist_;
    std::vector<std::size_t> par_;
    std::vector<char> done_;
};

// Transportation simplex on a spanning-tree basis of L + R - 1 cells.
class SimplexSolver {
public:
    explicit SimplexSolver(const Problem& pb) : pb_(pb), adj_(pb.L + pb.R) { initial_basis(); }

    bool solve(std::size_t max_pivots) {
        const std::size_t L = pb_.L, R = pb_.R, E = L * R;
        const std::size_t block = std::max<std::size_t>(32, static_cast<std::size_t>(std::sqrt(double(E))));
        double cmax = 0.0;
        for (double x : pb_.cost) cmax = std::max(cmax, x);
        const double eps = 1e-13 * std::max(cmax, 1e-300);
        std::size_t pos = 0;
        parent_cell_.assign(L + R, SIZE_MAX);
        depth_.assign(L + R, 0);
        pot_.assign(L + R, 0.0);
        grow(0);
        for (std::size_t it = 0; it < max_pivots; ++it) {
            // Block pricing: most negative reduced cost in the first block that has one.
            double best = -eps;
            std::size_t enter = SIZE_MAX;
            for (std::size_t scanned = 0; scanned < E;) {
                const std::size_t stop = std::min(E, scanned + block);
                for (; scanned < stop; ++scanned) {
                    const std::size_t k = pos;
                    pos = pos + 1 == E ? 0 : pos + 1;
                    const std::size_t i = k / R, j = k % R;
                    const double rc = pb_.cost[k] - pot_[i] - pot_[L + j];
                    if (rc < best) {
                        best = rc;
                        enter = k;
                    }
                }
                if (enter != SIZE_MAX) break;
            }
            if (enter == SIZE_MAX) return true;
            pivot(enter / R, enter % R);
        }
        return false;
    }

    double value() const {
        double total = 0.0;
        for (const Cell& c : cells_) total += c.flow * pb_.c(c.i, c.j);
        return total;
    }
    std::vector<double> u() const { return {pot_.begin(), pot_.begin() + pb_.L}; }
    std::vector<double> v() const { return {pot_.begin() + pb_.L, pot_.end()}; }

private:
    struct Cell {
        std::size_t i, j;
        double flow;
    };

    void add_cell(std::size_t i, std::size_t j, double flow) {
        cells_.push_back({i, j, flow});
        adj_[i].push_back(cells_.size() - 1);
        adj_[pb_.L + j].push_back(cells_.size() - 1);
    }

    // Least-cost rule: allocate along cells in increasing cost, then complete the
    // forest to a spanning tree with zero-flow cells.
    void initial_basis() {
        const std::size_t L = pb_.L, R = pb_.R;
        std::vector<std::size_t> order(L * R);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            return pb_.cost[x] < pb_.cost[y] || (pb_.cost[x] == pb_.cost[y] && x < y);
        });
        std::vector<std::size_t> uf(L + R);
        std::iota(uf.begin(), uf.end(), 0);
        auto find = [&](std::size_t x) {
            while (uf[x] != x) x = uf[x] = uf[uf[x]];
            return x;
        };
        std::vector<double> a(pb_.supply), b(pb_.demand);
        for (std::size_t k : order) {
            const std::size_t i = k / R, j = k % R;
            if (!(a[i] > 0.0 && b[j] > 0.0)) continue;
            const std::size_t ri = find(i), rj = find(L + j);
            if (ri == rj) continue;
            const double x = std::min(a[i], b[j]);
            add_cell(i, j, x);
            uf[ri] = rj;
            a[i] -= x;
            b[j] -= x;
        }
        for (std::size_t k : order) {
            if (cells_.size() + 1 == L + R) break;
            const std::size_t i = k / R, j = k % R;
            const std::size_t ri = find(i), rj = find(L + j);
            if (ri == rj) continue;
            add_cell(i, j, 0.0);
            uf[ri] = rj;
        }
    }

    // Parent pointers, depths and potentials for the subtree hanging below `root`.
    void grow(std::size_t root) {
        stack_.clear();
        stack_.push_back(root);
        while (!stack_.empty()) {
            const std::size_t x = stack_.back();
            stack_.pop_back();
            for (std::size_t ci : adj_[x]) {
                if (ci == parent_cell_[x]) continue;
                const Cell& c = cells_[ci];
                const std::size_t y = x < pb_.L ? pb_.L + c.j : c.i;
                parent_cell_[y] = ci;
                depth_[y] = depth_[x] + 1;
                pot_[y] = pb_.c(c.i, c.j) - pot_[x];
                stack_.push_back(y);
            }
        }
    }

    std::size_t other(std::size_t ci, std::size_t x) const {
        const Cell& c = cells_[ci];
        return x < pb_.L ? pb_.L + c.j : c.i;
    }

    void pivot(std::size_t ei, std::size_t ej) {
        // Cycle: entering cell (+), then the tree path from the sink node back to the source node.
        auto& up_b = path_;
        auto& up_a = up_a_;
        up_b.clear();
        up_a.clear();
        std::size_t a = ei, b = pb_.L + ej;
        while (a != b) {
            if (depth_[b] >= depth_[a]) {
                up_b.push_back(parent_cell_[b]);
                b = other(parent_cell_[b], b);
            } else {
                up_a.push_back(parent_cell_[a]);
                a = other(parent_cell_[a], a);
            }
        }
        const std::size_t nb = up_b.size();
        up_b.insert(up_b.end(), up_a.rbegin(), up_a.rend());
        const auto& path = up_b;
        double theta = kInf;
        std::size_t leave = SIZE_MAX, kleave = 0;
        for (std::size_t k = 0; k < path.size(); k += 2)
            if (cells_[path[k]].flow < theta) {
                theta = cells_[path[k]].flow;
                leave = path[k];
                kleave = k;
            }
        for (std::size_t k = 0; k < path.size(); ++k) cells_[path[k]].flow += (k % 2 == 0 ? -theta : theta);
        cells_[leave].flow = 0.0;

        // Reuse the leaving slot for the entering cell.
        auto drop = [&](std::size_t node) {
            auto& v = adj_[node];
            v.erase(std::find(v.begin(), v.end(), leave));
        };
        drop(cells_[leave].i);
        drop(pb_.L + cells_[leave].j);
        cells_[leave] = {ei, ej, theta};
        adj_[ei].push_back(leave);
        adj_[pb_.L + ej].push_back(leave);

        // The side cut off by the leaving cell hangs from the entering cell now.
        const std::size_t s_end = kleave < nb ? pb_.L + ej : ei;
        const std::size_t p_end = kleave < nb ? ei : pb_.L + ej;
        parent_cell_[s_end] = leave;
        depth_[s_end] = depth_[p_end] + 1;
        pot_[s_end] = pb_.c(ei, ej) - pot_[p_end];
        grow(s_end);
    }

    const Problem& pb_;
    std::vector<Cell> cells_;
    std::vector<std::vector<std::size_t>> adj_;
    std::vector<double> pot_;
    std::vector<std::size_t> parent_cell_, depth_, stack_, path_, up_a_;
};

std::vector<double> test_function(const Problem& pb, std::size_t n, const std::vector<double>& u,
                                  const std::vector<double>& v) {
    std::vector<double> f(n, 0.0);
    for (std::size_t i = 0; i + 1 < pb.L; ++i) f[pb.left_id[i]] = u[i] + v[pb.R - 1];
    for (std::size_t j = 0; j + 1 < pb.R; ++j) f[pb.right_id[j]] = -(v[j] + u[pb.L - 1]);
    return f;
}

}  // namespace

TransportSolution signed_transport_dual(const std::vector<Point>& points, const std::vector<double>& masses,
                                        const Ball& ball) {
    if (points.size() != masses.size()) throw std::invalid_argument("transport: size mismatch");
    const Problem pb = build(points, masses, ball);
    TransportSolution out;
    if (pb.L == 1 && pb.R == 1) {
        out.f.assign(points.size(), 0.0);
        return out;
    }
    SimplexSolver simplex(pb);
    if (simplex.solve(200 * (pb.L + pb.R) + 10000)) {
        out.value = simplex.value();
        out.f = test_function(pb, points.size(), simplex.u(), simplex.v());
        return out;
    }
    SspSolver ssp(pb);
    ssp.solve();
    out.value = ssp.value();
    out.f = test_function(pb, points.size(), ssp.u(), ssp.v());
    return out;
}

double signed_transport(const std::vector<Point>& points, const std::vector<double>& masses, const Ball& ball) {
    return signed_transport_dual(points, masses, ball).value;
}

double signed_transport_ssp(const std::vector<Point>& points, const std::vector<double>& masses, const Ball& ball) {
    if (points.size() != masses.size()) throw std::invalid_argument("transport: size mismatch");
    const Problem pb = build(points, masses, ball);
    if (pb.L == 1 && pb.R == 1) return 0.0;
    SspSolver ssp(pb);
    ssp.solve();
    return ssp.value();
}

}  // namespace gmt
