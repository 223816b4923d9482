#include "gmt/multiscale.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gmt/numeric.hpp"

namespace gmt {

double delta_signed(const DiscreteMeasure& m, const Point& x, double r) {
    if (!(r > 0.0)) throw std::invalid_argument("delta: r must be positive");
    return m.ball_mass({x, r}) / r - m.ball_mass({x, 2.0 * r}) / (2.0 * r);
}

double delta_signed(const PolylineMeasure& m, const Point& x, double r) {
    if (!(r > 0.0)) throw std::invalid_argument("delta: r must be positive");
    return m.ball_mass({x, r}) / r - m.ball_mass({x, 2.0 * r}) / (2.0 * r);
}

double delta(const DiscreteMeasure& m, const Point& x, double r) { return std::abs(delta_signed(m, x, r)); }
double delta(const PolylineMeasure& m, const Point& x, double r) { return std::abs(delta_signed(m, x, r)); }

double SmoothProfile::phi(double t) const {
    if (t <= 0.5) return 1.0;
    if (t >= support) return 0.0;
    return 1.0 - smoothstep5((t - 0.5) / (support - 0.5));
}

double SmoothProfile::dphi(double t) const {
    if (t <= 0.5 || t >= support) return 0.0;
    return -smoothstep5_deriv((t - 0.5) / (support - 0.5)) / (support - 0.5);
}

double SmoothProfile::comparison_constant() const {
    // Cauchy-Schwarz on  D_phi(x,r) = -int t phi'(t) D(x,tr) dt  followed by Fubini.
    auto g = [this](double t) {
        const double v = t * dphi(t);
        return v * v;
    };
    return (support - 0.5) * adaptive_simpson(g, 0.5, support, 1e-14);
}

double delta_smooth(const DiscreteMeasure& m, const Point& x, double t, const SmoothProfile& phi) {
    if (!(t > 0.0)) throw std::invalid_argument("delta_smooth: t must be positive");
    std::vector<double> terms;
    const auto ids = m.ball_query({x, 2.0 * t * phi.support});
    terms.reserve(ids.size());
    for (auto i : ids) {
        const double d = distance(m.position(i), x);
        terms.push_back(m.weight(i) * (phi.phi(d / t) / t - phi.phi(d / (2.0 * t)) / (2.0 * t)));
    }
    return pairwise_sum(terms);
}

RadialProfile::RadialProfile(const DiscreteMeasure& m, const Point& x, const std::vector<double>* f,
                             bool absolute) {
    const std::size_t n = m.size();
    if (f && f->size() != n) throw std::invalid_argument("profile: f must have one value per atom");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = distance(m.position(i), x);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
    dist.resize(n);
    value.resize(n);
    prefix.assign(n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = order[k];
        dist[k] = d[i];
        double v = m.weight(i) * (f ? (*f)[i] : 1.0);
        if (absolute) v = std::abs(v);
        value[k] = v;
        prefix[k + 1] = prefix[k] + v;
    }
}

double RadialProfile::within(double r) const {
    const auto k = std::upper_bound(dist.begin(), dist.end(), r) - dist.begin();
    return prefix[static_cast<std::size_t>(k)];
}

namespace {
double inv_pow2n(double r, int n) {
    if (std::isinf(r)) return 0.0;
    if (n == 1) return 1.0 / (r * r);
    return std::pow(r, -2.0 * n);
}
}  // namespace

double event_sweep_integral(const std::vector<double>& dist, const std::vector<double>& value, int n, double lo,
                            double hi) {
    if (n < 1) throw std::invalid_argument("sweep: n must be >= 1");
    if (!(lo >= 0.0) || !(hi > lo)) return 0.0;
    const std::size_t m = dist.size();
    const double half_n = std::ldexp(1.0, -n);
    std::size_t ia = 0, ib = 0;  // A-events at d_i, B-events at d_i / 2
    double a = 0.0, b = 0.0;
    while (ia < m && dist[ia] <= lo) a += value[ia++];
    while (ib < m && dist[ib] <= 2.0 * lo) b += value[ib++];
    double total = 0.0;
    double u = lo;
    auto piece = [&](double v) {
        const double c = a - b * half_n;
        if (c == 0.0) return;
        if (u == 0.0) {
            total = std::numeric_limits<double>::infinity();
            return;
        }
        total += c * c * (inv_pow2n(u, n) - inv_pow2n(v, n)) / (2.0 * n);
    };
    while (true) {
        const double ea = ia < m ? dist[ia] : std::numeric_limits<double>::infinity();
        const double eb = ib < m ? 0.5 * dist[ib] : std::numeric_limits<double>::infinity();
        const double e = std::min(ea, eb);
        if (!(e < hi)) break;
        piece(e);
        u = e;
        while (ia < m && dist[ia] == e) a += value[ia++];
        while (ib < m && 0.5 * dist[ib] == e) b += value[ib++];
    }
    piece(hi);
    return total;
}

double sqfn_integral(const DiscreteMeasure& m, const Point& x, const ScaleRange& range, QuadMode mode, int q) {
    range.validate();
    const RadialProfile prof(m, x);
    if (mode == QuadMode::exact) return event_sweep_integral(prof.dist, prof.value, 1, range.r_min, range.r_max);
    if (q < 1) throw std::invalid_argument("sqfn_integral: q must be >= 1");
    if (!std::isfinite(range.r_max)) throw std::invalid_argument("sqfn_integral: grid mode needs finite r_max");
    const double octaves = std::log2(range.r_max / range.r_min);
    const auto cells = static_cast<long>(std::ceil(q * octaves));
    const double h = std::log(range.r_max / range.r_min) / static_cast<double>(cells);
    double total = 0.0;
    for (long k = 0; k < cells; ++k) {
        const double r = range.r_min * std::exp((static_cast<double>(k) + 0.5) * h);
        const double d = (prof.within(r) - 0.5 * prof.within(2.0 * r)) / r;
        total += d * d * h;
    }
    return total;
}

double t_transform(const DiscreteMeasure& m, const std::vector<double>& f, int n, double trunc, const Point& x,
                   double r_min, double r_max) {
    if (trunc < 0.0 || r_min < 0.0) throw std::invalid_argument("t_transform: negative truncation");
    const double lo = std::max(trunc, r_min);
    if (!(lo < r_max)) return 0.0;
    const RadialProfile prof(m, x, f.empty() ? nullptr : &f);
    return std::sqrt(event_sweep_integral(prof.dist, prof.value, n, lo, r_max));
}

double maximal_op(const DiscreteMeasure& m, const std::vector<double>& f, MaxKind kind, int n, double ell,
                  const Point& x) {
    if (ell < 0.0) throw std::invalid_argument("maximal_op: ell must be >= 0");
    if (n < 1) throw std::invalid_argument("maximal_op: n must be >= 1");
    const RadialProfile num(m, x, f.empty() ? nullptr : &f, true);
    const RadialProfile den(m, x);

    // Candidate radii: events strictly above ell, the midpoints between them, and ell itself.
    std::vector<double> ev;
    for (double d : den.dist) {
        if (d > ell) ev.push_back(d);
        if (0.5 * d > ell) ev.push_back(0.5 * d);
    }
    std::sort(ev.begin(), ev.end());
    ev.erase(std::unique(ev.begin(), ev.end()), ev.end());

    std::vector<double> cand;
    if (ell > 0.0) cand.push_back(ell);
    else if (kind == MaxKind::ratio) cand.push_back(ev.empty() ? 1.0 : 0.5 * ev.front());
    for (std::size_t k = 0; k < ev.size(); ++k) {
        cand.push_back(ev[k]);
        if (k + 1 < ev.size()) cand.push_back(0.5 * (ev[k] + ev[k + 1]));
    }

    double best = 0.0;
    for (double r : cand) {
        const double top = num.within(r);
        double v;
        if (kind == MaxKind::ratio) {
            const double bottom = den.within(2.0 * r);
            v = bottom > 0.0 ? top / bottom : 0.0;
        } else {
            v = top / std::pow(r, n);
        }
        best = std::max(best, v);
    }
    if (kind == MaxKind::power && ell == 0.0 && ev.empty() && num.within(0.0) > 0.0)
        return std::numeric_limits<double>::infinity();
    return best;
}

DoublingCheck check_doubling_implication(const DiscreteMeasure& m, const Point& x, double r) {
    if (!(r > 0.0)) throw std::invalid_argument("doubling check: r must be positive");
    if (!(m.ball_mass({x, 0.5 * r}) > 0.0))
        throw std::invalid_argument("doubling check: mu(B(x, r/2)) must be positive");
    DoublingCheck out;
    const double mr = m.ball_mass({x, r});
    const double m2r = m.ball_mass({x, 2.0 * r});
    const double th = theta(mr, Ball{x, r});
    out.sqfn = sqfn_integral(m, x, {0.5 * r, 2.0 * r});
    out.threshold = th * th / 200.0;
    out.hypothesis = out.sqfn <= out.threshold;
    out.conclusion = m2r <= 9.0 * mr;
    out.growth = m2r / mr;
    return out;
}

}  // namespace gmt
