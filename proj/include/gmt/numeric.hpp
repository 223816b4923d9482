#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gmt {

/// Pairwise (tree) summation in input order. Deterministic for a given sequence.
double pairwise_sum(std::span<const double> values);

/// C2 quintic smoothstep on [0,1]: 6u^5 - 15u^4 + 10u^3, clamped outside.
double smoothstep5(double u);
double smoothstep5_deriv(double u);

/// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

/// 64-bit FNV-1a, used for stable input hashes in reports.
std::uint64_t fnv1a64(std::string_view bytes);

/// Small deterministic generator. Output does not depend on the standard
/// library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed);
    std::uint64_t next_u64();
    double uniform();                       // [0, 1)
    double uniform(double lo, double hi);   // [lo, hi)
    std::size_t below(std::size_t n);       // [0, n)
    double normal();

private:
    std::uint64_t s_[4];
};

/// Walker alias table for sampling indices proportionally to weights.
class AliasTable {
public:
    explicit AliasTable(std::span<const double> weights);
    std::size_t sample(Rng& rng) const;

private:
    std::vector<double> prob_;
    std::vector<std::size_t> alias_;
};

/// Adaptive Simpson quadrature with absolute tolerance.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol, int max_depth = 40);

namespace detail {
template <class F>
double simpson_rec(F& f, double a, double b, double fa, double fm, double fb, double whole,
                   double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double diff = left + right - whole;
    if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol, int max_depth) {
    if (!(b > a)) return 0.0;
    // Eight initial panels so narrow features are not skipped by the first estimate.
    constexpr int kPanels = 8;
    const double h = (b - a) / kPanels;
    double total = 0.0;
    for (int i = 0; i < kPanels; ++i) {
        const double lo = a + i * h, hi = (i + 1 == kPanels) ? b : a + (i + 1) * h;
        const double fa = f(lo), fb = f(hi), fm = f(0.5 * (lo + hi));
        const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        total += detail::simpson_rec(f, lo, hi, fa, fm, fb, whole, tol / kPanels, max_depth);
    }
    return total;
}

}  // namespace gmt
