#pragma once

#include <limits>
#include <vector>

#include "gmt/measure.hpp"

namespace gmt {

enum class QuadMode { exact, grid };

/// Signed density difference mu(B(x,r))/r - mu(B(x,2r))/(2r).
double delta_signed(const DiscreteMeasure& m, const Point& x, double r);
double delta_signed(const PolylineMeasure& m, const Point& x, double r);
/// |delta_signed|.
double delta(const DiscreteMeasure& m, const Point& x, double r);
double delta(const PolylineMeasure& m, const Point& x, double r);

/// Radial profile: 1 on [0, 1/2], C2 quintic ramp down to 0 at `support`.
struct SmoothProfile {
    double support = 2.0;  // 1 or 2

    double phi(double t) const;
    double dphi(double t) const;
    /// Constant c with  int_{r1}^{r2} |D_phi|^2 dr/r <= c int_{r1/2}^{2 r2} |D|^2 dr/r.
    double comparison_constant() const;
};

/// Smooth analogue: sum_j w_j (phi_t - phi_{2t})(|y_j - x|), phi_t(s) = phi(s/t)/t. Signed.
double delta_smooth(const DiscreteMeasure& m, const Point& x, double t, const SmoothProfile& phi);

/// int_{r_min}^{r_max} delta(x,r)^2 dr/r. Grid mode requires finite r_max.
double sqfn_integral(const DiscreteMeasure& m, const Point& x, const ScaleRange& range,
                     QuadMode mode = QuadMode::exact, int q = 32);

/// Distances from x sorted ascending with the matching weights (times f when given).
struct RadialProfile {
    std::vector<double> dist;
    std::vector<double> value;   // f_i * w_i (or w_i)
    std::vector<double> prefix;  // prefix[k] = sum of value[0..k)

    RadialProfile(const DiscreteMeasure& m, const Point& x, const std::vector<double>* f = nullptr,
                  bool absolute = false);
    /// Sum of values with dist <= r.
    double within(double r) const;
};

/// Exact integral of |A(r)/r^n - A(2r)/(2r)^n|^2 dr/r over [lo, hi] where A(r) sums `value`
/// over dist <= r. hi may be +infinity. Returns +infinity if lo == 0 and the integrand blows up.
double event_sweep_integral(const std::vector<double>& dist, const std::vector<double>& value, int n,
                            double lo, double hi);

/// Square root of the generalized square function with per-atom f and power n over r in (max(trunc, r_min), r_max).
double t_transform(const DiscreteMeasure& m, const std::vector<double>& f, int n, double trunc, const Point& x,
                   double r_min = 0.0, double r_max = std::numeric_limits<double>::infinity());

enum class MaxKind { ratio, power };

/// sup_{r > ell} of (1/mu(B(x,2r))) int_{B(x,r)} |f| (ratio) or r^{-n} int_{B(x,r)} |f| (power).
/// With ell == 0 the power kind is evaluated from the smallest positive event radius on.
double maximal_op(const DiscreteMeasure& m, const std::vector<double>& f, MaxKind kind, int n, double ell,
                  const Point& x);

struct DoublingCheck {
    bool hypothesis = false;
    bool conclusion = false;
    double sqfn = 0.0;
    double threshold = 0.0;
    double growth = 0.0;  // mu(B(x,2r)) / mu(B(x,r))
};

/// Small square function over [r/2, 2r] forces mu(B(x,2r)) <= 9 mu(B(x,r)).
DoublingCheck check_doubling_implication(const DiscreteMeasure& m, const Point& x, double r);

}  // namespace gmt
