#include "gmt/generators.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "gmt/numeric.hpp"

namespace gmt {

namespace {

constexpr int kModes = 8;

struct Profile {
    std::array<double, kModes> amp{}, freq{}, phase{};
};

// Random trigonometric profile with sum |amp| = 1, so |g'| <= lip.
Profile make_profile(std::uint64_t seed) {
    Rng rng(seed);
    Profile p;
    double total = 0.0;
    for (int m = 0; m < kModes; ++m) {
        p.amp[m] = rng.uniform(0.2, 1.0) / (m + 1);
        p.freq[m] = m + 1;
        p.phase[m] = rng.uniform(0.0, 2.0 * std::numbers::pi);
        total += p.amp[m];
    }
    for (double& a : p.amp) a /= total;
    return p;
}

}  // namespace

void GeneratorSpec::validate() const {
    if (kind == "cantor4") {
        if (generation < 0 || generation > 10) throw std::invalid_argument("cantor4: generation must be in [0, 10]");
        return;
    }
    if (kind != "segment" && kind != "circle" && kind != "lipschitz_graph" && kind != "perturbed_line" &&
        kind != "atom_cloud")
        throw std::invalid_argument("unknown generator kind: " + kind);
    if (n == 0) throw std::invalid_argument("generator: n must be positive");
    if (!(length > 0.0) || !(radius > 0.0)) throw std::invalid_argument("generator: length and radius must be > 0");
    if (!(lip >= 0.0) || !(noise >= 0.0)) throw std::invalid_argument("generator: lip and noise must be >= 0");
}

double lipschitz_profile(double t, double lip, std::uint64_t seed) {
    const Profile p = make_profile(seed);
    double g = 0.0;
    for (int m = 0; m < kModes; ++m) {
        const double k = 2.0 * std::numbers::pi * p.freq[m];
        g += p.amp[m] * std::sin(k * t + p.phase[m]) / k;
    }
    return lip * g;
}

double lipschitz_profile_deriv(double t, double lip, std::uint64_t seed) {
    const Profile p = make_profile(seed);
    double g = 0.0;
    for (int m = 0; m < kModes; ++m) g += p.amp[m] * std::cos(2.0 * std::numbers::pi * p.freq[m] * t + p.phase[m]);
    return lip * g;
}

DiscreteMeasure generate(const GeneratorSpec& spec) {
    spec.validate();
    std::vector<Point> pos;
    std::vector<double> w;
    const std::size_t n = spec.n;

    if (spec.kind == "segment") {
        for (std::size_t k = 0; k < n; ++k) {
            pos.push_back(Point{spec.length * (k + 0.5) / n, 0.0});
            w.push_back(spec.length / n);
        }
    } else if (spec.kind == "circle") {
        for (std::size_t k = 0; k < n; ++k) {
            const double t = 2.0 * std::numbers::pi * k / n;
            pos.push_back(Point{spec.radius * std::cos(t), spec.radius * std::sin(t)});
            w.push_back(2.0 * std::numbers::pi * spec.radius / n);
        }
    } else if (spec.kind == "lipschitz_graph") {
        const Profile p = make_profile(spec.seed);
        for (std::size_t k = 0; k < n; ++k) {
            const double t = (k + 0.5) / n;
            double g = 0.0, dg = 0.0;
            for (int m = 0; m < kModes; ++m) {
                const double kk = 2.0 * std::numbers::pi * p.freq[m];
                g += p.amp[m] * std::sin(kk * t + p.phase[m]) / kk;
                dg += p.amp[m] * std::cos(kk * t + p.phase[m]);
            }
            pos.push_back(Point{t, spec.lip * g});
            w.push_back(std::sqrt(1.0 + spec.lip * spec.lip * dg * dg) / n);
        }
    } else if (spec.kind == "perturbed_line") {
        Rng rng(spec.seed);
        for (std::size_t k = 0; k < n; ++k) {
            pos.push_back(Point{spec.length * (k + 0.5) / n, spec.noise * rng.uniform(-1.0, 1.0)});
            w.push_back(spec.length / n);
        }
    } else if (spec.kind == "atom_cloud") {
        Rng rng(spec.seed);
        for (std::size_t k = 0; k < n; ++k) {
            const double x = rng.uniform(), y = rng.uniform();
            pos.push_back(Point{x, y});
            w.push_back(rng.uniform(0.5, 1.5) / n);
        }
    } else {  // cantor4: corner squares of side 1/4 at every generation
        std::vector<Point> corners{Point{0.0, 0.0}};
        double side = 1.0;
        for (int g = 0; g < spec.generation; ++g) {
            const double s = side / 4.0;
            std::vector<Point> next;
            next.reserve(corners.size() * 4);
            for (const Point& c : corners)
                for (int q = 0; q < 4; ++q)
                    next.push_back(Point{c[0] + (q & 1 ? side - s : 0.0), c[1] + (q & 2 ? side - s : 0.0)});
            corners = std::move(next);
            side = s;
        }
        for (const Point& c : corners) {
            pos.push_back(Point{c[0] + side / 2, c[1] + side / 2});
            w.push_back(side);  // 4^-n: total mass 1 under either normalization
        }
    }

    if (spec.norm == Normalization::probability) {
        const double total = pairwise_sum(w);
        for (double& x : w) x /= total;
    }
    return DiscreteMeasure(2, pos, w);
}

}  // namespace gmt
