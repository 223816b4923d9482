#pragma once

#include <cstdint>
#include <string>

#include "gmt/measure.hpp"

namespace gmt {

enum class Normalization { probability, h1 };

struct GeneratorSpec {
    std::string kind = "segment";  // segment | circle | lipschitz_graph | cantor4 | perturbed_line | atom_cloud
    std::size_t n = 100;           // atoms (segment, circle, graph, perturbed_line, atom_cloud)
    int generation = 3;            // cantor4
    double length = 1.0;           // segment, perturbed_line
    double radius = 1.0;           // circle
    double lip = 0.1;              // lipschitz_graph
    double noise = 0.0;            // perturbed_line: uniform vertical offsets in [-noise, noise]
    std::uint64_t seed = 1;
    Normalization norm = Normalization::h1;

    void validate() const;
};

DiscreteMeasure generate(const GeneratorSpec& spec);

/// Height of the seeded Lipschitz profile used by lipschitz_graph, and its derivative.
/// |g'| <= lip everywhere.
double lipschitz_profile(double t, double lip, std::uint64_t seed);
double lipschitz_profile_deriv(double t, double lip, std::uint64_t seed);

}  // namespace gmt
