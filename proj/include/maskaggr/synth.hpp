#pragma once

#include <cstdint>

#include "maskaggr/volume.hpp"

namespace maskaggr {

// Per-axis distance weights of the Voronoi metric.
struct Anisotropy {
    double z = 10.0;
    double y = 1.0;
    double x = 1.0;
};

// Seeded anisotropic Voronoi labeling with labels 1..num_instances, each a
// single 6-connected region. Distance ties go to the lowest seed index.
LabelVolume generate_labels(Shape3 shape, std::size_t num_instances, Anisotropy anisotropy, std::uint64_t seed,
                            unsigned threads = 1);

// Number of 6-connected components per label (index = label id).
std::vector<std::size_t> component_counts(const LabelVolume& labels);

}  // namespace maskaggr
