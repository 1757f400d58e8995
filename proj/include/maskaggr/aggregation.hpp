#pragma once

#include <vector>

#include "maskaggr/grid_graph.hpp"
#include "maskaggr/masks.hpp"

namespace maskaggr {

// Weighted online mean / population variance (West's update of Welford's
// algorithm). Zero-weight samples are ignored.
class WeightedWelford {
public:
    void add(double value, double weight)
    {
        if (!(weight > 0.0))
            return;
        if (weight_sum_ == 0.0) {
            weight_sum_ = weight;
            mean_ = value;
            return;
        }
        weight_sum_ += weight;
        const double delta = value - mean_;
        mean_ += delta * (weight / weight_sum_);
        m2_ += weight * delta * (value - mean_);
    }

    double weight_sum() const { return weight_sum_; }
    double mean() const { return mean_; }
    double variance() const { return weight_sum_ > 0.0 ? m2_ / weight_sum_ : 0.0; }

private:
    double weight_sum_ = 0.0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

// How a mask entry maps to full-resolution voxels. Only strided sampling is
// implemented: entry n of mask (c, s) is the single voxel c + s * n.
enum class CoverageMode { Strided };

struct EdgeStats {
    double mean = 0.0;
    double variance = 0.0;
    double evidence = 0.0;

    friend bool operator==(const EdgeStats&, const EdgeStats&) = default;
};

// Accumulates every mask of `fields` (in order) covering both u and v, centers
// visited in lexicographic (z, y, x) order. Symmetric in (u, v).
EdgeStats aggregate_pair(const std::vector<MaskField>& fields, Coord3 u, Coord3 v);

// Mask-aggregated affinities from precomputed fields (one per scale, in the
// order they are pooled).
SignedGridGraph aggregate_fields(const std::vector<MaskField>& fields, const AffinityNeighborhood& neighborhood,
                                 unsigned threads = 1);

SignedGridGraph aggregate_affinities(const MaskProvider& provider, Shape3 shape,
                                     const AffinityNeighborhood& neighborhood, MaskWindow window,
                                     const std::vector<Scale>& scales, unsigned threads = 1);

// Direct readout: affinity of (u, u+o) is the scale-1 mask at u evaluated at o.
SignedGridGraph baseline_affinities(const MaskProvider& provider, Shape3 shape,
                                    const AffinityNeighborhood& neighborhood, MaskWindow window,
                                    unsigned threads = 1);

}  // namespace maskaggr
