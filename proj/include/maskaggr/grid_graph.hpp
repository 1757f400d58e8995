#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "maskaggr/volume.hpp"

namespace maskaggr {

// Edge between voxel `source` and source + offsets[k].
struct GridEdge {
    std::size_t source = 0;
    std::uint32_t k = 0;

    friend bool operator==(GridEdge, GridEdge) = default;
};

// All in-bounds (u, k) pairs in (z, y, x, k) order.
std::vector<GridEdge> enumerate_edges(Shape3 shape, const AffinityNeighborhood& neighborhood);

// Number of in-bounds pairs for a single offset.
std::size_t offset_edge_count(Shape3 shape, Coord3 offset);

// Per-edge aggregated affinity statistics over a voxel grid.
//
// Storage is dense over slots (voxel * K + k); slots whose target leaves the
// volume are not edges and are never reported by edges().
class SignedGridGraph {
public:
    SignedGridGraph() = default;
    SignedGridGraph(Shape3 shape, AffinityNeighborhood neighborhood);

    Shape3 shape() const { return shape_; }
    const AffinityNeighborhood& neighborhood() const { return neighborhood_; }
    std::size_t slot_count() const { return mean_.size(); }

    std::size_t slot(std::size_t voxel, std::size_t k) const { return voxel * neighborhood_.size() + k; }
    std::size_t slot(GridEdge e) const { return slot(e.source, e.k); }
    GridEdge edge_of(std::size_t slot) const
    {
        return {slot / neighborhood_.size(), static_cast<std::uint32_t>(slot % neighborhood_.size())};
    }

    bool in_bounds(std::size_t voxel, std::size_t k) const;
    std::size_t target(std::size_t voxel, std::size_t k) const;

    std::vector<GridEdge> edges() const { return enumerate_edges(shape_, neighborhood_); }

    double mean(std::size_t slot) const { return mean_[slot]; }
    double variance(std::size_t slot) const { return variance_[slot]; }
    double evidence(std::size_t slot) const { return evidence_[slot]; }
    bool valid(std::size_t slot) const { return valid_[slot] != 0; }

    // Sets an edge; evidence <= 0 marks it invalid and clears mean/variance.
    // Mean is clamped to [0, 1] and variance to [0, 0.25].
    void set(std::size_t slot, double mean, double variance, double evidence);

    std::size_t valid_count() const;
    // Mean of the variance over valid edges (0 when there are none).
    double mean_variance() const;

    friend bool operator==(const SignedGridGraph&, const SignedGridGraph&) = default;

private:
    Shape3 shape_{};
    AffinityNeighborhood neighborhood_;
    std::vector<double> mean_;
    std::vector<double> variance_;
    std::vector<double> evidence_;
    std::vector<std::uint8_t> valid_;
};

}  // namespace maskaggr
