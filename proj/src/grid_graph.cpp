#include "maskaggr/grid_graph.hpp"

#include <algorithm>
#include <cstdlib>

#include "maskaggr/error.hpp"

namespace maskaggr {

std::vector<GridEdge> enumerate_edges(Shape3 shape, const AffinityNeighborhood& neighborhood)
{
    validate_shape(shape);
    std::vector<GridEdge> edges;
    const auto& offsets = neighborhood.offsets();
    for (std::int64_t z = 0; z < shape.z; ++z)
        for (std::int64_t y = 0; y < shape.y; ++y)
            for (std::int64_t x = 0; x < shape.x; ++x) {
                const Coord3 u{x, y, z};
                for (std::size_t k = 0; k < offsets.size(); ++k)
                    if (shape.contains(u + offsets[k]))
                        edges.push_back({shape.index(u), static_cast<std::uint32_t>(k)});
            }
    return edges;
}

std::size_t offset_edge_count(Shape3 shape, Coord3 offset)
{
    auto axis = [](std::int64_t extent, std::int64_t o) {
        return std::max<std::int64_t>(0, extent - std::abs(o));
    };
    return static_cast<std::size_t>(axis(shape.x, offset.x) * axis(shape.y, offset.y) *
                                    axis(shape.z, offset.z));
}

SignedGridGraph::SignedGridGraph(Shape3 shape, AffinityNeighborhood neighborhood)
    : shape_(shape), neighborhood_(std::move(neighborhood))
{
    validate_shape(shape);
    const std::size_t n = shape.voxel_count() * neighborhood_.size();
    mean_.assign(n, 0.0);
    variance_.assign(n, 0.0);
    evidence_.assign(n, 0.0);
    valid_.assign(n, 0);
}

bool SignedGridGraph::in_bounds(std::size_t voxel, std::size_t k) const
{
    return shape_.contains(shape_.coord(voxel) + neighborhood_[k]);
}

std::size_t SignedGridGraph::target(std::size_t voxel, std::size_t k) const
{
    return shape_.index(shape_.coord(voxel) + neighborhood_[k]);
}

void SignedGridGraph::set(std::size_t slot, double mean, double variance, double evidence)
{
    if (!(evidence > 0.0)) {
        mean_[slot] = 0.0;
        variance_[slot] = 0.0;
        evidence_[slot] = 0.0;
        valid_[slot] = 0;
        return;
    }
    mean_[slot] = std::clamp(mean, 0.0, 1.0);
    variance_[slot] = std::clamp(variance, 0.0, 0.25);
    evidence_[slot] = evidence;
    valid_[slot] = 1;
}

std::size_t SignedGridGraph::valid_count() const
{
    return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), std::uint8_t{1}));
}

double SignedGridGraph::mean_variance() const
{
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < valid_.size(); ++i)
        if (valid_[i]) {
            sum += variance_[i];
            ++n;
        }
    return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace maskaggr
