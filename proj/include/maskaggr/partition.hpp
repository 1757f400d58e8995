#pragma once

#include <cstdint>
#include <vector>

#include "maskaggr/grid_graph.hpp"
#include "maskaggr/volume.hpp"

namespace maskaggr {

// Label volume with positive ids on every assigned voxel.
using Segmentation = LabelVolume;

struct PartitionConfig {
    // Fraction of valid long-range edges kept for partitioning.
    double long_range_fraction = 0.10;
    std::uint64_t subsample_seed = 0;
    std::size_t min_segment_size = 200;
    // GASP interactions weighted by edge evidence; false uses unit weights.
    bool gasp_evidence_weighted = true;
};

void validate(const PartitionConfig& cfg);

// Signed weight of an affinity.
inline double signed_weight(double affinity) { return affinity - 0.5; }

// Plain signed graph; edge order is the canonical tie-break order.
struct SignedEdge {
    std::uint32_t u = 0;
    std::uint32_t v = 0;
    double weight = 0.0;
    double evidence = 1.0;
};

struct SignedGraph {
    std::size_t node_count = 0;
    std::vector<SignedEdge> edges;
};

// True when the long-range edge (voxel, k) is in the seeded subsample.
bool keep_long_range_edge(std::uint64_t seed, std::size_t voxel, std::size_t k, double fraction);

// Valid edges of the grid graph after long-range subsampling, with w = a - 0.5,
// in (z, y, x, k) order.
SignedGraph to_signed_graph(const SignedGridGraph& graph, const PartitionConfig& cfg);

struct MwsEvent {
    enum class Kind { Merge, Mutex };
    Kind kind;
    // Cluster representatives at the time of the event.
    std::uint32_t a;
    std::uint32_t b;
};

// Records every merge and mutex insertion of a run.
struct MwsTrace {
    std::vector<MwsEvent> events;
};

// Node labels 1..n, numbered by first appearance in node order.
std::vector<std::uint32_t> mutex_watershed(const SignedGraph& graph, MwsTrace* trace = nullptr);

struct GaspStats {
    std::size_t merges = 0;
};

std::vector<std::uint32_t> gasp_average(const SignedGraph& graph, bool evidence_weighted = true,
                                        GaspStats* stats = nullptr);

// Evidence-weighted (or unit-weighted) mean inter-cluster weight for every
// adjacent cluster pair of a labeling; used to check the stopping condition.
struct ClusterInteraction {
    std::uint32_t a;
    std::uint32_t b;
    double value;
};
std::vector<ClusterInteraction> cluster_interactions(const SignedGraph& graph, const std::vector<std::uint32_t>& labels,
                                                     bool evidence_weighted = true);

Segmentation mutex_watershed(const SignedGridGraph& graph, const PartitionConfig& cfg);
Segmentation gasp_average(const SignedGridGraph& graph, const PartitionConfig& cfg);

// Unassigns segments smaller than min_size and regrows the remaining ones over
// short-range edges, always crossing the strongest available affinity first.
Segmentation remove_small_segments(const Segmentation& seg, const SignedGridGraph& graph, std::size_t min_size);

// Renumbers labels 1..n by first appearance; 0 stays 0.
Segmentation relabel_sequential(const Segmentation& seg);

}  // namespace maskaggr
