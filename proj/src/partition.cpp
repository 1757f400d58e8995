#include "maskaggr/partition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <queue>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "maskaggr/error.hpp"

namespace maskaggr {

namespace {

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1)
    {
        std::iota(parent_.begin(), parent_.end(), std::uint32_t{0});
    }

    std::uint32_t find(std::uint32_t x)
    {
        std::uint32_t root = x;
        while (parent_[root] != root)
            root = parent_[root];
        while (parent_[x] != root) {
            const std::uint32_t next = parent_[x];
            parent_[x] = root;
            x = next;
        }
        return root;
    }

    // Union by size; equal sizes keep the lower index as root.
    std::uint32_t unite(std::uint32_t a, std::uint32_t b)
    {
        if (size_[a] < size_[b] || (size_[a] == size_[b] && b < a))
            std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
        return a;
    }

    std::vector<std::uint32_t> labels()
    {
        std::vector<std::uint32_t> out(parent_.size(), 0);
        std::unordered_map<std::uint32_t, std::uint32_t> ids;
        for (std::uint32_t i = 0; i < parent_.size(); ++i) {
            const auto [it, inserted] = ids.try_emplace(find(i), static_cast<std::uint32_t>(ids.size() + 1));
            out[i] = it->second;
        }
        return out;
    }

private:
    std::vector<std::uint32_t> parent_;
    std::vector<std::uint32_t> size_;
};

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Segmentation to_segmentation(Shape3 shape, const std::vector<std::uint32_t>& labels)
{
    std::vector<Label> data(labels.begin(), labels.end());
    return Segmentation(shape, std::move(data));
}

void check_node_count(std::size_t n)
{
    if (n > 0xFFFFFFFFu)
        throw Error(ErrorKind::InvalidArgument, "graph has too many nodes");
}

}  // namespace

void validate(const PartitionConfig& cfg)
{
    if (!(cfg.long_range_fraction >= 0.0 && cfg.long_range_fraction <= 1.0))
        throw Error(ErrorKind::Config, "long_range_fraction must lie in [0,1]");
}

bool keep_long_range_edge(std::uint64_t seed, std::size_t voxel, std::size_t k, double fraction)
{
    if (fraction >= 1.0)
        return true;
    if (fraction <= 0.0)
        return false;
    const std::uint64_t h = splitmix64(splitmix64(splitmix64(seed) ^ voxel) ^ k);
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    return u < fraction;
}

SignedGraph to_signed_graph(const SignedGridGraph& graph, const PartitionConfig& cfg)
{
    validate(cfg);
    const Shape3 shape = graph.shape();
    check_node_count(shape.voxel_count());
    const auto& nh = graph.neighborhood();
    SignedGraph out;
    out.node_count = shape.voxel_count();
    for (const GridEdge& e : graph.edges()) {
        const std::size_t slot = graph.slot(e);
        if (!graph.valid(slot))
            continue;
        if (nh.is_long_range(e.k) && !keep_long_range_edge(cfg.subsample_seed, e.source, e.k, cfg.long_range_fraction))
            continue;
        out.edges.push_back({static_cast<std::uint32_t>(e.source),
                             static_cast<std::uint32_t>(graph.target(e.source, e.k)), signed_weight(graph.mean(slot)),
                             graph.evidence(slot)});
    }
    return out;
}

std::vector<std::uint32_t> mutex_watershed(const SignedGraph& graph, MwsTrace* trace)
{
    check_node_count(graph.node_count);
    const auto& edges = graph.edges;
    std::vector<std::size_t> order(edges.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(edges[a].weight) > std::abs(edges[b].weight);
    });

    UnionFind uf(graph.node_count);
    // Mutex constraints keyed by cluster representative.
    std::unordered_map<std::uint32_t, std::unordered_set<std::uint32_t>> mutex;
    auto has_mutex = [&](std::uint32_t a, std::uint32_t b) {
        const auto it = mutex.find(a);
        return it != mutex.end() && it->second.count(b) > 0;
    };

    for (std::size_t idx : order) {
        const SignedEdge& e = edges[idx];
        if (e.weight == 0.0)
            continue;
        const std::uint32_t ra = uf.find(e.u);
        const std::uint32_t rb = uf.find(e.v);
        if (ra == rb)
            continue;
        if (e.weight > 0.0) {
            if (has_mutex(ra, rb))
                continue;
            const std::uint32_t root = uf.unite(ra, rb);
            const std::uint32_t gone = root == ra ? rb : ra;
            if (trace)
                trace->events.push_back({MwsEvent::Kind::Merge, ra, rb});
            const auto it = mutex.find(gone);
            if (it != mutex.end()) {
                std::unordered_set<std::uint32_t> moved = std::move(it->second);
                mutex.erase(it);
                auto& own = mutex[root];
                for (std::uint32_t m : moved) {
                    auto& other = mutex[m];
                    other.erase(gone);
                    other.insert(root);
                    own.insert(m);
                }
            }
        } else {
            mutex[ra].insert(rb);
            mutex[rb].insert(ra);
            if (trace)
                trace->events.push_back({MwsEvent::Kind::Mutex, ra, rb});
        }
    }
    return uf.labels();
}

namespace {

struct PairAcc {
    double weighted_sum = 0.0;
    double weight = 0.0;
    double value() const { return weighted_sum / weight; }
};

struct HeapEntry {
    double value;
    std::uint32_t a;
    std::uint32_t b;
    std::uint32_t version_a;
    std::uint32_t version_b;
};

// Highest interaction first, then lowest (a, b).
struct HeapOrder {
    bool operator()(const HeapEntry& x, const HeapEntry& y) const
    {
        if (x.value != y.value)
            return x.value < y.value;
        return std::tie(x.a, x.b) > std::tie(y.a, y.b);
    }
};

}  // namespace

std::vector<std::uint32_t> gasp_average(const SignedGraph& graph, bool evidence_weighted, GaspStats* stats)
{
    check_node_count(graph.node_count);
    const std::size_t n = graph.node_count;
    std::vector<std::unordered_map<std::uint32_t, PairAcc>> adj(n);
    for (const auto& e : graph.edges) {
        if (e.u == e.v)
            continue;
        const double w = evidence_weighted ? e.evidence : 1.0;
        if (!(w > 0.0))
            continue;
        for (auto [x, y] : {std::pair{e.u, e.v}, std::pair{e.v, e.u}}) {
            auto& acc = adj[x][y];
            acc.weighted_sum += w * e.weight;
            acc.weight += w;
        }
    }

    std::vector<std::uint32_t> version(n, 0);
    std::vector<std::uint8_t> alive(n, 1);
    std::priority_queue<HeapEntry, std::vector<HeapEntry>, HeapOrder> heap;
    auto push = [&](std::uint32_t a, std::uint32_t b, double value) {
        if (a > b)
            std::swap(a, b);
        heap.push({value, a, b, version[a], version[b]});
    };
    for (std::uint32_t a = 0; a < n; ++a)
        for (const auto& [b, acc] : adj[a])
            if (a < b)
                push(a, b, acc.value());

    UnionFind uf(n);
    std::size_t merges = 0;
    while (!heap.empty()) {
        const HeapEntry top = heap.top();
        heap.pop();
        if (!alive[top.a] || !alive[top.b] || version[top.a] != top.version_a || version[top.b] != top.version_b)
            continue;
        if (top.value <= 0.0)
            break;
        // Cluster ids are the smallest member node; `keep` absorbs `drop`.
        const std::uint32_t keep = top.a;
        const std::uint32_t drop = top.b;
        uf.unite(uf.find(keep), uf.find(drop));
        ++merges;
        alive[drop] = 0;
        ++version[keep];
        ++version[drop];

        auto dropped = std::move(adj[drop]);
        adj[drop].clear();
        adj[keep].erase(drop);
        for (const auto& [m, acc] : dropped) {
            if (m == keep)
                continue;
            auto& merged = adj[keep][m];
            merged.weighted_sum += acc.weighted_sum;
            merged.weight += acc.weight;
            adj[m].erase(drop);
            adj[m][keep] = merged;
        }
        for (const auto& [m, acc] : adj[keep])
            push(keep, m, acc.value());
    }
    if (stats)
        stats->merges = merges;
    return uf.labels();
}

std::vector<ClusterInteraction> cluster_interactions(const SignedGraph& graph, const std::vector<std::uint32_t>& labels,
                                                     bool evidence_weighted)
{
    std::map<std::pair<std::uint32_t, std::uint32_t>, PairAcc> acc;
    for (const auto& e : graph.edges) {
        std::uint32_t a = labels[e.u];
        std::uint32_t b = labels[e.v];
        if (a == b)
            continue;
        if (a > b)
            std::swap(a, b);
        const double w = evidence_weighted ? e.evidence : 1.0;
        auto& p = acc[{a, b}];
        p.weighted_sum += w * e.weight;
        p.weight += w;
    }
    std::vector<ClusterInteraction> out;
    for (const auto& [key, p] : acc)
        out.push_back({key.first, key.second, p.value()});
    return out;
}

Segmentation mutex_watershed(const SignedGridGraph& graph, const PartitionConfig& cfg)
{
    const SignedGraph g = to_signed_graph(graph, cfg);
    if (g.edges.empty())
        throw Error(ErrorKind::EmptyGraph, "mutex watershed needs at least one valid edge");
    return to_segmentation(graph.shape(), mutex_watershed(g));
}

Segmentation gasp_average(const SignedGridGraph& graph, const PartitionConfig& cfg)
{
    const SignedGraph g = to_signed_graph(graph, cfg);
    if (g.edges.empty())
        throw Error(ErrorKind::EmptyGraph, "GASP needs at least one valid edge");
    return to_segmentation(graph.shape(), gasp_average(g, cfg.gasp_evidence_weighted));
}

Segmentation remove_small_segments(const Segmentation& seg, const SignedGridGraph& graph, std::size_t min_size)
{
    const Shape3 shape = seg.shape();
    if (graph.shape() != shape)
        throw Error(ErrorKind::ShapeMismatch, "segmentation and graph shapes differ");

    std::unordered_map<Label, std::size_t> sizes;
    for (Label l : seg.data())
        if (l != 0)
            ++sizes[l];

    Segmentation out = seg;
    bool any_seed = false;
    for (auto& l : out.data()) {
        if (l != 0 && sizes[l] < min_size)
            l = 0;
        any_seed = any_seed || l != 0;
    }
    if (!any_seed)
        throw Error(ErrorKind::NoSeeds, "every segment is below the minimum size");

    const auto& nh = graph.neighborhood();
    const std::size_t direct = nh.direct_count();

    // (affinity, target, source): strongest affinity first, then lowest voxel ids.
    using Entry = std::tuple<double, std::size_t, std::size_t>;
    auto cmp = [](const Entry& x, const Entry& y) {
        if (std::get<0>(x) != std::get<0>(y))
            return std::get<0>(x) < std::get<0>(y);
        return std::tie(std::get<1>(x), std::get<2>(x)) > std::tie(std::get<1>(y), std::get<2>(y));
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> heap(cmp);

    auto affinity = [&](std::size_t slot) { return graph.valid(slot) ? graph.mean(slot) : 0.0; };
    auto push_neighbors = [&](std::size_t p) {
        const Coord3 c = shape.coord(p);
        for (std::size_t k = 0; k < direct; ++k) {
            const Coord3 fwd = c + nh[k];
            if (shape.contains(fwd)) {
                const std::size_t q = shape.index(fwd);
                if (out[q] == 0)
                    heap.push({affinity(graph.slot(p, k)), q, p});
            }
            const Coord3 back = c - nh[k];
            if (shape.contains(back)) {
                const std::size_t q = shape.index(back);
                if (out[q] == 0)
                    heap.push({affinity(graph.slot(q, k)), q, p});
            }
        }
    };

    for (std::size_t p = 0; p < out.size(); ++p)
        if (out[p] != 0)
            push_neighbors(p);
    while (!heap.empty()) {
        const auto [aff, q, p] = heap.top();
        heap.pop();
        if (out[q] != 0)
            continue;
        out[q] = out[p];
        push_neighbors(q);
    }
    for (Label l : out.data())
        if (l == 0)
            throw Error(ErrorKind::InvalidArgument, "short-range edges do not reach every voxel");
    return out;
}

Segmentation relabel_sequential(const Segmentation& seg)
{
    Segmentation out = seg;
    std::unordered_map<Label, Label> ids;
    for (auto& l : out.data()) {
        if (l == 0)
            continue;
        const auto [it, inserted] = ids.try_emplace(l, static_cast<Label>(ids.size() + 1));
        l = it->second;
    }
    return out;
}

}  // namespace maskaggr
