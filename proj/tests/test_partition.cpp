#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "maskaggr/aggregation.hpp"
#include "maskaggr/error.hpp"
#include "maskaggr/partition.hpp"
#include "maskaggr/synth.hpp"
#include "support/oracles.hpp"

using namespace maskaggr;

namespace {

SignedGraph random_graph(std::mt19937_64& rng, std::size_t max_nodes)
{
    SignedGraph g;
    g.node_count = 2 + rng() % (max_nodes - 1);
    const std::size_t m = rng() % (3 * g.node_count + 1);
    for (std::size_t i = 0; i < m; ++i) {
        const auto u = static_cast<std::uint32_t>(rng() % g.node_count);
        const auto v = static_cast<std::uint32_t>(rng() % g.node_count);
        if (u == v)
            continue;
        // Distinct magnitudes keep the greedy order free of ties.
        const double w = (static_cast<double>(rng() % 1000000) + 0.5) / 2000000.0 * ((rng() % 2) ? 1.0 : -1.0);
        g.edges.push_back({u, v, w, 1.0 + static_cast<double>(rng() % 5)});
    }
    return g;
}

// Replays a trace on a fresh union-find and checks that no merge joins two
// clusters that were separated by a mutex at that time.
bool trace_respects_mutexes(std::size_t n, const MwsTrace& trace)
{
    std::vector<std::uint32_t> parent(n);
    for (std::uint32_t i = 0; i < n; ++i)
        parent[i] = i;
    auto find = [&](std::uint32_t x) {
        while (parent[x] != x)
            x = parent[x];
        return x;
    };
    std::set<std::pair<std::uint32_t, std::uint32_t>> mutexes;
    auto separated = [&](std::uint32_t ra, std::uint32_t rb) {
        for (const auto& [x, y] : mutexes) {
            const auto fx = find(x);
            const auto fy = find(y);
            if ((fx == ra && fy == rb) || (fx == rb && fy == ra))
                return true;
        }
        return false;
    };
    for (const auto& ev : trace.events) {
        const auto ra = find(ev.a);
        const auto rb = find(ev.b);
        if (ev.kind == MwsEvent::Kind::Mutex) {
            if (ra == rb)
                return false;
            mutexes.insert({ev.a, ev.b});
        } else {
            if (ra == rb || separated(ra, rb))
                return false;
            parent[rb] = ra;
        }
    }
    return true;
}

SignedGridGraph line_graph(std::int64_t n, std::vector<double> means)
{
    SignedGridGraph g({n, 1, 1}, AffinityNeighborhood({{-1, 0, 0}}, 1));
    for (std::int64_t x = 1; x < n; ++x)
        g.set(g.slot(static_cast<std::size_t>(x), 0), means[static_cast<std::size_t>(x - 1)], 0.0, 1.0);
    return g;
}

}  // namespace

TEST_CASE("mws: two nodes with an attractive edge merge")
{
    const SignedGraph g{2, {{0, 1, 0.4, 1.0}}};
    const auto l = mutex_watershed(g);
    CHECK(l[0] == l[1]);

    const auto seg = mutex_watershed(line_graph(2, {0.9}), PartitionConfig{});
    CHECK(seg[0] == seg[1]);
}

TEST_CASE("mws: triangle example")
{
    // a=0, b=1, c=2
    const SignedGraph g{3, {{0, 1, 0.4, 1.0}, {1, 2, -0.45, 1.0}, {0, 2, 0.3, 1.0}}};
    MwsTrace trace;
    const auto l = mutex_watershed(g, &trace);
    CHECK(l == std::vector<std::uint32_t>{1, 1, 2});
    REQUIRE(trace.events.size() == 2);
    CHECK(trace.events[0].kind == MwsEvent::Kind::Mutex);
    CHECK(trace.events[1].kind == MwsEvent::Kind::Merge);
}

TEST_CASE("mws: zero-weight edges are skipped")
{
    const SignedGraph g{2, {{0, 1, 0.0, 1.0}}};
    CHECK(mutex_watershed(g) == std::vector<std::uint32_t>{1, 2});
}

TEST_CASE("mws: order-preserving weight transforms keep the partition")
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const SignedGraph g = random_graph(rng, 50);
        SignedGraph sq = g;
        SignedGraph cubed = g;
        for (auto& e : sq.edges)
            e.weight = std::copysign(e.weight * e.weight, e.weight);
        for (auto& e : cubed.edges)
            e.weight = std::copysign(std::exp(std::abs(e.weight)) - 1.0, e.weight);
        const auto base = mutex_watershed(g);
        CHECK(mutex_watershed(sq) == base);
        CHECK(mutex_watershed(cubed) == base);
    }
}

TEST_CASE("mws: instrumented runs never merge across a mutex")
{
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 200; ++trial) {
        const SignedGraph g = random_graph(rng, 50);
        MwsTrace trace;
        const auto labels = mutex_watershed(g, &trace);
        CHECK(trace_respects_mutexes(g.node_count, trace));
        // Every repulsive edge processed as a mutex keeps its endpoints apart.
        for (const auto& ev : trace.events)
            if (ev.kind == MwsEvent::Kind::Mutex)
                CHECK(labels[ev.a] != labels[ev.b]);
    }
}

TEST_CASE("gasp: all attractive gives one cluster, all repulsive singletons")
{
    std::mt19937_64 rng(9);
    SignedGraph g = random_graph(rng, 20);
    // Connect the graph with a path so "attractive" means one component.
    for (std::uint32_t i = 1; i < g.node_count; ++i)
        g.edges.push_back({i - 1, i, 0.1, 1.0});
    SignedGraph pos = g;
    SignedGraph neg = g;
    for (auto& e : pos.edges)
        e.weight = std::abs(e.weight);
    for (auto& e : neg.edges)
        e.weight = -std::abs(e.weight);
    const auto lp = gasp_average(pos);
    CHECK(std::set<std::uint32_t>(lp.begin(), lp.end()).size() == 1);
    GaspStats stats;
    const auto ln = gasp_average(neg, true, &stats);
    CHECK(std::set<std::uint32_t>(ln.begin(), ln.end()).size() == g.node_count);
    CHECK(stats.merges == 0);
}

TEST_CASE("gasp: path example stops at {a,b},{c}")
{
    const SignedGraph g{3, {{0, 1, 0.4, 1.0}, {1, 2, 0.1, 1.0}, {0, 2, -0.3, 1.0}}};
    GaspStats stats;
    CHECK(gasp_average(g, true, &stats) == std::vector<std::uint32_t>{1, 1, 2});
    CHECK(stats.merges == 1);
    const auto inter = cluster_interactions(g, {1, 1, 2});
    REQUIRE(inter.size() == 1);
    CHECK(inter[0].value == doctest::Approx(-0.1));
}

TEST_CASE("gasp: evidence weighting changes the interaction")
{
    // Same path, but the attractive b-c edge carries four times the evidence.
    const SignedGraph g{3, {{0, 1, 0.4, 1.0}, {1, 2, 0.1, 4.0}, {0, 2, -0.3, 1.0}}};
    CHECK(gasp_average(g, true) == std::vector<std::uint32_t>{1, 1, 1});
    CHECK(gasp_average(g, false) == std::vector<std::uint32_t>{1, 1, 2});
}

TEST_CASE("gasp: final interactions are non-positive and merges bounded")
{
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 200; ++trial) {
        const SignedGraph g = random_graph(rng, 40);
        for (bool weighted : {true, false}) {
            GaspStats stats;
            const auto labels = gasp_average(g, weighted, &stats);
            CHECK(stats.merges <= g.node_count - 1);
            const std::size_t clusters = std::set<std::uint32_t>(labels.begin(), labels.end()).size();
            CHECK(clusters == g.node_count - stats.merges);
            for (const auto& ci : cluster_interactions(g, labels, weighted))
                CHECK(ci.value <= 1e-12);
        }
    }
}

TEST_CASE("grid partitioners reject graphs without valid edges")
{
    SignedGridGraph g({3, 1, 1}, AffinityNeighborhood({{-1, 0, 0}}, 1));
    CHECK_THROWS_AS(mutex_watershed(g, PartitionConfig{}), Error);
    CHECK_THROWS_AS(gasp_average(g, PartitionConfig{}), Error);
}

TEST_CASE("long-range subsampling is seeded and keeps roughly the requested fraction")
{
    std::size_t kept = 0;
    const std::size_t n = 100000;
    for (std::size_t i = 0; i < n; ++i)
        kept += keep_long_range_edge(42, i, 5, 0.1) ? 1 : 0;
    CHECK(std::abs(static_cast<double>(kept) / n - 0.1) < 0.01);
    for (std::size_t i = 0; i < 1000; ++i) {
        CHECK(keep_long_range_edge(42, i, 3, 0.1) == keep_long_range_edge(42, i, 3, 0.1));
        CHECK(keep_long_range_edge(1, i, 3, 1.0));
        CHECK_FALSE(keep_long_range_edge(1, i, 3, 0.0));
    }
    PartitionConfig bad;
    bad.long_range_fraction = 1.5;
    CHECK_THROWS_AS(validate(bad), Error);
}

TEST_CASE("to_signed_graph keeps every short-range edge and transforms weights")
{
    const auto nh = AffinityNeighborhood::grid_graph_preset();
    SignedGridGraph g({8, 8, 3}, nh);
    std::size_t short_valid = 0;
    for (const auto& e : g.edges()) {
        g.set(g.slot(e), 0.75, 0.0, e.source % 7 == 0 ? 0.0 : 2.0);
        if (!nh.is_long_range(e.k) && e.source % 7 != 0)
            ++short_valid;
    }
    PartitionConfig cfg;
    cfg.long_range_fraction = 0.0;
    const auto sg = to_signed_graph(g, cfg);
    CHECK(sg.edges.size() == short_valid);
    for (const auto& e : sg.edges) {
        CHECK(e.weight == 0.25);
        CHECK(e.evidence == 2.0);
    }
}

TEST_CASE("oracle aggregation plus mws reproduces separated ground truth")
{
    // Two slabs separated by a one-voxel gap of a third label.
    const Shape3 shape{16, 12, 4};
    LabelVolume gt(shape, 1);
    for (std::size_t i = 0; i < gt.size(); ++i) {
        const auto c = shape.coord(i);
        gt[i] = c.x < 7 ? 1 : (c.x == 7 ? 2 : 3);
    }
    const MaskWindow w{7, 7, 5};
    const std::vector<Scale> scales{{1, 1, 1}, {4, 4, 1}};
    const OracleProvider p(gt, w, scales, false);
    const auto g = aggregate_affinities(p, shape, AffinityNeighborhood::grid_graph_preset(), w, scales);
    CHECK(g.mean_variance() == 0.0);
    for (const auto& seg : {mutex_watershed(g, PartitionConfig{}), gasp_average(g, PartitionConfig{})})
        CHECK(oracle::same_partition(seg, gt));
}

TEST_CASE("remove_small_segments")
{
    const Shape3 shape{10, 10, 4};
    const auto nh = AffinityNeighborhood::grid_graph_preset();
    SignedGridGraph g(shape, nh);
    for (const auto& e : g.edges())
        g.set(g.slot(e), 0.5, 0.0, 1.0);

    SUBCASE("no segment below threshold is a no-op")
    {
        LabelVolume seg(shape, 1);
        for (std::size_t i = 0; i < seg.size(); ++i)
            seg[i] = shape.coord(i).x < 5 ? 4 : 9;
        CHECK(remove_small_segments(seg, g, 200) == seg);
    }
    SUBCASE("a segment of exactly min_size survives")
    {
        LabelVolume seg(shape, 1);
        for (std::size_t i = 0; i < seg.size(); ++i)
            seg[i] = shape.coord(i).x < 5 ? 1 : 2;
        CHECK(remove_small_segments(seg, g, 200) == seg);
        CHECK_THROWS_AS(remove_small_segments(seg, g, 201), Error);
    }
    SUBCASE("an enclosed island is absorbed")
    {
        LabelVolume seg(shape, 1);
        for (std::int64_t x = 4; x < 6; ++x)
            for (std::int64_t y = 4; y < 6; ++y)
                seg.at({x, y, 2}) = 5;
        seg.at({4, 4, 1}) = 5;
        const auto out = remove_small_segments(seg, g, 200);
        CHECK(out == LabelVolume(shape, 1));
    }
    SUBCASE("regrowth follows the strongest affinity and keeps survivors")
    {
        SignedGridGraph line = line_graph(9, {0.9, 0.9, 0.2, 0.8, 0.9, 0.9, 0.9, 0.9});
        // Labels: 1 1 1 | 2 | 3 3 3 3 3 ; segment 2 is removed.
        LabelVolume seg({9, 1, 1}, std::vector<Label>{1, 1, 1, 2, 3, 3, 3, 3, 3});
        const auto out = remove_small_segments(seg, line, 3);
        // Edge (2,3) has a=0.2, edge (3,4) a=0.8: voxel 3 joins segment 3.
        CHECK(out.data() == std::vector<Label>{1, 1, 1, 3, 3, 3, 3, 3, 3});
    }
    SUBCASE("no seeds")
    {
        LabelVolume seg(shape, 0);
        for (std::size_t i = 0; i < seg.size(); ++i)
            seg[i] = i + 1;
        try {
            remove_small_segments(seg, g, 2);
            FAIL("expected NoSeeds");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::NoSeeds);
        }
    }
}

TEST_CASE("remove_small_segments output has no small segments on random input")
{
    std::mt19937_64 rng(3);
    const Shape3 shape{12, 12, 3};
    const auto nh = AffinityNeighborhood::grid_graph_preset();
    for (int trial = 0; trial < 20; ++trial) {
        SignedGridGraph g(shape, nh);
        for (const auto& e : g.edges())
            g.set(g.slot(e), static_cast<double>(rng() % 100) / 100.0, 0.0, (rng() % 5) ? 1.0 : 0.0);
        const auto seg = generate_labels(shape, 2 + rng() % 10, {}, rng());
        const std::size_t min_size = 30 + rng() % 60;
        std::map<Label, std::size_t> before;
        for (Label l : seg.data())
            ++before[l];
        Segmentation out;
        try {
            out = remove_small_segments(seg, g, min_size);
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::NoSeeds);
            continue;
        }
        std::map<Label, std::size_t> after;
        for (Label l : out.data())
            ++after[l];
        for (const auto& [l, n] : after)
            CHECK(n >= min_size);
        for (std::size_t i = 0; i < seg.size(); ++i)
            if (before[seg[i]] >= min_size)
                CHECK(out[i] == seg[i]);
    }
}
