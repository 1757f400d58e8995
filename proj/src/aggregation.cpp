#include "maskaggr/aggregation.hpp"

#include <algorithm>

#include "maskaggr/error.hpp"
#include "maskaggr/parallel.hpp"

namespace maskaggr {

namespace {

struct AxisRange {
    std::int64_t lo;
    std::int64_t hi;
};

// Window positions n of u such that n + q is also inside the window.
AxisRange shared_range(std::int64_t half, std::int64_t q)
{
    return {std::max(-half, -half - q), std::min(half, half - q)};
}

void check_inputs(const MaskProvider& provider, Shape3 shape, MaskWindow window)
{
    validate_shape(shape);
    validate_window(window);
    if (provider.shape() != shape)
        throw Error(ErrorKind::ShapeMismatch, "provider shape " + to_string(provider.shape()) +
                                                  " differs from graph shape " + to_string(shape));
    if (provider.window() != window)
        throw Error(ErrorKind::WindowMismatch, "provider window " + to_string(provider.window()) +
                                                   " differs from requested window " + to_string(window));
}

}  // namespace

EdgeStats aggregate_pair(const std::vector<MaskField>& fields, Coord3 u, Coord3 v)
{
    WeightedWelford acc;
    const Coord3 d = v - u;
    for (const auto& field : fields) {
        const Scale s = field.scale();
        if (!s.divides(d))
            continue;
        const Shape3 shape = field.shape();
        const MaskWindow w = field.window();
        const Coord3 q = s.quotient(d);
        const AxisRange rx = shared_range(w.hx(), q.x);
        const AxisRange ry = shared_range(w.hy(), q.y);
        const AxisRange rz = shared_range(w.hz(), q.z);
        // Descending n gives ascending centers c = u - s * n.
        for (std::int64_t nz = rz.hi; nz >= rz.lo; --nz)
            for (std::int64_t ny = ry.hi; ny >= ry.lo; --ny)
                for (std::int64_t nx = rx.hi; nx >= rx.lo; --nx) {
                    const Coord3 n{nx, ny, nz};
                    const Coord3 c = u - s.apply(n);
                    if (!shape.contains(c))
                        continue;
                    const auto m = field.mask(shape.index(c));
                    const double mu = m[w.index(n)];
                    const double mv = m[w.index(n + q)];
                    acc.add(std::min(mu, mv), std::max(mu, mv));
                }
    }
    return {acc.mean(), acc.variance(), acc.weight_sum()};
}

SignedGridGraph aggregate_fields(const std::vector<MaskField>& fields, const AffinityNeighborhood& neighborhood,
                                 unsigned threads)
{
    if (fields.empty())
        throw Error(ErrorKind::InvalidArgument, "aggregation needs at least one scale");
    const Shape3 shape = fields.front().shape();
    for (const auto& f : fields) {
        if (f.shape() != shape)
            throw Error(ErrorKind::ShapeMismatch, "mask fields disagree on shape");
        if (f.window() != fields.front().window())
            throw Error(ErrorKind::WindowMismatch, "mask fields disagree on window");
    }
    SignedGridGraph graph(shape, neighborhood);
    const std::size_t k_count = neighborhood.size();
    parallel_for(shape.voxel_count(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t voxel = begin; voxel < end; ++voxel) {
            const Coord3 u = shape.coord(voxel);
            for (std::size_t k = 0; k < k_count; ++k) {
                const Coord3 v = u + neighborhood[k];
                if (!shape.contains(v))
                    continue;
                const EdgeStats st = aggregate_pair(fields, u, v);
                graph.set(graph.slot(voxel, k), st.mean, st.variance, st.evidence);
            }
        }
    });
    return graph;
}

SignedGridGraph aggregate_affinities(const MaskProvider& provider, Shape3 shape,
                                     const AffinityNeighborhood& neighborhood, MaskWindow window,
                                     const std::vector<Scale>& scales, unsigned threads)
{
    check_inputs(provider, shape, window);
    std::vector<MaskField> fields;
    fields.reserve(scales.size());
    for (Scale s : scales)
        fields.push_back(materialize(provider, s, threads));
    return aggregate_fields(fields, neighborhood, threads);
}

SignedGridGraph baseline_affinities(const MaskProvider& provider, Shape3 shape,
                                    const AffinityNeighborhood& neighborhood, MaskWindow window, unsigned threads)
{
    check_inputs(provider, shape, window);
    for (const auto& o : neighborhood.offsets())
        if (!window.contains(o))
            throw Error(ErrorKind::InvalidArgument,
                        "offset " + to_string(o) + " does not fit window " + to_string(window));
    const Scale unit{1, 1, 1};
    if (!provider.supports(unit))
        throw Error(ErrorKind::UnsupportedScale, "baseline readout needs scale (1,1,1)");

    SignedGridGraph graph(shape, neighborhood);
    parallel_for(shape.voxel_count(), threads, [&](std::size_t begin, std::size_t end) {
        std::vector<float> mask(window.size());
        for (std::size_t voxel = begin; voxel < end; ++voxel) {
            const Coord3 u = shape.coord(voxel);
            provider.fill(u, unit, mask);
            for (std::size_t k = 0; k < neighborhood.size(); ++k) {
                if (!shape.contains(u + neighborhood[k]))
                    continue;
                graph.set(graph.slot(voxel, k), mask[window.index(neighborhood[k])], 0.0, 1.0);
            }
        }
    });
    return graph;
}

}  // namespace maskaggr
