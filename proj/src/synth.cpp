#include "maskaggr/synth.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <random>
#include <vector>

#include "maskaggr/error.hpp"
#include "maskaggr/parallel.hpp"

namespace maskaggr {

namespace {

constexpr Coord3 kSix[6] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};

// Component id per voxel under 6-connectivity within equal labels.
std::vector<std::size_t> label_components(const LabelVolume& labels, std::size_t* count)
{
    const Shape3 s = labels.shape();
    constexpr std::size_t unset = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> comp(labels.size(), unset);
    std::size_t next = 0;
    std::deque<std::size_t> queue;
    for (std::size_t start = 0; start < labels.size(); ++start) {
        if (comp[start] != unset)
            continue;
        comp[start] = next;
        queue.push_back(start);
        while (!queue.empty()) {
            const std::size_t p = queue.front();
            queue.pop_front();
            const Coord3 c = s.coord(p);
            for (const auto& d : kSix) {
                const Coord3 q = c + d;
                if (!s.contains(q))
                    continue;
                const std::size_t qi = s.index(q);
                if (comp[qi] == unset && labels[qi] == labels[p]) {
                    comp[qi] = next;
                    queue.push_back(qi);
                }
            }
        }
        ++next;
    }
    if (count)
        *count = next;
    return comp;
}

}  // namespace

LabelVolume generate_labels(Shape3 shape, std::size_t num_instances, Anisotropy anisotropy, std::uint64_t seed,
                            unsigned threads)
{
    validate_shape(shape);
    const std::size_t n_vox = shape.voxel_count();
    if (num_instances < 1)
        throw Error(ErrorKind::InvalidArgument, "need at least one instance");
    if (num_instances > n_vox)
        throw Error(ErrorKind::InvalidArgument, "more instances than voxels");

    // Distinct seed voxels by partial Fisher-Yates over raw engine output.
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> pool(n_vox);
    for (std::size_t i = 0; i < n_vox; ++i)
        pool[i] = i;
    std::vector<Coord3> seeds(num_instances);
    for (std::size_t i = 0; i < num_instances; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (n_vox - i));
        std::swap(pool[i], pool[j]);
        seeds[i] = shape.coord(pool[i]);
    }

    LabelVolume labels(shape, 0);
    parallel_for(n_vox, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t v = begin; v < end; ++v) {
            const Coord3 c = shape.coord(v);
            double best = std::numeric_limits<double>::infinity();
            std::size_t best_i = 0;
            for (std::size_t i = 0; i < seeds.size(); ++i) {
                const double dx = anisotropy.x * static_cast<double>(c.x - seeds[i].x);
                const double dy = anisotropy.y * static_cast<double>(c.y - seeds[i].y);
                const double dz = anisotropy.z * static_cast<double>(c.z - seeds[i].z);
                const double d = dx * dx + dy * dy + dz * dz;
                if (d < best) {
                    best = d;
                    best_i = i;
                }
            }
            labels[v] = best_i + 1;
        }
    });

    // Discrete Voronoi cells can shed thin fragments; hand those to the
    // neighboring region reached first by a breadth-first sweep.
    const std::vector<std::size_t> comp = label_components(labels, nullptr);
    std::vector<std::size_t> seed_comp(num_instances);
    for (std::size_t i = 0; i < num_instances; ++i)
        seed_comp[i] = comp[shape.index(seeds[i])];
    std::deque<std::size_t> queue;
    bool any_fragment = false;
    for (std::size_t v = 0; v < n_vox; ++v) {
        if (comp[v] != seed_comp[labels[v] - 1]) {
            labels[v] = 0;
            any_fragment = true;
        }
    }
    if (any_fragment) {
        for (std::size_t v = 0; v < n_vox; ++v)
            if (labels[v] != 0)
                queue.push_back(v);
        while (!queue.empty()) {
            const std::size_t p = queue.front();
            queue.pop_front();
            const Coord3 c = shape.coord(p);
            for (const auto& d : kSix) {
                const Coord3 q = c + d;
                if (!shape.contains(q))
                    continue;
                const std::size_t qi = shape.index(q);
                if (labels[qi] == 0) {
                    labels[qi] = labels[p];
                    queue.push_back(qi);
                }
            }
        }
    }
    return labels;
}

std::vector<std::size_t> component_counts(const LabelVolume& labels)
{
    const std::vector<std::size_t> comp = label_components(labels, nullptr);
    Label max_label = 0;
    for (Label l : labels.data())
        max_label = std::max(max_label, l);
    std::vector<std::size_t> counts(max_label + 1, 0);
    std::vector<std::uint8_t> counted;
    std::size_t n_comp = 0;
    for (std::size_t c : comp)
        n_comp = std::max(n_comp, c + 1);
    counted.assign(n_comp, 0);
    for (std::size_t v = 0; v < labels.size(); ++v)
        if (!counted[comp[v]]) {
            counted[comp[v]] = 1;
            ++counts[labels[v]];
        }
    return counts;
}

}  // namespace maskaggr
