#include "maskaggr/volume.hpp"

#include <algorithm>
#include <sstream>

#include "maskaggr/error.hpp"

namespace maskaggr {

std::string to_string(Coord3 c)
{
    std::ostringstream os;
    os << "(" << c.x << "," << c.y << "," << c.z << ")";
    return os.str();
}

std::string to_string(Shape3 s)
{
    std::ostringstream os;
    os << s.x << "x" << s.y << "x" << s.z;
    return os.str();
}

void validate_shape(Shape3 s)
{
    if (s.x <= 0 || s.y <= 0 || s.z <= 0)
        throw Error(ErrorKind::InvalidArgument, "shape extents must be positive, got " + to_string(s));
}

LabelVolume::LabelVolume(Shape3 shape, Label fill, Resolution resolution)
    : shape_(shape), resolution_(resolution)
{
    validate_shape(shape);
    data_.assign(shape.voxel_count(), fill);
}

LabelVolume::LabelVolume(Shape3 shape, std::vector<Label> data, Resolution resolution)
    : shape_(shape), data_(std::move(data)), resolution_(resolution)
{
    validate_shape(shape);
    if (data_.size() != shape.voxel_count())
        throw Error(ErrorKind::ShapeMismatch, "label data length does not match shape " + to_string(shape));
}

std::string to_string(MaskWindow w)
{
    std::ostringstream os;
    os << w.kx << "x" << w.ky << "x" << w.kz;
    return os.str();
}

void validate_window(MaskWindow w)
{
    auto odd_positive = [](std::int64_t k) { return k > 0 && k % 2 == 1; };
    if (!odd_positive(w.kx) || !odd_positive(w.ky) || !odd_positive(w.kz))
        throw Error(ErrorKind::InvalidArgument, "mask window extents must be odd and positive, got " + to_string(w));
}

std::string to_string(Scale s)
{
    std::ostringstream os;
    os << "(" << s.x << "," << s.y << "," << s.z << ")";
    return os.str();
}

void validate_scale(Scale s)
{
    if (s.x < 1 || s.y < 1 || s.z < 1)
        throw Error(ErrorKind::InvalidArgument, "scale strides must be >= 1, got " + to_string(s));
}

std::vector<Scale> scale_presets()
{
    return {{1, 1, 1}, {4, 4, 1}, {8, 8, 1}};
}

AffinityNeighborhood::AffinityNeighborhood(std::vector<Coord3> offsets, std::size_t direct_count)
    : offsets_(std::move(offsets)), direct_count_(direct_count)
{
    if (direct_count_ > offsets_.size())
        throw Error(ErrorKind::InvalidArgument, "direct_count exceeds number of offsets");
    for (std::size_t i = 0; i < offsets_.size(); ++i) {
        if (offsets_[i] == Coord3{})
            throw Error(ErrorKind::InvalidArgument, "neighborhood offsets must be nonzero");
        for (std::size_t j = 0; j < i; ++j)
            if (offsets_[i] == offsets_[j])
                throw Error(ErrorKind::InvalidArgument, "duplicate neighborhood offset " + to_string(offsets_[i]));
    }
}

AffinityNeighborhood AffinityNeighborhood::grid_graph_preset()
{
    return AffinityNeighborhood({{0, 0, -1},
                                 {-1, 0, 0},
                                 {0, -1, 0},
                                 {-4, 0, 0},
                                 {0, -4, 0},
                                 {-4, -4, 0},
                                 {4, -4, 0},
                                 {-4, 0, -1},
                                 {0, -4, -1},
                                 {-4, -4, -1},
                                 {4, -4, -1},
                                 {0, 0, -2},
                                 {-8, -8, 0},
                                 {8, -8, 0},
                                 {-12, 0, 0},
                                 {0, -12, 0}},
                                3);
}

AffinityNeighborhood AffinityNeighborhood::compact_preset()
{
    return AffinityNeighborhood({{0, 0, -1},
                                 {-1, 0, 0},
                                 {0, -1, 0},
                                 {-3, 0, 0},
                                 {0, -3, 0},
                                 {-3, -3, 0},
                                 {3, -3, 0},
                                 {-3, 0, -1},
                                 {0, -3, -1},
                                 {0, 0, -2}},
                                3);
}

AffinityNeighborhood AffinityNeighborhood::from_name(const std::string& name)
{
    if (name == "grid16" || name == "default")
        return grid_graph_preset();
    if (name == "compact")
        return compact_preset();
    throw Error(ErrorKind::Config, "unknown neighborhood preset '" + name + "'");
}

}  // namespace maskaggr
