#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace maskaggr {

// Signed voxel index; z is the anisotropic axis.
struct Coord3 {
    std::int64_t x = 0;
    std::int64_t y = 0;
    std::int64_t z = 0;

    friend Coord3 operator+(Coord3 a, Coord3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Coord3 operator-(Coord3 a, Coord3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Coord3 operator-(Coord3 a) { return {-a.x, -a.y, -a.z}; }
    friend bool operator==(Coord3 a, Coord3 b) = default;
};

std::string to_string(Coord3 c);

// Volume extents (X, Y, Z). Row-major with x fastest.
struct Shape3 {
    std::int64_t x = 1;
    std::int64_t y = 1;
    std::int64_t z = 1;

    friend bool operator==(Shape3 a, Shape3 b) = default;

    std::size_t voxel_count() const { return static_cast<std::size_t>(x * y * z); }

    bool contains(Coord3 c) const
    {
        return c.x >= 0 && c.y >= 0 && c.z >= 0 && c.x < x && c.y < y && c.z < z;
    }

    std::size_t index(Coord3 c) const
    {
        return static_cast<std::size_t>((c.z * y + c.y) * x + c.x);
    }

    Coord3 coord(std::size_t index) const
    {
        const auto i = static_cast<std::int64_t>(index);
        return {i % x, (i / x) % y, i / (x * y)};
    }
};

std::string to_string(Shape3 s);

// Throws InvalidArgument unless every extent is positive.
void validate_shape(Shape3 s);

// Physical voxel size, informational only.
struct Resolution {
    double x = 1.0;
    double y = 1.0;
    double z = 1.0;

    friend bool operator==(const Resolution&, const Resolution&) = default;
};

using Label = std::uint64_t;

// Dense 3D instance labeling. Id 0 means "unassigned" in outputs.
class LabelVolume {
public:
    LabelVolume() = default;
    explicit LabelVolume(Shape3 shape, Label fill = 0, Resolution resolution = {});
    LabelVolume(Shape3 shape, std::vector<Label> data, Resolution resolution = {});

    Shape3 shape() const { return shape_; }
    const Resolution& resolution() const { return resolution_; }
    void set_resolution(Resolution r) { resolution_ = r; }

    std::size_t size() const { return data_.size(); }
    const std::vector<Label>& data() const { return data_; }
    std::vector<Label>& data() { return data_; }

    Label operator[](std::size_t i) const { return data_[i]; }
    Label& operator[](std::size_t i) { return data_[i]; }
    Label at(Coord3 c) const { return data_[shape_.index(c)]; }
    Label& at(Coord3 c) { return data_[shape_.index(c)]; }

    friend bool operator==(const LabelVolume&, const LabelVolume&) = default;

private:
    Shape3 shape_{};
    std::vector<Label> data_;
    Resolution resolution_{};
};

// Odd window extents (K_x, K_y, K_z) of a central instance mask.
struct MaskWindow {
    std::int64_t kx = 7;
    std::int64_t ky = 7;
    std::int64_t kz = 5;

    friend bool operator==(MaskWindow, MaskWindow) = default;

    std::int64_t hx() const { return (kx - 1) / 2; }
    std::int64_t hy() const { return (ky - 1) / 2; }
    std::int64_t hz() const { return (kz - 1) / 2; }

    std::size_t size() const { return static_cast<std::size_t>(kx * ky * kz); }

    bool contains(Coord3 n) const
    {
        return n.x >= -hx() && n.x <= hx() && n.y >= -hy() && n.y <= hy() && n.z >= -hz() &&
               n.z <= hz();
    }

    // Flat (z, y, x) window order, x fastest.
    std::size_t index(Coord3 n) const
    {
        return static_cast<std::size_t>(((n.z + hz()) * ky + (n.y + hy())) * kx + (n.x + hx()));
    }

    Coord3 offset(std::size_t index) const
    {
        const auto i = static_cast<std::int64_t>(index);
        return {i % kx - hx(), (i / kx) % ky - hy(), i / (kx * ky) - hz()};
    }

    std::size_t center_index() const { return index({0, 0, 0}); }
};

std::string to_string(MaskWindow w);
void validate_window(MaskWindow w);

// Per-axis sampling stride of a mask.
struct Scale {
    std::int64_t x = 1;
    std::int64_t y = 1;
    std::int64_t z = 1;

    friend bool operator==(Scale, Scale) = default;

    Coord3 apply(Coord3 n) const { return {n.x * x, n.y * y, n.z * z}; }

    // True when d is componentwise divisible by the stride.
    bool divides(Coord3 d) const { return d.x % x == 0 && d.y % y == 0 && d.z % z == 0; }

    Coord3 quotient(Coord3 d) const { return {d.x / x, d.y / y, d.z / z}; }
};

std::string to_string(Scale s);
void validate_scale(Scale s);

// The three resolutions of the multi-scale mask heads.
std::vector<Scale> scale_presets();

// Ordered offset list; the first `direct_count` offsets are short-range.
class AffinityNeighborhood {
public:
    AffinityNeighborhood() = default;
    AffinityNeighborhood(std::vector<Coord3> offsets, std::size_t direct_count);

    const std::vector<Coord3>& offsets() const { return offsets_; }
    std::size_t size() const { return offsets_.size(); }
    std::size_t direct_count() const { return direct_count_; }
    bool is_long_range(std::size_t k) const { return k >= direct_count_; }
    Coord3 operator[](std::size_t k) const { return offsets_[k]; }

    friend bool operator==(const AffinityNeighborhood&, const AffinityNeighborhood&) = default;

    // 16-neighbor grid-graph structure (offsets given as (dx, dy, dz)).
    static AffinityNeighborhood grid_graph_preset();
    // Table-like structure shrunk so every offset fits a 7x7x5 window.
    static AffinityNeighborhood compact_preset();
    static AffinityNeighborhood from_name(const std::string& name);

private:
    std::vector<Coord3> offsets_;
    std::size_t direct_count_ = 0;
};

}  // namespace maskaggr
