#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "maskaggr/volume.hpp"

namespace maskaggr {

// Fuzzy membership window around a center voxel. Entry n refers to voxel
// center + scale * n; values are stored in (z, y, x) window order.
struct CentralInstanceMask {
    MaskWindow window;
    Scale scale;
    std::vector<float> values;

    float at(Coord3 n) const { return values[window.index(n)]; }
    friend bool operator==(const CentralInstanceMask&, const CentralInstanceMask&) = default;
};

// True when a voxel with in-plane Chebyshev distance <= 1 carries a different label.
bool is_boundary_near(const LabelVolume& labels, Coord3 u);

// Binary ground-truth mask. Out-of-volume entries are 0. With
// `empty_near_boundary`, boundary-near centers get the single-pixel mask.
CentralInstanceMask gt_mask(const LabelVolume& labels, Coord3 center, MaskWindow window, Scale scale,
                            bool empty_near_boundary);

// Source of central instance masks for any (center, scale) request.
// Implementations are immutable and deterministic.
class MaskProvider {
public:
    virtual ~MaskProvider() = default;

    virtual Shape3 shape() const = 0;
    virtual MaskWindow window() const = 0;
    virtual std::vector<Scale> supported_scales() const = 0;

    // Writes window().size() values; the request has already been validated.
    virtual void fill(Coord3 center, Scale scale, std::span<float> out) const = 0;

    bool supports(Scale scale) const;
    // Throws OutOfBounds / UnsupportedScale for bad requests.
    void check_request(Coord3 center, Scale scale) const;
    CentralInstanceMask mask(Coord3 center, Scale scale) const;
};

using ProviderPtr = std::shared_ptr<const MaskProvider>;

class OracleProvider final : public MaskProvider {
public:
    OracleProvider(LabelVolume labels, MaskWindow window, std::vector<Scale> scales, bool empty_near_boundary);

    Shape3 shape() const override { return labels_.shape(); }
    MaskWindow window() const override { return window_; }
    std::vector<Scale> supported_scales() const override { return scales_; }
    void fill(Coord3 center, Scale scale, std::span<float> out) const override;

private:
    LabelVolume labels_;
    MaskWindow window_;
    std::vector<Scale> scales_;
    bool empty_near_boundary_;
};

struct NoiseConfig {
    // Standard deviation of additive logit noise.
    double flip_sigma = 0.0;
    // Box radius (in window entries) of the averaging that correlates noise.
    int smoothing_radius = 0;
    std::uint64_t seed = 0;
};

inline constexpr double kLogitEpsilon = 1e-4;

class NoisyProvider final : public MaskProvider {
public:
    NoisyProvider(ProviderPtr base, NoiseConfig cfg);

    Shape3 shape() const override { return base_->shape(); }
    MaskWindow window() const override { return base_->window(); }
    std::vector<Scale> supported_scales() const override { return base_->supported_scales(); }
    void fill(Coord3 center, Scale scale, std::span<float> out) const override;

    // Unit-variance noise sample for one window entry of one request.
    static double gaussian(std::uint64_t seed, Coord3 center, Scale scale, Coord3 n);

private:
    ProviderPtr base_;
    NoiseConfig cfg_;
};

ProviderPtr perturb(ProviderPtr base, NoiseConfig cfg);

// All masks of one scale for every voxel of a volume, laid out as
// [Z, Y, X, D] with D = window.size().
class MaskField {
public:
    MaskField() = default;
    MaskField(Shape3 shape, MaskWindow window, Scale scale);
    MaskField(Shape3 shape, MaskWindow window, Scale scale, std::vector<float> values);

    Shape3 shape() const { return shape_; }
    MaskWindow window() const { return window_; }
    Scale scale() const { return scale_; }
    const std::vector<float>& values() const { return values_; }

    std::span<const float> mask(std::size_t voxel) const
    {
        return {values_.data() + voxel * window_.size(), window_.size()};
    }
    std::span<float> mask(std::size_t voxel) { return {values_.data() + voxel * window_.size(), window_.size()}; }

    friend bool operator==(const MaskField&, const MaskField&) = default;

private:
    Shape3 shape_{};
    MaskWindow window_{};
    Scale scale_{};
    std::vector<float> values_;
};

// Evaluates the provider at every voxel for one scale.
MaskField materialize(const MaskProvider& provider, Scale scale, unsigned threads = 1);

void write_mask_field(const MaskField& field, const std::filesystem::path& base);
// Rejects D/window mismatches and values outside [0, 1].
MaskField read_mask_field(const std::filesystem::path& base);

// Provider backed by precomputed mask fields, one per scale.
class FieldProvider final : public MaskProvider {
public:
    explicit FieldProvider(std::vector<MaskField> fields);

    Shape3 shape() const override { return fields_.front().shape(); }
    MaskWindow window() const override { return fields_.front().window(); }
    std::vector<Scale> supported_scales() const override;
    void fill(Coord3 center, Scale scale, std::span<float> out) const override;

private:
    std::vector<MaskField> fields_;
};

ProviderPtr file_provider(const std::vector<std::filesystem::path>& mask_field_paths);

}  // namespace maskaggr
