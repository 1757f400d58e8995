#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "maskaggr/masks.hpp"

namespace maskaggr {

// Linear latent codec over flattened masks: a mean vector plus Q orthonormal
// basis rows spanning the leading principal subspace of a mask sample.
class LinearMaskCodec {
public:
    LinearMaskCodec() = default;
    LinearMaskCodec(MaskWindow window, std::vector<double> mean, std::vector<double> basis,
                    std::vector<double> eigenvalues = {});

    MaskWindow window() const { return window_; }
    std::size_t dim() const { return window_.size(); }
    std::size_t latent_dim() const { return q_; }
    const std::vector<double>& mean() const { return mean_; }
    // Row-major Q x D.
    const std::vector<double>& basis() const { return basis_; }
    std::span<const double> basis_row(std::size_t k) const { return {basis_.data() + k * dim(), dim()}; }
    // Sample variance captured by each basis row (Rayleigh quotient at fit time).
    const std::vector<double>& eigenvalues() const { return eigenvalues_; }

    std::vector<double> encode(std::span<const float> flat_mask) const;
    std::vector<double> encode(const CentralInstanceMask& mask) const;
    std::vector<float> decode_flat(std::span<const double> latent) const;
    CentralInstanceMask decode(std::span<const double> latent, Scale scale = {}) const;

private:
    MaskWindow window_{};
    std::size_t q_ = 0;
    std::vector<double> mean_;
    std::vector<double> basis_;
    std::vector<double> eigenvalues_;
};

struct CodecFitOptions {
    int max_iterations = 1000;
    double tolerance = 1e-8;
    std::uint64_t seed = 0;
};

// Top-Q principal subspace via power iteration with deflation.
LinearMaskCodec fit_codec(std::span<const CentralInstanceMask> masks, std::size_t q, CodecFitOptions options = {});

// Population covariance of flattened masks, row-major D x D.
std::vector<double> sample_covariance(std::span<const CentralInstanceMask> masks, std::vector<double>* mean_out);

void write_codec(const LinearMaskCodec& codec, const std::filesystem::path& base);
LinearMaskCodec read_codec(const std::filesystem::path& base);

// Round-trips every mask of `base` through the codec.
class CodecProvider final : public MaskProvider {
public:
    CodecProvider(ProviderPtr base, LinearMaskCodec codec);

    Shape3 shape() const override { return base_->shape(); }
    MaskWindow window() const override { return base_->window(); }
    std::vector<Scale> supported_scales() const override { return base_->supported_scales(); }
    void fill(Coord3 center, Scale scale, std::span<float> out) const override;

private:
    ProviderPtr base_;
    LinearMaskCodec codec_;
};

ProviderPtr codec_provider(ProviderPtr base, LinearMaskCodec codec);

}  // namespace maskaggr
