#include "maskaggr/codec.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "maskaggr/error.hpp"
#include "maskaggr/io.hpp"

namespace maskaggr {

namespace {

double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void symmetric_matvec(const std::vector<double>& c, std::size_t d, std::span<const double> v, std::span<double> out)
{
    for (std::size_t i = 0; i < d; ++i)
        out[i] = dot({c.data() + i * d, d}, v);
}

// Removes the components along the first `rows` basis rows.
void project_out(std::span<double> v, const std::vector<double>& basis, std::size_t rows, std::size_t d)
{
    for (std::size_t r = 0; r < rows; ++r) {
        std::span<const double> b(basis.data() + r * d, d);
        const double c = dot(v, b);
        for (std::size_t i = 0; i < d; ++i)
            v[i] -= c * b[i];
    }
}

std::vector<double> random_unit(std::mt19937_64& rng, const std::vector<double>& basis, std::size_t rows,
                                std::size_t d)
{
    std::vector<double> v(d);
    for (int attempt = 0; attempt < 64; ++attempt) {
        // Uniform in [-1, 1) from raw engine bits keeps the stream portable.
        for (auto& x : v)
            x = static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0;
        project_out(v, basis, rows, d);
        project_out(v, basis, rows, d);
        const double n = norm(v);
        if (n > 1e-6) {
            for (auto& x : v)
                x /= n;
            return v;
        }
    }
    throw Error(ErrorKind::InvalidArgument, "cannot complete orthonormal basis");
}

}  // namespace

LinearMaskCodec::LinearMaskCodec(MaskWindow window, std::vector<double> mean, std::vector<double> basis,
                                 std::vector<double> eigenvalues)
    : window_(window), mean_(std::move(mean)), basis_(std::move(basis)), eigenvalues_(std::move(eigenvalues))
{
    validate_window(window_);
    const std::size_t d = window_.size();
    if (mean_.size() != d || basis_.size() % d != 0)
        throw Error(ErrorKind::WindowMismatch, "codec vectors do not match window " + to_string(window_));
    q_ = basis_.size() / d;
    if (q_ > d)
        throw Error(ErrorKind::InvalidArgument, "codec latent dimension exceeds mask dimension");
    if (!eigenvalues_.empty() && eigenvalues_.size() != q_)
        throw Error(ErrorKind::InvalidArgument, "codec eigenvalue count does not match latent dimension");
}

std::vector<double> LinearMaskCodec::encode(std::span<const float> flat_mask) const
{
    const std::size_t d = dim();
    if (flat_mask.size() != d)
        throw Error(ErrorKind::WindowMismatch, "mask length does not match codec dimension");
    std::vector<double> centered(d);
    for (std::size_t i = 0; i < d; ++i)
        centered[i] = static_cast<double>(flat_mask[i]) - mean_[i];
    std::vector<double> z(q_);
    for (std::size_t k = 0; k < q_; ++k)
        z[k] = dot(basis_row(k), centered);
    return z;
}

std::vector<double> LinearMaskCodec::encode(const CentralInstanceMask& mask) const
{
    if (mask.window != window_)
        throw Error(ErrorKind::WindowMismatch, "mask window does not match codec window");
    return encode(std::span<const float>(mask.values));
}

std::vector<float> LinearMaskCodec::decode_flat(std::span<const double> latent) const
{
    if (latent.size() != q_)
        throw Error(ErrorKind::InvalidArgument, "latent vector has wrong dimension");
    const std::size_t d = dim();
    std::vector<double> x(mean_);
    for (std::size_t k = 0; k < q_; ++k) {
        const auto row = basis_row(k);
        for (std::size_t i = 0; i < d; ++i)
            x[i] += latent[k] * row[i];
    }
    std::vector<float> out(d);
    for (std::size_t i = 0; i < d; ++i)
        out[i] = static_cast<float>(std::clamp(x[i], 0.0, 1.0));
    return out;
}

CentralInstanceMask LinearMaskCodec::decode(std::span<const double> latent, Scale scale) const
{
    return {window_, scale, decode_flat(latent)};
}

std::vector<double> sample_covariance(std::span<const CentralInstanceMask> masks, std::vector<double>* mean_out)
{
    if (masks.empty())
        throw Error(ErrorKind::InvalidArgument, "empty mask sample");
    const MaskWindow window = masks.front().window;
    const std::size_t d = window.size();
    std::vector<double> mean(d, 0.0);
    for (const auto& m : masks) {
        if (m.window != window || m.values.size() != d)
            throw Error(ErrorKind::WindowMismatch, "mask sample mixes windows");
        for (std::size_t i = 0; i < d; ++i)
            mean[i] += m.values[i];
    }
    const double n = static_cast<double>(masks.size());
    for (auto& x : mean)
        x /= n;

    std::vector<double> cov(d * d, 0.0);
    std::vector<double> c(d);
    for (const auto& m : masks) {
        for (std::size_t i = 0; i < d; ++i)
            c[i] = m.values[i] - mean[i];
        for (std::size_t i = 0; i < d; ++i) {
            if (c[i] == 0.0)
                continue;
            double* row = cov.data() + i * d;
            for (std::size_t j = i; j < d; ++j)
                row[j] += c[i] * c[j];
        }
    }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            cov[i * d + j] /= n;
            cov[j * d + i] = cov[i * d + j];
        }
    if (mean_out)
        *mean_out = std::move(mean);
    return cov;
}

LinearMaskCodec fit_codec(std::span<const CentralInstanceMask> masks, std::size_t q, CodecFitOptions options)
{
    if (masks.empty())
        throw Error(ErrorKind::InvalidArgument, "cannot fit codec on an empty sample");
    const MaskWindow window = masks.front().window;
    const std::size_t d = window.size();
    if (q > d)
        throw Error(ErrorKind::InvalidArgument, "Q exceeds mask dimension");
    if (q > masks.size())
        throw Error(ErrorKind::InvalidArgument, "Q exceeds sample size");

    std::vector<double> mean;
    const std::vector<double> cov = sample_covariance(masks, &mean);
    double trace = 0.0;
    for (std::size_t i = 0; i < d; ++i)
        trace += cov[i * d + i];
    const double null_threshold = 1e-12 * std::max(1.0, trace);

    std::mt19937_64 rng(options.seed);
    std::vector<double> basis;
    basis.reserve(q * d);
    std::vector<double> eigenvalues;
    std::vector<double> w(d);
    for (std::size_t k = 0; k < q; ++k) {
        std::vector<double> v = random_unit(rng, basis, k, d);
        double previous = 0.0;
        for (int it = 0; it < options.max_iterations; ++it) {
            symmetric_matvec(cov, d, v, w);
            project_out(w, basis, k, d);
            const double lambda = dot(v, w);
            const double n = norm(w);
            // Remaining spectrum is numerically zero; any orthonormal completion works.
            if (n < null_threshold)
                break;
            for (std::size_t i = 0; i < d; ++i)
                v[i] = w[i] / n;
            if (it > 0 && std::abs(lambda - previous) < options.tolerance)
                break;
            previous = lambda;
        }
        project_out(v, basis, k, d);
        project_out(v, basis, k, d);
        const double n = norm(v);
        if (n < 1e-6)
            v = random_unit(rng, basis, k, d);
        else
            for (auto& x : v)
                x /= n;
        symmetric_matvec(cov, d, v, w);
        eigenvalues.push_back(std::max(0.0, dot(v, w)));
        basis.insert(basis.end(), v.begin(), v.end());
    }
    return LinearMaskCodec(window, std::move(mean), std::move(basis), std::move(eigenvalues));
}

void write_codec(const LinearMaskCodec& codec, const std::filesystem::path& base)
{
    const MaskWindow w = codec.window();
    const std::size_t d = codec.dim();
    const std::size_t q = codec.latent_dim();
    std::vector<float> payload;
    payload.reserve((q + 1) * d);
    for (double x : codec.mean())
        payload.push_back(static_cast<float>(x));
    for (double x : codec.basis())
        payload.push_back(static_cast<float>(x));
    nlohmann::json extra;
    extra["window"] = {w.kz, w.ky, w.kx};
    extra["Q"] = q;
    extra["D"] = d;
    if (!codec.eigenvalues().empty())
        extra["eigenvalues"] = codec.eigenvalues();
    io::write_f32(base, {static_cast<std::int64_t>(q + 1), static_cast<std::int64_t>(d)}, payload, extra);
}

LinearMaskCodec read_codec(const std::filesystem::path& base)
{
    io::ArrayHeader header;
    const std::vector<float> payload = io::read_f32(base, &header);
    std::vector<std::int64_t> win;
    std::size_t q = 0;
    std::size_t d = 0;
    std::vector<double> eigenvalues;
    try {
        win = header.extra.at("window").get<std::vector<std::int64_t>>();
        q = header.extra.at("Q").get<std::size_t>();
        d = header.extra.at("D").get<std::size_t>();
        if (header.extra.contains("eigenvalues"))
            eigenvalues = header.extra.at("eigenvalues").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::MalformedHeader, std::string("codec header: ") + e.what());
    }
    if (win.size() != 3)
        throw Error(ErrorKind::MalformedHeader, "codec window needs 3 entries");
    const MaskWindow window{win[2], win[1], win[0]};
    if (window.size() != d || payload.size() != (q + 1) * d)
        throw Error(ErrorKind::LengthMismatch, "codec payload does not match Q and D");
    std::vector<double> mean(payload.begin(), payload.begin() + static_cast<std::ptrdiff_t>(d));
    std::vector<double> basis(payload.begin() + static_cast<std::ptrdiff_t>(d), payload.end());
    return LinearMaskCodec(window, std::move(mean), std::move(basis), std::move(eigenvalues));
}

CodecProvider::CodecProvider(ProviderPtr base, LinearMaskCodec codec) : base_(std::move(base)), codec_(std::move(codec))
{
    if (!base_)
        throw Error(ErrorKind::InvalidArgument, "codec provider needs a base provider");
    if (base_->window() != codec_.window())
        throw Error(ErrorKind::WindowMismatch, "codec window " + to_string(codec_.window()) +
                                                   " does not match provider window " + to_string(base_->window()));
}

void CodecProvider::fill(Coord3 center, Scale scale, std::span<float> out) const
{
    base_->fill(center, scale, out);
    const auto decoded = codec_.decode_flat(codec_.encode(std::span<const float>(out.data(), out.size())));
    std::copy(decoded.begin(), decoded.end(), out.begin());
}

ProviderPtr codec_provider(ProviderPtr base, LinearMaskCodec codec)
{
    return std::make_shared<CodecProvider>(std::move(base), std::move(codec));
}

}  // namespace maskaggr
