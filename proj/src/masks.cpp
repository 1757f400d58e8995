#include "maskaggr/masks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "maskaggr/error.hpp"
#include "maskaggr/io.hpp"
#include "maskaggr/parallel.hpp"

namespace maskaggr {

bool is_boundary_near(const LabelVolume& labels, Coord3 u)
{
    const Shape3 s = labels.shape();
    const Label own = labels.at(u);
    for (std::int64_t dy = -1; dy <= 1; ++dy)
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
            const Coord3 v{u.x + dx, u.y + dy, u.z};
            if (s.contains(v) && labels.at(v) != own)
                return true;
        }
    return false;
}

CentralInstanceMask gt_mask(const LabelVolume& labels, Coord3 center, MaskWindow window, Scale scale,
                            bool empty_near_boundary)
{
    validate_window(window);
    validate_scale(scale);
    const Shape3 s = labels.shape();
    if (!s.contains(center))
        throw Error(ErrorKind::OutOfBounds, "mask center " + to_string(center) + " outside volume " + to_string(s));

    CentralInstanceMask m{window, scale, std::vector<float>(window.size(), 0.0f)};
    if (empty_near_boundary && is_boundary_near(labels, center)) {
        m.values[window.center_index()] = 1.0f;
        return m;
    }
    const Label own = labels.at(center);
    for (std::size_t i = 0; i < m.values.size(); ++i) {
        const Coord3 p = center + scale.apply(window.offset(i));
        if (s.contains(p) && labels.at(p) == own)
            m.values[i] = 1.0f;
    }
    return m;
}

bool MaskProvider::supports(Scale scale) const
{
    const auto scales = supported_scales();
    return std::find(scales.begin(), scales.end(), scale) != scales.end();
}

void MaskProvider::check_request(Coord3 center, Scale scale) const
{
    if (!shape().contains(center))
        throw Error(ErrorKind::OutOfBounds, "mask center " + to_string(center) + " outside volume");
    if (!supports(scale))
        throw Error(ErrorKind::UnsupportedScale, "scale " + to_string(scale) + " not supported by provider");
}

CentralInstanceMask MaskProvider::mask(Coord3 center, Scale scale) const
{
    check_request(center, scale);
    CentralInstanceMask m{window(), scale, std::vector<float>(window().size())};
    fill(center, scale, m.values);
    return m;
}

OracleProvider::OracleProvider(LabelVolume labels, MaskWindow window, std::vector<Scale> scales,
                               bool empty_near_boundary)
    : labels_(std::move(labels)), window_(window), scales_(std::move(scales)),
      empty_near_boundary_(empty_near_boundary)
{
    validate_window(window_);
    for (auto s : scales_)
        validate_scale(s);
}

void OracleProvider::fill(Coord3 center, Scale scale, std::span<float> out) const
{
    const auto m = gt_mask(labels_, center, window_, scale, empty_near_boundary_);
    std::copy(m.values.begin(), m.values.end(), out.begin());
}

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t h, std::int64_t v)
{
    return splitmix64(h ^ static_cast<std::uint64_t>(v));
}

// Uniform in (0, 1].
double unit_open(std::uint64_t bits)
{
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

double logit(double p) { return std::log(p / (1.0 - p)); }
double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

}  // namespace

NoisyProvider::NoisyProvider(ProviderPtr base, NoiseConfig cfg) : base_(std::move(base)), cfg_(cfg)
{
    if (!base_)
        throw Error(ErrorKind::InvalidArgument, "noisy provider needs a base provider");
    if (!(cfg_.flip_sigma >= 0.0))
        throw Error(ErrorKind::InvalidArgument, "flip_sigma must be >= 0");
    if (cfg_.smoothing_radius < 0)
        throw Error(ErrorKind::InvalidArgument, "smoothing_radius must be >= 0");
}

namespace {

std::uint64_t request_prefix(std::uint64_t seed, Coord3 center, Scale scale)
{
    std::uint64_t h = splitmix64(seed);
    for (std::int64_t v : {center.x, center.y, center.z, scale.x, scale.y, scale.z})
        h = mix(h, v);
    return h;
}

double gaussian_at(std::uint64_t prefix, Coord3 n)
{
    std::uint64_t h = prefix;
    for (std::int64_t v : {n.x, n.y, n.z})
        h = mix(h, v);
    const double u1 = unit_open(h);
    const double u2 = unit_open(splitmix64(h));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

double NoisyProvider::gaussian(std::uint64_t seed, Coord3 center, Scale scale, Coord3 n)
{
    return gaussian_at(request_prefix(seed, center, scale), n);
}

void NoisyProvider::fill(Coord3 center, Scale scale, std::span<float> out) const
{
    base_->fill(center, scale, out);
    if (cfg_.flip_sigma == 0.0)
        return;

    const MaskWindow w = window();
    const std::int64_t r = cfg_.smoothing_radius;
    const double norm = 1.0 / std::sqrt(static_cast<double>((2 * r + 1) * (2 * r + 1) * (2 * r + 1)));

    // Raw samples over the window padded by r on every side.
    const MaskWindow padded{w.kx + 2 * r, w.ky + 2 * r, w.kz + 2 * r};
    const std::uint64_t prefix = request_prefix(cfg_.seed, center, scale);
    std::vector<double> raw(padded.size());
    for (std::size_t j = 0; j < raw.size(); ++j)
        raw[j] = gaussian_at(prefix, padded.offset(j));

    for (std::size_t i = 0; i < out.size(); ++i) {
        const Coord3 n = w.offset(i);
        double eta = 0.0;
        for (std::int64_t dz = -r; dz <= r; ++dz)
            for (std::int64_t dy = -r; dy <= r; ++dy)
                for (std::int64_t dx = -r; dx <= r; ++dx)
                    eta += raw[padded.index(n + Coord3{dx, dy, dz})];
        eta *= norm * cfg_.flip_sigma;
        const double v = std::clamp(static_cast<double>(out[i]), kLogitEpsilon, 1.0 - kLogitEpsilon);
        out[i] = static_cast<float>(std::clamp(sigmoid(logit(v) + eta), 0.0, 1.0));
    }
}

ProviderPtr perturb(ProviderPtr base, NoiseConfig cfg)
{
    return std::make_shared<NoisyProvider>(std::move(base), cfg);
}

MaskField::MaskField(Shape3 shape, MaskWindow window, Scale scale)
    : shape_(shape), window_(window), scale_(scale), values_(shape.voxel_count() * window.size(), 0.0f)
{
    validate_shape(shape);
    validate_window(window);
    validate_scale(scale);
}

MaskField::MaskField(Shape3 shape, MaskWindow window, Scale scale, std::vector<float> values)
    : shape_(shape), window_(window), scale_(scale), values_(std::move(values))
{
    validate_shape(shape);
    validate_window(window);
    validate_scale(scale);
    if (values_.size() != shape.voxel_count() * window.size())
        throw Error(ErrorKind::WindowMismatch, "mask field length does not match shape and window");
}

MaskField materialize(const MaskProvider& provider, Scale scale, unsigned threads)
{
    if (!provider.supports(scale))
        throw Error(ErrorKind::UnsupportedScale, "scale " + to_string(scale) + " not supported by provider");
    MaskField field(provider.shape(), provider.window(), scale);
    const Shape3 s = provider.shape();
    parallel_for(s.voxel_count(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t v = begin; v < end; ++v)
            provider.fill(s.coord(v), scale, field.mask(v));
    });
    return field;
}

void write_mask_field(const MaskField& field, const std::filesystem::path& base)
{
    const Shape3 s = field.shape();
    const MaskWindow w = field.window();
    const Scale sc = field.scale();
    nlohmann::json extra;
    extra["window"] = {w.kz, w.ky, w.kx};
    extra["scale"] = {sc.z, sc.y, sc.x};
    io::write_f32(base, {s.z, s.y, s.x, static_cast<std::int64_t>(w.size())}, field.values(), extra);
}

MaskField read_mask_field(const std::filesystem::path& base)
{
    io::ArrayHeader header;
    std::vector<float> values = io::read_f32(base, &header);
    if (header.shape.size() != 4)
        throw Error(ErrorKind::MalformedHeader, "mask field must have shape [Z,Y,X,D]");
    std::vector<std::int64_t> win;
    std::vector<std::int64_t> sc;
    try {
        win = header.extra.at("window").get<std::vector<std::int64_t>>();
        sc = header.extra.at("scale").get<std::vector<std::int64_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::MalformedHeader, std::string("mask field header needs window and scale: ") + e.what());
    }
    if (win.size() != 3 || sc.size() != 3)
        throw Error(ErrorKind::MalformedHeader, "mask field window/scale need 3 entries");
    const MaskWindow window{win[2], win[1], win[0]};
    validate_window(window);
    if (static_cast<std::size_t>(header.shape[3]) != window.size())
        throw Error(ErrorKind::WindowMismatch, "mask field D does not match window " + to_string(window));
    for (float v : values)
        if (!(v >= 0.0f && v <= 1.0f))
            throw Error(ErrorKind::ValueOutOfRange, "mask field value outside [0,1]");
    return MaskField(Shape3{header.shape[2], header.shape[1], header.shape[0]}, window, Scale{sc[2], sc[1], sc[0]},
                     std::move(values));
}

FieldProvider::FieldProvider(std::vector<MaskField> fields) : fields_(std::move(fields))
{
    if (fields_.empty())
        throw Error(ErrorKind::InvalidArgument, "field provider needs at least one mask field");
    for (std::size_t i = 1; i < fields_.size(); ++i) {
        if (fields_[i].shape() != fields_[0].shape())
            throw Error(ErrorKind::ShapeMismatch, "mask fields disagree on volume shape");
        if (fields_[i].window() != fields_[0].window())
            throw Error(ErrorKind::WindowMismatch, "mask fields disagree on window");
        for (std::size_t j = 0; j < i; ++j)
            if (fields_[i].scale() == fields_[j].scale())
                throw Error(ErrorKind::InvalidArgument, "duplicate mask field scale");
    }
}

std::vector<Scale> FieldProvider::supported_scales() const
{
    std::vector<Scale> scales;
    for (const auto& f : fields_)
        scales.push_back(f.scale());
    return scales;
}

void FieldProvider::fill(Coord3 center, Scale scale, std::span<float> out) const
{
    for (const auto& f : fields_)
        if (f.scale() == scale) {
            const auto m = f.mask(f.shape().index(center));
            std::copy(m.begin(), m.end(), out.begin());
            return;
        }
    throw Error(ErrorKind::UnsupportedScale, "scale " + to_string(scale) + " not stored in mask fields");
}

ProviderPtr file_provider(const std::vector<std::filesystem::path>& mask_field_paths)
{
    std::vector<MaskField> fields;
    for (const auto& p : mask_field_paths)
        fields.push_back(read_mask_field(p));
    return std::make_shared<FieldProvider>(std::move(fields));
}

}  // namespace maskaggr
