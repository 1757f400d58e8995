#include "maskaggr/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "maskaggr/error.hpp"

namespace maskaggr::io {

static_assert(std::endian::native == std::endian::little, "payload encoding assumes a little-endian host");

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kOrder = "row-major-x-fastest";
constexpr const char* kEndianness = "little";

fs::path strip_suffix(const fs::path& p, const std::vector<std::string>& suffixes)
{
    const std::string s = p.string();
    for (const auto& suffix : suffixes)
        if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0)
            return fs::path(s.substr(0, s.size() - suffix.size()));
    return p;
}

fs::path container_base(const fs::path& p) { return strip_suffix(p, {".json", ".raw"}); }

fs::path graph_base(const fs::path& p)
{
    return fs::path(strip_suffix(p, {".graph.json", ".graph.raw", ".graph"}).string() + ".graph");
}

template <class T>
void append_pod(std::vector<std::uint8_t>& out, T value)
{
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    out.insert(out.end(), p, p + sizeof(T));
}

template <class T>
T load_pod(const std::uint8_t* p)
{
    T value;
    std::memcpy(&value, p, sizeof(T));
    return value;
}

json parse_header(const fs::path& path)
{
    const std::string text = read_text(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::MalformedHeader, "cannot parse header " + path.string() + ": " + e.what());
    }
}

template <class T>
T header_field(const json& j, const char* key, const fs::path& path)
{
    if (!j.is_object() || !j.contains(key))
        throw Error(ErrorKind::MalformedHeader, path.string() + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::MalformedHeader, path.string() + ": bad field '" + key + "': " + e.what());
    }
}

}  // namespace

const char* to_string(Dtype d)
{
    switch (d) {
    case Dtype::U8: return "u8";
    case Dtype::U32: return "u32";
    case Dtype::U64: return "u64";
    case Dtype::F32: return "f32";
    }
    return "?";
}

Dtype dtype_from_string(const std::string& s)
{
    if (s == "u8") return Dtype::U8;
    if (s == "u32") return Dtype::U32;
    if (s == "u64") return Dtype::U64;
    if (s == "f32") return Dtype::F32;
    throw Error(ErrorKind::UnsupportedDtype, "unsupported dtype '" + s + "'");
}

std::size_t dtype_size(Dtype d)
{
    switch (d) {
    case Dtype::U8: return 1;
    case Dtype::U32: return 4;
    case Dtype::U64: return 8;
    case Dtype::F32: return 4;
    }
    return 0;
}

std::size_t ArrayHeader::element_count() const
{
    std::size_t n = 1;
    for (auto e : shape)
        n *= static_cast<std::size_t>(e);
    return n;
}

fs::path header_path(const fs::path& base) { return fs::path(container_base(base).string() + ".json"); }
fs::path payload_path(const fs::path& base) { return fs::path(container_base(base).string() + ".raw"); }

std::vector<std::uint8_t> read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::FileNotFound, "cannot open " + path.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorKind::FileNotFound, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error(ErrorKind::FileNotFound, "write failed for " + path.string());
}

void write_text(const fs::path& path, const std::string& text)
{
    write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::string read_text(const fs::path& path)
{
    const auto bytes = read_file(path);
    return std::string(bytes.begin(), bytes.end());
}

void write_array(const fs::path& base, const ArrayHeader& header, const std::vector<std::uint8_t>& payload)
{
    if (payload.size() != header.element_count() * dtype_size(header.dtype))
        throw Error(ErrorKind::LengthMismatch, "payload size does not match header shape");
    json j = header.extra.is_object() ? header.extra : json::object();
    j["dtype"] = to_string(header.dtype);
    j["shape"] = header.shape;
    j["order"] = kOrder;
    j["endianness"] = kEndianness;
    if (header.resolution)
        j["resolution"] = {header.resolution->z, header.resolution->y, header.resolution->x};
    write_text(header_path(base), j.dump(2) + "\n");
    write_file(payload_path(base), payload);
}

RawArray read_array(const fs::path& base)
{
    const fs::path hpath = header_path(base);
    const fs::path ppath = payload_path(base);
    const json j = parse_header(hpath);

    RawArray out;
    out.header.dtype = dtype_from_string(header_field<std::string>(j, "dtype", hpath));
    out.header.shape = header_field<std::vector<std::int64_t>>(j, "shape", hpath);
    if (out.header.shape.empty())
        throw Error(ErrorKind::MalformedHeader, hpath.string() + ": empty shape");
    for (auto e : out.header.shape)
        if (e <= 0)
            throw Error(ErrorKind::MalformedHeader, hpath.string() + ": non-positive extent");
    if (j.contains("order") && j["order"] != kOrder)
        throw Error(ErrorKind::MalformedHeader, hpath.string() + ": unsupported order");
    if (j.contains("endianness") && j["endianness"] != kEndianness)
        throw Error(ErrorKind::MalformedHeader, hpath.string() + ": unsupported endianness");
    if (j.contains("resolution")) {
        const auto r = header_field<std::vector<double>>(j, "resolution", hpath);
        if (r.size() != 3)
            throw Error(ErrorKind::MalformedHeader, hpath.string() + ": resolution needs 3 entries");
        out.header.resolution = Resolution{r[2], r[1], r[0]};
    }
    for (auto it = j.begin(); it != j.end(); ++it)
        if (it.key() != "dtype" && it.key() != "shape" && it.key() != "order" && it.key() != "endianness" &&
            it.key() != "resolution")
            out.header.extra[it.key()] = it.value();

    out.payload = read_file(ppath);
    const std::size_t expected = out.header.element_count() * dtype_size(out.header.dtype);
    if (out.payload.size() != expected)
        throw Error(ErrorKind::LengthMismatch, ppath.string() + ": payload has " +
                                                   std::to_string(out.payload.size()) + " bytes, expected " +
                                                   std::to_string(expected));
    return out;
}

void write_volume(const LabelVolume& volume, const fs::path& base, Dtype dtype)
{
    const Shape3 s = volume.shape();
    ArrayHeader header;
    header.dtype = dtype;
    header.shape = {s.z, s.y, s.x};
    header.resolution = volume.resolution();

    std::vector<std::uint8_t> payload;
    payload.reserve(volume.size() * dtype_size(dtype));
    for (Label v : volume.data()) {
        switch (dtype) {
        case Dtype::U8:
            if (v > 0xFFu)
                throw Error(ErrorKind::ValueOutOfRange, "label does not fit u8");
            append_pod(payload, static_cast<std::uint8_t>(v));
            break;
        case Dtype::U32:
            if (v > 0xFFFFFFFFu)
                throw Error(ErrorKind::ValueOutOfRange, "label does not fit u32");
            append_pod(payload, static_cast<std::uint32_t>(v));
            break;
        case Dtype::U64:
            append_pod(payload, static_cast<std::uint64_t>(v));
            break;
        case Dtype::F32:
            throw Error(ErrorKind::UnsupportedDtype, "label volumes cannot be stored as f32");
        }
    }
    write_array(base, header, payload);
}

LabelVolume read_volume(const fs::path& base)
{
    const RawArray raw = read_array(base);
    if (raw.header.shape.size() != 3)
        throw Error(ErrorKind::MalformedHeader, "label volume must have shape [Z,Y,X]");
    const Shape3 shape{raw.header.shape[2], raw.header.shape[1], raw.header.shape[0]};
    std::vector<Label> data(shape.voxel_count());
    const std::uint8_t* p = raw.payload.data();
    switch (raw.header.dtype) {
    case Dtype::U8:
        for (std::size_t i = 0; i < data.size(); ++i)
            data[i] = p[i];
        break;
    case Dtype::U32:
        for (std::size_t i = 0; i < data.size(); ++i)
            data[i] = load_pod<std::uint32_t>(p + 4 * i);
        break;
    case Dtype::U64:
        for (std::size_t i = 0; i < data.size(); ++i)
            data[i] = load_pod<std::uint64_t>(p + 8 * i);
        break;
    case Dtype::F32:
        throw Error(ErrorKind::UnsupportedDtype, "label volumes cannot be read from f32 payloads");
    }
    return LabelVolume(shape, std::move(data), raw.header.resolution.value_or(Resolution{}));
}

void write_f32(const fs::path& base, const std::vector<std::int64_t>& shape, const std::vector<float>& values,
               const json& extra)
{
    ArrayHeader header;
    header.dtype = Dtype::F32;
    header.shape = shape;
    header.extra = extra;
    std::vector<std::uint8_t> payload(values.size() * sizeof(float));
    std::memcpy(payload.data(), values.data(), payload.size());
    write_array(base, header, payload);
}

std::vector<float> read_f32(const fs::path& base, ArrayHeader* header_out)
{
    RawArray raw = read_array(base);
    if (raw.header.dtype != Dtype::F32)
        throw Error(ErrorKind::UnsupportedDtype, "expected f32 payload, got " + std::string(to_string(raw.header.dtype)));
    std::vector<float> values(raw.header.element_count());
    std::memcpy(values.data(), raw.payload.data(), raw.payload.size());
    if (header_out)
        *header_out = std::move(raw.header);
    return values;
}

void write_graph(const SignedGridGraph& graph, const fs::path& base)
{
    const fs::path gbase = graph_base(base);
    const Shape3 s = graph.shape();
    const auto edges = graph.edges();

    json offsets = json::array();
    for (const auto& o : graph.neighborhood().offsets())
        offsets.push_back({o.x, o.y, o.z});
    json j;
    j["shape"] = {s.z, s.y, s.x};
    j["offsets"] = offsets;
    j["direct_count"] = graph.neighborhood().direct_count();
    j["edge_count"] = edges.size();
    j["record"] = {"f32 mean", "f32 variance", "f32 evidence", "u8 valid"};
    j["order"] = "z,y,x,k";
    j["endianness"] = kEndianness;
    write_text(fs::path(gbase.string() + ".json"), j.dump(2) + "\n");

    std::vector<std::uint8_t> payload;
    payload.reserve(edges.size() * 13);
    for (const auto& e : edges) {
        const std::size_t slot = graph.slot(e);
        append_pod(payload, static_cast<float>(graph.mean(slot)));
        append_pod(payload, static_cast<float>(graph.variance(slot)));
        append_pod(payload, static_cast<float>(graph.evidence(slot)));
        append_pod(payload, static_cast<std::uint8_t>(graph.valid(slot) ? 1 : 0));
    }
    write_file(fs::path(gbase.string() + ".raw"), payload);
}

SignedGridGraph read_graph(const fs::path& base)
{
    const fs::path gbase = graph_base(base);
    const fs::path hpath(gbase.string() + ".json");
    const json j = parse_header(hpath);

    const auto shape_v = header_field<std::vector<std::int64_t>>(j, "shape", hpath);
    if (shape_v.size() != 3)
        throw Error(ErrorKind::MalformedHeader, hpath.string() + ": shape must be [Z,Y,X]");
    const auto offsets_v = header_field<std::vector<std::vector<std::int64_t>>>(j, "offsets", hpath);
    std::vector<Coord3> offsets;
    for (const auto& o : offsets_v) {
        if (o.size() != 3)
            throw Error(ErrorKind::MalformedHeader, hpath.string() + ": offsets must have 3 entries");
        offsets.push_back({o[0], o[1], o[2]});
    }
    const auto direct = header_field<std::size_t>(j, "direct_count", hpath);
    const auto edge_count = header_field<std::size_t>(j, "edge_count", hpath);

    SignedGridGraph graph(Shape3{shape_v[2], shape_v[1], shape_v[0]}, AffinityNeighborhood(offsets, direct));
    const auto edges = graph.edges();
    if (edges.size() != edge_count)
        throw Error(ErrorKind::MalformedHeader, hpath.string() + ": edge_count inconsistent with shape/offsets");

    const auto payload = read_file(fs::path(gbase.string() + ".raw"));
    if (payload.size() != edges.size() * 13)
        throw Error(ErrorKind::LengthMismatch, "graph payload length mismatch");
    const std::uint8_t* p = payload.data();
    for (const auto& e : edges) {
        const float mean = load_pod<float>(p);
        const float var = load_pod<float>(p + 4);
        const float evidence = load_pod<float>(p + 8);
        const std::uint8_t valid = p[12];
        p += 13;
        if ((valid != 0) != (evidence > 0.0f))
            throw Error(ErrorKind::ValueOutOfRange, "graph record valid flag disagrees with evidence");
        graph.set(graph.slot(e), mean, var, evidence);
    }
    return graph;
}

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size, std::uint64_t seed)
{
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value)
{
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << value;
    return os.str();
}

std::string file_hash(const fs::path& path)
{
    const auto bytes = read_file(path);
    return hex64(fnv1a64(bytes.data(), bytes.size()));
}

}  // namespace maskaggr::io
