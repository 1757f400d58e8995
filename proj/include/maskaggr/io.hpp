#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "maskaggr/grid_graph.hpp"
#include "maskaggr/volume.hpp"

namespace maskaggr::io {

// Containers are pairs of files: <name>.json (header) and <name>.raw (packed
// little-endian payload, x fastest). Paths may be given with or without the
// .json/.raw suffix.

enum class Dtype { U8, U32, U64, F32 };

const char* to_string(Dtype d);
Dtype dtype_from_string(const std::string& s);
std::size_t dtype_size(Dtype d);

struct ArrayHeader {
    Dtype dtype = Dtype::U64;
    // Outermost first, e.g. [Z, Y, X] or [Z, Y, X, D].
    std::vector<std::int64_t> shape;
    std::optional<Resolution> resolution;
    // Additional header fields carried verbatim.
    nlohmann::json extra = nlohmann::json::object();

    std::size_t element_count() const;
};

struct RawArray {
    ArrayHeader header;
    std::vector<std::uint8_t> payload;
};

std::filesystem::path header_path(const std::filesystem::path& base);
std::filesystem::path payload_path(const std::filesystem::path& base);

void write_array(const std::filesystem::path& base, const ArrayHeader& header,
                 const std::vector<std::uint8_t>& payload);
RawArray read_array(const std::filesystem::path& base);

// Label volumes may be stored as u8, u32 or u64.
void write_volume(const LabelVolume& volume, const std::filesystem::path& base, Dtype dtype = Dtype::U64);
LabelVolume read_volume(const std::filesystem::path& base);

// f32 arrays with arbitrary logical shape and extra header fields.
void write_f32(const std::filesystem::path& base, const std::vector<std::int64_t>& shape,
               const std::vector<float>& values, const nlohmann::json& extra = nlohmann::json::object());
std::vector<float> read_f32(const std::filesystem::path& base, ArrayHeader* header_out = nullptr);

// Graph export: <name>.graph.json + <name>.graph.raw with one packed record
// (f32 mean, f32 variance, f32 evidence, u8 valid) per edge in enumeration order.
void write_graph(const SignedGridGraph& graph, const std::filesystem::path& base);
SignedGridGraph read_graph(const std::filesystem::path& base);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// 64-bit FNV-1a, used for content hashes in run manifests.
std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);
std::string file_hash(const std::filesystem::path& path);

}  // namespace maskaggr::io
