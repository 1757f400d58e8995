#include <doctest.h>

#include <filesystem>
#include <random>

#include "maskaggr/error.hpp"
#include "maskaggr/io.hpp"

using namespace maskaggr;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "maskaggr_test_io";
    fs::create_directories(dir);
    return dir / name;
}

ErrorKind kind_of(auto&& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("volume round-trip is bitwise for every label dtype")
{
    std::mt19937_64 rng(3);
    for (auto [dtype, max] : {std::pair{io::Dtype::U8, 255ULL}, std::pair{io::Dtype::U32, 0xFFFFFFFFULL},
                              std::pair{io::Dtype::U64, ~0ULL}}) {
        LabelVolume v({4, 4, 2}, 0, Resolution{4.0, 4.0, 40.0});
        for (auto& l : v.data())
            l = rng() % max;
        const fs::path base = scratch(std::string("vol_") + io::to_string(dtype));
        io::write_volume(v, base, dtype);
        const LabelVolume back = io::read_volume(base);
        CHECK(back == v);
        // Rewriting reproduces the same bytes.
        io::write_volume(back, base.string() + "_again", dtype);
        CHECK(io::read_file(io::payload_path(base)) == io::read_file(io::payload_path(base.string() + "_again")));
    }
}

TEST_CASE("header fields follow the container layout")
{
    LabelVolume v({3, 2, 1}, 5);
    const fs::path base = scratch("layout");
    io::write_volume(v, base, io::Dtype::U32);
    const auto j = nlohmann::json::parse(io::read_text(io::header_path(base)));
    CHECK(j["dtype"] == "u32");
    CHECK(j["shape"] == nlohmann::json({1, 2, 3}));
    CHECK(j["order"] == "row-major-x-fastest");
    CHECK(j["endianness"] == "little");
    CHECK(io::read_file(io::payload_path(base)).size() == 6 * 4);
}

TEST_CASE("truncated payload is a length mismatch")
{
    LabelVolume v({4, 4, 2}, 9);
    const fs::path base = scratch("trunc");
    io::write_volume(v, base);
    auto bytes = io::read_file(io::payload_path(base));
    bytes.pop_back();
    io::write_file(io::payload_path(base), bytes);
    CHECK(kind_of([&] { io::read_volume(base); }) == ErrorKind::LengthMismatch);
}

TEST_CASE("f64 dtype is unsupported")
{
    LabelVolume v({2, 2, 1}, 1);
    const fs::path base = scratch("f64");
    io::write_volume(v, base);
    auto j = nlohmann::json::parse(io::read_text(io::header_path(base)));
    j["dtype"] = "f64";
    io::write_text(io::header_path(base), j.dump());
    CHECK(kind_of([&] { io::read_volume(base); }) == ErrorKind::UnsupportedDtype);
}

TEST_CASE("malformed and missing headers are distinct errors")
{
    const fs::path base = scratch("bad_header");
    io::write_text(io::header_path(base), "{ not json");
    io::write_file(io::payload_path(base), {});
    CHECK(kind_of([&] { io::read_volume(base); }) == ErrorKind::MalformedHeader);

    io::write_text(io::header_path(base), R"({"dtype": "u8"})");
    CHECK(kind_of([&] { io::read_volume(base); }) == ErrorKind::MalformedHeader);

    CHECK(kind_of([&] { io::read_volume(scratch("does_not_exist")); }) == ErrorKind::FileNotFound);
}

TEST_CASE("labels too large for the requested dtype are rejected")
{
    LabelVolume v({2, 1, 1}, 300);
    CHECK(kind_of([&] { io::write_volume(v, scratch("overflow"), io::Dtype::U8); }) == ErrorKind::ValueOutOfRange);
}

TEST_CASE("graph export round-trips through f32 records")
{
    const auto nh = AffinityNeighborhood::grid_graph_preset();
    SignedGridGraph g({6, 5, 3}, nh);
    std::mt19937_64 rng(5);
    for (const auto& e : g.edges()) {
        const double ev = (rng() % 4 == 0) ? 0.0 : static_cast<double>(rng() % 1000) / 7.0;
        g.set(g.slot(e), static_cast<double>(rng() % 1024) / 1024.0, static_cast<double>(rng() % 256) / 1024.0, ev);
    }
    const fs::path base = scratch("graph");
    io::write_graph(g, base);
    CHECK(fs::exists(base.string() + ".graph.json"));
    CHECK(fs::exists(base.string() + ".graph.raw"));
    CHECK(fs::file_size(base.string() + ".graph.raw") == g.edges().size() * 13);

    const SignedGridGraph back = io::read_graph(base);
    CHECK(back.shape() == g.shape());
    CHECK(back.neighborhood() == nh);
    for (const auto& e : g.edges()) {
        const std::size_t s = g.slot(e);
        CHECK(back.valid(s) == g.valid(s));
        CHECK(back.mean(s) == static_cast<double>(static_cast<float>(g.mean(s))));
        CHECK(back.evidence(s) == static_cast<double>(static_cast<float>(g.evidence(s))));
    }
    const auto j = nlohmann::json::parse(io::read_text(base.string() + ".graph.json"));
    CHECK(j["edge_count"] == g.edges().size());
    CHECK(j["direct_count"] == 3);
}
