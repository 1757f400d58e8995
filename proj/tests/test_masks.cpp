#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "maskaggr/error.hpp"
#include "maskaggr/io.hpp"
#include "maskaggr/masks.hpp"
#include "support/oracles.hpp"

using namespace maskaggr;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "maskaggr_test_masks";
    fs::create_directories(dir);
    return dir / name;
}

LabelVolume line_volume()
{
    LabelVolume v({10, 1, 1});
    for (std::int64_t x = 0; x < 10; ++x)
        v.at({x, 0, 0}) = x < 5 ? 1 : 2;
    return v;
}

std::vector<float> floats(std::initializer_list<float> v) { return v; }

}  // namespace

TEST_CASE("gt_mask on a uniform volume is all ones")
{
    const LabelVolume v({12, 12, 7}, 7);
    const auto m = gt_mask(v, {6, 6, 3}, {7, 7, 5}, {1, 1, 1}, false);
    CHECK(m.values.size() == 245);
    for (float x : m.values)
        CHECK(x == 1.0f);
}

TEST_CASE("gt_mask line example")
{
    const LabelVolume v = line_volume();
    CHECK(gt_mask(v, {2, 0, 0}, {5, 1, 1}, {1, 1, 1}, false).values == floats({1, 1, 1, 1, 1}));
    CHECK(gt_mask(v, {4, 0, 0}, {5, 1, 1}, {1, 1, 1}, false).values == floats({1, 1, 1, 0, 0}));
    // Out-of-volume entries read as background.
    CHECK(gt_mask(v, {0, 0, 0}, {5, 1, 1}, {1, 1, 1}, false).values == floats({0, 0, 1, 1, 1}));
}

TEST_CASE("boundary rule yields the single-pixel mask")
{
    LabelVolume v({9, 9, 5}, 1);
    v.at({5, 5, 2}) = 2;
    CHECK(is_boundary_near(v, {4, 4, 2}));
    CHECK(is_boundary_near(v, {5, 5, 2}));
    CHECK_FALSE(is_boundary_near(v, {3, 3, 2}));
    // Out-of-plane differences do not count.
    CHECK_FALSE(is_boundary_near(v, {5, 5, 1}));

    const auto m = gt_mask(v, {4, 4, 2}, {7, 7, 5}, {1, 1, 1}, true);
    const MaskWindow w{7, 7, 5};
    for (std::size_t i = 0; i < w.size(); ++i)
        CHECK(m.values[i] == (i == w.center_index() ? 1.0f : 0.0f));

    const auto off = gt_mask(v, {4, 4, 2}, w, {1, 1, 1}, false);
    CHECK(off.at({1, 1, 0}) == 0.0f);
    CHECK(off.at({0, 0, 0}) == 1.0f);
    CHECK(off.at({-1, 0, 0}) == 1.0f);
}

TEST_CASE("gt_mask rejects out-of-bounds centers")
{
    const LabelVolume v({4, 4, 2}, 1);
    CHECK_THROWS_AS(gt_mask(v, {4, 0, 0}, {3, 3, 1}, {1, 1, 1}, false), Error);
}

TEST_CASE("gt_mask is binary with center 1 and matches subsampled volumes")
{
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 60; ++trial) {
        const Shape3 shape{3 + static_cast<std::int64_t>(rng() % 14), 3 + static_cast<std::int64_t>(rng() % 14),
                           1 + static_cast<std::int64_t>(rng() % 5)};
        const LabelVolume v = oracle::random_labels(shape, 3, rng);
        const Scale s{1 + static_cast<std::int64_t>(rng() % 4), 1 + static_cast<std::int64_t>(rng() % 4),
                      1 + static_cast<std::int64_t>(rng() % 2)};
        const MaskWindow w{5, 3, 3};
        const Coord3 c{static_cast<std::int64_t>(rng() % shape.x), static_cast<std::int64_t>(rng() % shape.y),
                       static_cast<std::int64_t>(rng() % shape.z)};
        const auto m = gt_mask(v, c, w, s, false);
        CHECK(m.at({0, 0, 0}) == 1.0f);

        // Subsample L on the strided lattice through c and evaluate at scale 1.
        const Shape3 sub{w.kx, w.ky, w.kz};
        LabelVolume lattice(sub, 0);
        for (std::size_t i = 0; i < w.size(); ++i) {
            const Coord3 n = w.offset(i);
            const Coord3 p = c + s.apply(n);
            // 0 marks out-of-volume; it never equals a real label.
            lattice.at({n.x + w.hx(), n.y + w.hy(), n.z + w.hz()}) = shape.contains(p) ? v.at(p) : 0;
        }
        const auto ref = gt_mask(lattice, {w.hx(), w.hy(), w.hz()}, w, {1, 1, 1}, false);
        for (std::size_t i = 0; i < w.size(); ++i) {
            CHECK((m.values[i] == 0.0f || m.values[i] == 1.0f));
            CHECK(m.values[i] == ref.values[i]);
        }
    }
}

TEST_CASE("perturb with sigma 0 is the identity")
{
    std::mt19937_64 rng(2);
    auto base = std::make_shared<OracleProvider>(oracle::random_labels({8, 8, 3}, 3, rng), MaskWindow{5, 5, 3},
                                                 std::vector<Scale>{{1, 1, 1}, {2, 2, 1}}, false);
    const auto noisy = perturb(base, {0.0, 1, 99});
    for (std::int64_t x = 0; x < 8; ++x) {
        const auto a = base->mask({x, 3, 1}, {2, 2, 1});
        const auto b = noisy->mask({x, 3, 1}, {2, 2, 1});
        for (std::size_t i = 0; i < a.values.size(); ++i)
            CHECK(std::abs(a.values[i] - b.values[i]) <= 1e-6);
    }
}

TEST_CASE("perturb stays in range, is deterministic and grows with sigma")
{
    std::mt19937_64 rng(4);
    auto base = std::make_shared<OracleProvider>(oracle::random_labels({10, 10, 3}, 4, rng), MaskWindow{7, 7, 3},
                                                 std::vector<Scale>{{1, 1, 1}}, false);
    double previous = 0.0;
    for (double sigma : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        for (int radius : {0, 1}) {
            const auto a = perturb(base, {sigma, radius, 1234});
            const auto b = perturb(base, {sigma, radius, 1234});
            for (std::int64_t y = 0; y < 10; y += 3) {
                const auto ma = a->mask({5, y, 1}, {1, 1, 1});
                const auto mb = b->mask({5, y, 1}, {1, 1, 1});
                CHECK(ma.values == mb.values);
                for (float x : ma.values)
                    CHECK((x >= 0.0f && x <= 1.0f));
            }
        }
        const auto p = perturb(base, {sigma, 0, 77});
        double dev = 0.0;
        for (std::int64_t y = 0; y < 10; ++y)
            for (std::int64_t x = 0; x < 10; ++x) {
                const auto m0 = base->mask({x, y, 1}, {1, 1, 1});
                const auto m1 = p->mask({x, y, 1}, {1, 1, 1});
                for (std::size_t i = 0; i < m0.values.size(); ++i)
                    dev += std::abs(static_cast<double>(m0.values[i]) - m1.values[i]);
            }
        CHECK(dev > previous);
        previous = dev;
    }
}

TEST_CASE("noise samples are roughly standard normal")
{
    double sum = 0.0;
    double sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double g = NoisyProvider::gaussian(5, {i % 100, i / 100, 0}, {1, 1, 1}, {0, 0, 0});
        sum += g;
        sq += g * g;
    }
    CHECK(std::abs(sum / n) < 0.05);
    CHECK(std::abs(sq / n - 1.0) < 0.05);
}

TEST_CASE("mask field export reloads bitwise and serves the same masks")
{
    std::mt19937_64 rng(9);
    const LabelVolume labels = oracle::random_labels({6, 6, 3}, 3, rng);
    const std::vector<Scale> scales{{1, 1, 1}, {2, 2, 1}};
    const OracleProvider oracle(labels, {5, 5, 3}, scales, false);
    std::vector<fs::path> paths;
    for (std::size_t i = 0; i < scales.size(); ++i) {
        const MaskField f = materialize(oracle, scales[i], 2);
        paths.push_back(scratch("field" + std::to_string(i)));
        write_mask_field(f, paths.back());
        CHECK(read_mask_field(paths.back()) == f);
    }
    const auto fp = file_provider(paths);
    for (std::size_t i = 0; i < labels.size(); ++i)
        for (const Scale& s : scales)
            CHECK(fp->mask(labels.shape().coord(i), s) == oracle.mask(labels.shape().coord(i), s));

    CHECK_THROWS_AS(fp->mask({0, 0, 0}, {4, 4, 1}), Error);
    try {
        fp->mask({0, 0, 0}, {4, 4, 1});
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::UnsupportedScale);
    }
}

TEST_CASE("mask field loading validates values and window")
{
    const MaskWindow w{3, 3, 1};
    MaskField f({2, 2, 1}, w, {1, 1, 1});
    const fs::path base = scratch("bad_values");
    write_mask_field(f, base);
    auto values = io::read_f32(base);
    {
        io::ArrayHeader h;
        io::read_f32(base, &h);
        values[3] = 1.5f;
        io::write_f32(base, h.shape, values, h.extra);
    }
    try {
        read_mask_field(base);
        FAIL("expected rejection");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ValueOutOfRange);
    }

    io::ArrayHeader h;
    io::read_f32(base, &h);
    h.extra["window"] = nlohmann::json::array({1, 3, 5});
    values[3] = 0.5f;
    io::write_f32(base, h.shape, values, h.extra);
    try {
        read_mask_field(base);
        FAIL("expected rejection");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::WindowMismatch);
    }

    try {
        file_provider({scratch("missing_field")});
        FAIL("expected rejection");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::FileNotFound);
    }
}
