#include <doctest.h>

#include <set>

#include "maskaggr/error.hpp"
#include "maskaggr/synth.hpp"

using namespace maskaggr;

TEST_CASE("one instance fills the volume")
{
    CHECK(generate_labels({9, 7, 3}, 1, {}, 5) == LabelVolume({9, 7, 3}, 1));
}

TEST_CASE("generation is deterministic and thread independent")
{
    const auto a = generate_labels({32, 32, 6}, 12, {}, 77, 1);
    CHECK(generate_labels({32, 32, 6}, 12, {}, 77, 1) == a);
    CHECK(generate_labels({32, 32, 6}, 12, {}, 77, 4) == a);
    CHECK_FALSE(generate_labels({32, 32, 6}, 12, {}, 78, 1) == a);
}

TEST_CASE("64x64x8 with 32 instances gives 32 connected labels")
{
    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
        const auto v = generate_labels({64, 64, 8}, 32, {}, seed);
        const std::set<Label> labels(v.data().begin(), v.data().end());
        CHECK(labels.size() == 32);
        CHECK(*labels.begin() == 1);
        CHECK(*labels.rbegin() == 32);
        const auto counts = component_counts(v);
        for (Label l = 1; l <= 32; ++l)
            CHECK(counts[l] == 1);
    }
}

TEST_CASE("many instances on small volumes stay connected")
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto v = generate_labels({12, 10, 4}, 40, {10.0, 1.0, 3.0}, seed);
        const auto counts = component_counts(v);
        for (Label l = 1; l <= 40; ++l)
            CHECK(counts[l] == 1);
    }
}

TEST_CASE("component counting")
{
    LabelVolume v({5, 1, 1}, std::vector<Label>{1, 2, 1, 1, 2});
    const auto c = component_counts(v);
    CHECK(c[1] == 2);
    CHECK(c[2] == 2);
}

TEST_CASE("generation preconditions")
{
    CHECK_THROWS_AS(generate_labels({2, 2, 1}, 5, {}, 1), Error);
    CHECK_THROWS_AS(generate_labels({2, 2, 1}, 0, {}, 1), Error);
}
