#include <doctest.h>

#include <bit>
#include <cstdlib>
#include <random>

#include "fassmvs/matching.hpp"
#include "fassmvs/render.hpp"
#include "oracles.hpp"

using namespace fassmvs;

namespace {

ImageU8 random_image(int w, int h, std::mt19937& gen, int lo = 0, int hi = 255) {
    std::uniform_int_distribution<int> u(lo, hi);
    ImageU8 img(w, h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            img.at(x, y) = static_cast<std::uint8_t>(u(gen));
    return img;
}

}  // namespace

TEST_CASE("census of a constant image is all zeros") {
    const ImageU8 img(16, 12, 77);
    const auto census = census_transform(img, 5, 5);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            CHECK(census.at(x, y) == 0);
}

TEST_CASE("census is invariant to an additive intensity offset") {
    auto& gen = oracle::rng(201);
    const ImageU8 img = random_image(20, 15, gen, 0, 238);  // +17 cannot saturate
    ImageU8 shifted = img;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            shifted.at(x, y) = static_cast<std::uint8_t>(img.at(x, y) + 17);
    CHECK(census_transform(img, 5, 5) == census_transform(shifted, 5, 5));
    CHECK(census_transform(img, 9, 7) == census_transform(shifted, 9, 7));
}

TEST_CASE("census bit strings match the explicit comparison oracle") {
    auto& gen = oracle::rng(202);
    const ImageU8 img = random_image(24, 18, gen);
    const auto census = census_transform(img, 5, 5);

    // 24 usable bits for a 5x5 window
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            CHECK(census.at(x, y) < (1ull << 24));

    // One interior pixel and one corner pixel (edge-clamped sampling).
    for (const auto [px, py] : {std::pair{7, 5}, {0, 0}}) {
        std::uint64_t expected = 0;
        const std::uint8_t center = img.at(px, py);
        for (int dy = -2; dy <= 2; ++dy)
            for (int dx = -2; dx <= 2; ++dx) {
                if (dx == 0 && dy == 0)
                    continue;
                const int sx = std::clamp(px + dx, 0, img.width() - 1);
                const int sy = std::clamp(py + dy, 0, img.height() - 1);
                expected = (expected << 1) | (img.at(sx, sy) < center ? 1u : 0u);
            }
        CHECK(census.at(px, py) == expected);
    }
}

TEST_CASE("census rejects even and oversized windows") {
    const ImageU8 img(8, 8, 0);
    CHECK_THROWS_AS(census_transform(img, 4, 5), ConfigError);
    CHECK_THROWS_AS(census_transform(img, 11, 9), ConfigError);
}

TEST_CASE("ncc cost basics") {
    std::vector<float> a = {10, 30, 50, 20, 40, 60, 15, 35, 55};
    SUBCASE("identical patches cost nothing") { CHECK(ncc_cost(a, a) == 0); }
    SUBCASE("positive affine gain is free") {
        std::vector<float> b;
        for (float v : a)
            b.push_back(1.7f * v + 12.0f);
        CHECK(ncc_cost(a, b) == 0);
    }
    SUBCASE("negated contrast saturates") {
        double mean = 0;
        for (float v : a)
            mean += v;
        mean /= a.size();
        std::vector<float> b;
        for (float v : a)
            b.push_back(static_cast<float>(2.0 * mean - v));
        CHECK(ncc_cost(a, b) == 255);
    }
    SUBCASE("flat patches are uninformative") {
        const std::vector<float> flat(a.size(), 42.0f);
        CHECK(ncc_cost(flat, a) == 255);
        CHECK(ncc_cost(a, flat) == 255);
        CHECK(ncc_cost(flat, flat) == 255);
    }
}

TEST_CASE("sweep cost volume puts the argmin at the true plane") {
    SyntheticScene scene = fronto_scene(96, 72, 140.0, 10.0, 3, 1.0, 5);
    scene.texture_scale = 0.4;
    const auto rendered = render_scene(scene);
    std::vector<CalibratedView> bundle;
    for (const auto& rv : rendered)
        bundle.push_back(rv.view);

    PlaneStack planes;
    planes.distances = {12.0, 11.0, 10.0, 9.0, 8.0};
    const SamplingRange ranges = SamplingRange::uniform(DepthBounds(8.0, 12.0), 96, 72);
    const CostVolume vol =
        sweep_cost_volume(bundle, 1, planes, ranges, {CostKind::NccTruncated, 5, 5});

    int interior = 0, correct = 0;
    for (int y = 10; y < 62; ++y) {
        for (int x = 10; x < 86; ++x) {
            const auto costs = vol.pixel_costs(x, y);
            REQUIRE(costs.size() == 5);
            int best = 0;
            for (int i = 1; i < 5; ++i)
                if (costs[i] < costs[best])
                    best = i;
            ++interior;
            correct += (vol.first[vol.pixel(x, y)] + best == 2);  // the 10.0 plane
        }
    }
    CHECK(static_cast<double>(correct) / interior >= 0.95);
}

TEST_CASE("duplicated matching views store the one-sided cost") {
    SyntheticScene scene = fronto_scene(40, 30, 60.0, 8.0, 3, 0.8, 9);
    const auto rendered = render_scene(scene);

    // Both sides identical: min(s_L, s_R) = s_L = s_R.
    std::vector<CalibratedView> dup = {rendered[2].view, rendered[1].view, rendered[2].view};
    // A zero-variance left image always scores 255, so the minimum is the
    // right side alone; equality proves the stored value is the side cost.
    CalibratedView flat = rendered[2].view;
    flat.image = ImageU8(40, 30, 128);
    std::vector<CalibratedView> onesided = {flat, rendered[1].view, rendered[2].view};

    PlaneStack planes;
    planes.distances = {9.0, 8.0, 7.0};
    const SamplingRange ranges = SamplingRange::uniform(DepthBounds(7.0, 9.0), 40, 30);
    const CostFunctionSpec ncc{CostKind::NccTruncated, 5, 5};
    const CostVolume a = sweep_cost_volume(dup, 1, planes, ranges, ncc);
    const CostVolume b = sweep_cost_volume(onesided, 1, planes, ranges, ncc);
    CHECK(a.costs == b.costs);
}

TEST_CASE("pixels whose range excludes every plane get no hypotheses") {
    SyntheticScene scene = fronto_scene(32, 24, 50.0, 8.0, 3, 0.5, 3);
    const auto rendered = render_scene(scene);
    std::vector<CalibratedView> bundle;
    for (const auto& rv : rendered)
        bundle.push_back(rv.view);

    PlaneStack planes;
    planes.distances = {9.0, 8.0, 7.0};
    SamplingRange ranges = SamplingRange::uniform(DepthBounds(7.0, 9.0), 32, 24);
    ranges.lo.at(5, 5) = 100.0f;
    ranges.hi.at(5, 5) = 200.0f;
    const CostVolume vol =
        sweep_cost_volume(bundle, 1, planes, ranges, {CostKind::NccTruncated, 5, 5});
    CHECK(vol.count[vol.pixel(5, 5)] == 0);
    CHECK(vol.count[vol.pixel(6, 5)] == 3);
}

TEST_CASE("sweep requires a matching image on each side") {
    SyntheticScene scene = fronto_scene(32, 24, 50.0, 8.0, 3, 0.5, 3);
    const auto rendered = render_scene(scene);
    std::vector<CalibratedView> bundle;
    for (const auto& rv : rendered)
        bundle.push_back(rv.view);
    PlaneStack planes;
    planes.distances = {9.0, 8.0};
    const SamplingRange ranges = SamplingRange::uniform(DepthBounds(7.0, 9.0), 32, 24);
    CHECK_THROWS_AS(
        sweep_cost_volume(bundle, 0, planes, ranges, {CostKind::NccTruncated, 5, 5}),
        InvalidInputError);
}

TEST_CASE("stored costs stay within the per-side bound") {
    SyntheticScene scene = fronto_scene(48, 36, 70.0, 9.0, 5, 0.6, 11);
    const auto rendered = render_scene(scene);
    std::vector<CalibratedView> bundle;
    for (const auto& rv : rendered)
        bundle.push_back(rv.view);
    PlaneStack planes;
    planes.distances = {11.0, 10.0, 9.0, 8.0};
    const SamplingRange ranges = SamplingRange::uniform(DepthBounds(8.0, 11.0), 48, 36);

    for (const auto kind : {CostKind::CensusHamming, CostKind::NccTruncated}) {
        const CostVolume vol =
            sweep_cost_volume(bundle, 2, planes, ranges, {kind, 5, 5});
        CHECK(vol.per_side == 2);
        for (const auto c : vol.costs)
            CHECK(c <= 255 * vol.per_side);
    }
}

TEST_CASE("sweep results do not depend on the worker count") {
    SyntheticScene scene = fronto_scene(40, 30, 60.0, 8.0, 3, 0.8, 21);
    const auto rendered = render_scene(scene);
    std::vector<CalibratedView> bundle;
    for (const auto& rv : rendered)
        bundle.push_back(rv.view);
    PlaneStack planes;
    planes.distances = {9.5, 8.8, 8.0, 7.3};
    const SamplingRange ranges = SamplingRange::uniform(DepthBounds(7.0, 10.0), 40, 30);

    setenv("FASSMVS_THREADS", "1", 1);
    const CostVolume a =
        sweep_cost_volume(bundle, 1, planes, ranges, {CostKind::CensusHamming, 5, 5});
    setenv("FASSMVS_THREADS", "7", 1);
    const CostVolume b =
        sweep_cost_volume(bundle, 1, planes, ranges, {CostKind::CensusHamming, 5, 5});
    unsetenv("FASSMVS_THREADS");
    CHECK(a.costs == b.costs);
    CHECK(a.first == b.first);
    CHECK(a.count == b.count);
}

TEST_CASE("cost function spec accepts only the supported windows") {
    const CostFunctionSpec census97{CostKind::CensusHamming, 9, 7};
    const CostFunctionSpec ncc99{CostKind::NccTruncated, 9, 9};
    const CostFunctionSpec census99{CostKind::CensusHamming, 9, 9};
    const CostFunctionSpec ncc77{CostKind::NccTruncated, 7, 7};
    CHECK_NOTHROW(census97.validate());
    CHECK_NOTHROW(ncc99.validate());
    CHECK_THROWS_AS(census99.validate(), ConfigError);
    CHECK_THROWS_AS(ncc77.validate(), ConfigError);
}
