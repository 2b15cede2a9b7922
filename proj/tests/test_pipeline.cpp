#include <doctest.h>

#include <cstdlib>

#include "fassmvs/evaluation.hpp"
#include "fassmvs/pipeline.hpp"
#include "fassmvs/postfilter.hpp"
#include "fassmvs/render.hpp"

using namespace fassmvs;

namespace {

std::vector<CalibratedView> views_of(const std::vector<RenderedView>& rendered) {
    std::vector<CalibratedView> out;
    for (const auto& rv : rendered)
        out.push_back(rv.view);
    return out;
}

}  // namespace

TEST_CASE("a one-level pyramid is the input bundle") {
    const auto rendered = render_scene(fronto_scene(24, 18, 30.0, 8.0, 3, 0.4, 2));
    const auto bundle = views_of(rendered);
    const PyramidLevelSet set = build_pyramids(bundle, 1);
    REQUIRE(set.levels.size() == 1);
    CHECK(set.levels[0][1].image == bundle[1].image);
    CHECK(set.levels[0][1].intrinsics.fx == bundle[1].intrinsics.fx);
}

TEST_CASE("pyramids of a constant image stay constant and halve sizes") {
    CalibratedView v;
    v.image = ImageU8(8, 8, 55);
    v.intrinsics = {16.0, 16.0, 3.5, 3.5, 8, 8};
    const PyramidLevelSet set = build_pyramids({v, v, v}, 3);
    REQUIRE(set.levels.size() == 3);
    const int sizes[3] = {8, 4, 2};
    for (int l = 0; l < 3; ++l) {
        const auto& img = set.levels[l][1].image;
        CHECK(img.width() == sizes[l]);
        CHECK(img.height() == sizes[l]);
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x)
                CHECK(img.at(x, y) == 55);
    }
}

TEST_CASE("per-level focal lengths halve exactly") {
    CalibratedView v;
    v.image = ImageU8(40, 30, 0);
    v.intrinsics = {100.0, 90.0, 19.5, 14.5, 40, 30};
    const PyramidLevelSet set = build_pyramids({v, v, v}, 4);
    for (int l = 0; l < 4; ++l) {
        CHECK(set.levels[l][0].intrinsics.fx == 100.0 / (1 << l));
        CHECK(set.levels[l][0].intrinsics.fy == 90.0 / (1 << l));
    }
    CHECK(set.levels[1][0].intrinsics.width == 20);
    CHECK(set.levels[2][0].intrinsics.width == 10);
    CHECK(set.levels[3][0].intrinsics.width == 5);
}

TEST_CASE("nearest-neighbor upscale replicates 2x2 blocks and propagates the sentinel") {
    DepthMap src(2, 2, 0.0f);
    src.at(0, 0) = 1.0f;
    src.at(1, 0) = 2.0f;
    src.at(0, 1) = 3.0f;
    // (1, 1) stays invalid
    const DepthMap up = upscale_nearest(src, 4, 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x)
            CHECK(up.at(x, y) == src.at(x / 2, y / 2));
    CHECK(up.at(3, 3) == 0.0f);

    const DepthMap same = upscale_nearest(src, 2, 2);
    CHECK(same == src);
}

TEST_CASE("range refinement clamps to the scene bounds") {
    const DepthBounds bounds(5.0, 30.0);
    DepthMap prior(3, 1, 0.0f);
    prior.at(0, 0) = 10.0f;
    prior.at(1, 0) = 6.0f;
    // (2, 0) invalid

    SUBCASE("infinite radius keeps the whole interval") {
        const SamplingRange r =
            refine_range(prior, {RangePolicy::Kind::Full, 0.0}, bounds);
        CHECK(r.lo.at(0, 0) == 5.0f);
        CHECK(r.hi.at(0, 0) == 30.0f);
    }
    SUBCASE("fixed radius windows around the prior") {
        const SamplingRange r =
            refine_range(prior, {RangePolicy::Kind::Fixed, 2.0}, bounds);
        CHECK(r.lo.at(0, 0) == 8.0f);
        CHECK(r.hi.at(0, 0) == 12.0f);
        CHECK(r.lo.at(1, 0) == 5.0f);  // clamped
        CHECK(r.hi.at(1, 0) == 8.0f);
        CHECK(r.lo.at(2, 0) == 5.0f);  // invalid prior keeps the full interval
        CHECK(r.hi.at(2, 0) == 30.0f);
        for (int x = 0; x < 3; ++x) {
            CHECK(r.lo.at(x, 0) >= 5.0f);
            CHECK(r.hi.at(x, 0) <= 30.0f);
        }
    }
    SUBCASE("spacing policy scales with the local plane gap") {
        PlaneStack coarser;
        coarser.distances = {12.0, 11.0, 10.0, 9.0, 8.0};
        const Intrinsics intr{50.0, 50.0, 1.0, 0.0, 3, 1};
        const SamplingRange r = refine_range(
            prior, {RangePolicy::Kind::SpacingMultiple, 3.0}, bounds, &coarser, &intr);
        // Fronto stack, unit gap: radius 3 around the prior of 10.
        CHECK(r.lo.at(0, 0) == doctest::Approx(7.0f));
        CHECK(r.hi.at(0, 0) == doctest::Approx(13.0f));
    }
    SUBCASE("spacing policy without a stack is a configuration error") {
        CHECK_THROWS_AS(
            refine_range(prior, {RangePolicy::Kind::SpacingMultiple, 3.0}, bounds),
            ConfigError);
    }
}

TEST_CASE("median filter ignores invalid samples and drops sparse windows") {
    DepthMap d(7, 7, 0.0f);
    // A valid 5x5 block in the center, one outlier inside it.
    for (int y = 1; y <= 5; ++y)
        for (int x = 1; x <= 5; ++x)
            d.at(x, y) = 4.0f;
    d.at(3, 3) = 50.0f;
    const DepthMap m = median_filter_5x5(d);
    CHECK(m.at(3, 3) == 4.0f);   // outlier suppressed
    CHECK(m.at(0, 0) == 0.0f);   // corner window is mostly invalid
}

TEST_CASE("fronto-parallel bundle estimate hits one percent relative error") {
    SyntheticScene scene = fronto_scene(160, 120, 160.0, 10.0, 5, 1.0, 4);
    const auto rendered = render_scene(scene);
    PipelineConfig config(DepthBounds(8.0, 14.0));
    config.pyramid_levels = 1;
    const BundleResult result = estimate_bundle(views_of(rendered), config);

    const TextureMask mask = dog_mask(rendered[2].view.image);
    const DepthMap& gt = rendered[2].gt_depth;
    std::size_t textured = 0, covered = 0;
    double rel = 0.0;
    for (int y = 0; y < 120; ++y)
        for (int x = 0; x < 160; ++x) {
            if (!mask.at(x, y) || !depth_valid(gt.at(x, y)))
                continue;
            ++textured;
            if (!depth_valid(result.depth.at(x, y)))
                continue;
            ++covered;
            rel += std::abs(result.depth.at(x, y) - gt.at(x, y)) / gt.at(x, y);
        }
    REQUIRE(textured > 5000);
    CHECK(static_cast<double>(covered) / textured >= 0.95);
    CHECK(rel / covered < 0.01);

    SUBCASE("two levels stay within twice the single-level error") {
        PipelineConfig coarse(DepthBounds(8.0, 14.0));
        coarse.pyramid_levels = 2;
        const BundleResult two = estimate_bundle(views_of(rendered), coarse);
        const L1Result base = l1_metrics(result.depth, gt);
        const L1Result hier = l1_metrics(two.depth, gt);
        CHECK(hier.l1_rel < 2.0 * base.l1_rel);
    }
}

TEST_CASE("a tilted sweep normal reconstructs a matching surface") {
    SyntheticScene scene = slanted_scene(120, 90, 120.0, 8.0, 30.0, 5, 0.6, 10);
    scene.texture_scale = 0.4;
    const auto rendered = render_scene(scene);
    PipelineConfig config(DepthBounds(5.0, 13.0));
    config.pyramid_levels = 1;
    const double rad = 30.0 * M_PI / 180.0;
    config.sweep_normal = Eigen::Vector3d(0.0, -std::sin(rad), -std::cos(rad));
    const BundleResult result = estimate_bundle(views_of(rendered), config);
    const L1Result l1 = l1_metrics(result.depth, rendered[2].gt_depth);
    CHECK(l1.l1_rel < 0.02);
    CHECK(l1.valid_both > 8000);
}

TEST_CASE("the coarsest level honors the plane cap") {
    SyntheticScene scene = fronto_scene(64, 48, 64.0, 9.0, 3, 0.8, 8);
    const auto rendered = render_scene(scene);
    PipelineConfig config(DepthBounds(7.0, 12.0));
    config.pyramid_levels = 1;
    config.max_planes = 8;
    const BundleResult result = estimate_bundle(views_of(rendered), config);
    std::size_t valid = 0;
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 64; ++x)
            valid += depth_valid(result.depth.at(x, y));
    CHECK(valid > 2000);
}

TEST_CASE("zero-baseline bundles are rejected as degenerate") {
    const auto rendered = render_scene(fronto_scene(32, 24, 40.0, 8.0, 3, 0.5, 6));
    std::vector<CalibratedView> bundle = {rendered[1].view, rendered[1].view,
                                          rendered[1].view};
    PipelineConfig config(DepthBounds(6.0, 10.0));
    config.pyramid_levels = 1;
    CHECK_THROWS_AS(estimate_bundle(bundle, config), GeometryError);
}

TEST_CASE("even or undersized bundles are rejected") {
    const auto rendered = render_scene(fronto_scene(32, 24, 40.0, 8.0, 4, 0.5, 6));
    PipelineConfig config(DepthBounds(6.0, 10.0));
    config.pyramid_levels = 1;
    CHECK_THROWS_AS(estimate_bundle(views_of(rendered), config), InvalidInputError);
}

TEST_CASE("surface-normal variant needs at least two levels") {
    PipelineConfig config(DepthBounds(6.0, 10.0));
    config.pyramid_levels = 1;
    config.sgm.variant = SgmVariant::SurfaceNormal;
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config.pyramid_levels = 2;
    CHECK_NOTHROW(config.validate());
}

TEST_CASE("bundle estimates are bit-identical across worker counts") {
    SyntheticScene scene = fronto_scene(64, 48, 64.0, 9.0, 3, 0.8, 12);
    const auto rendered = render_scene(scene);
    PipelineConfig config(DepthBounds(7.0, 12.0));
    config.pyramid_levels = 2;
    config.sgm.variant = SgmVariant::PathGradient;

    setenv("FASSMVS_THREADS", "1", 1);
    const BundleResult a = estimate_bundle(views_of(rendered), config);
    setenv("FASSMVS_THREADS", "6", 1);
    const BundleResult b = estimate_bundle(views_of(rendered), config);
    unsetenv("FASSMVS_THREADS");
    CHECK(a.depth == b.depth);
    CHECK(a.normals == b.normals);
    CHECK(a.confidence == b.confidence);
}
